use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use bintrack_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 256];
    let n = unsafe { bt_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let msg = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_owned();
    assert_eq!(msg.len(), n.min(255));
    msg
}

#[test]
fn transforms_roundtrip() {
    let mut p = BtVec2 { x: 0.0, y: 0.0 };
    assert_eq!(
        unsafe { bt_elliptic_to_local(1.2, 1.0, 3.0, &mut p) },
        BtStatus::Ok
    );
    let (mut xi, mut eta) = (0.0, 0.0);
    assert_eq!(
        unsafe { bt_local_to_elliptic(p, 3.0, &mut xi, &mut eta) },
        BtStatus::Ok
    );
    assert!((xi - 1.2).abs() < 1e-12 && (eta - 1.0).abs() < 1e-12);

    let d1 = ((p.x + 3.0).powi(2) + p.y.powi(2)).sqrt();
    let d2 = ((p.x - 3.0).powi(2) + p.y.powi(2)).sqrt();
    assert_eq!(
        unsafe { bt_distances_to_elliptic(d1, d2, 3.0, true, &mut xi, &mut eta) },
        BtStatus::Ok
    );
    assert!((xi - 1.2).abs() < 1e-12 && (eta - 1.0).abs() < 1e-12);
}

#[test]
fn errors_set_status_and_message() {
    let mut p = BtVec2 { x: 0.0, y: 0.0 };
    assert_eq!(
        unsafe { bt_elliptic_to_local(1.0, 1.0, -1.0, &mut p) },
        BtStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { bt_elliptic_to_local(1.0, 1.0, 1.0, ptr::null_mut()) },
        BtStatus::NullPointer
    );
    assert!(last_error().contains("out"));
    let (mut xi, mut eta) = (0.0, 0.0);
    // ranges violating the triangle inequality
    assert_eq!(
        unsafe { bt_distances_to_elliptic(1.0, 10.0, 1.0, true, &mut xi, &mut eta) },
        BtStatus::InvalidArgument
    );
    // success clears the message
    assert_eq!(
        unsafe { bt_elliptic_to_local(1.0, 1.0, 1.0, &mut p) },
        BtStatus::Ok
    );
    assert_eq!(last_error(), "");
}

#[test]
fn truncated_error_buffer_reports_full_length() {
    let name = CString::new("no-such-scenario").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { bt_scenario_builtin(name.as_ptr(), &mut s) },
        BtStatus::InvalidArgument
    );
    assert!(s.is_null());
    let full = unsafe { bt_last_error_message(ptr::null_mut(), 0) };
    let mut buf = [0 as c_char; 4];
    assert_eq!(
        unsafe { bt_last_error_message(buf.as_mut_ptr(), buf.len()) },
        full
    );
    assert_eq!(unsafe { CStr::from_ptr(buf.as_ptr()) }.to_bytes().len(), 3);
}

#[test]
fn control_is_zero_at_the_goal() {
    let goal = BtGoal {
        xi_star: 1.2,
        eta_star: std::f64::consts::FRAC_PI_2,
        c_star: 10.0,
    };
    let gains = BtGains {
        kappa_c: 0.1,
        kappa_eta: 1.0,
        kappa_xi: 1.0,
    };
    let target = BtVec2 {
        x: 0.0,
        y: 10.0 * 1.2f64.sinh(),
    };
    let mut out = BtControl {
        u_l: BtVec2 { x: 1.0, y: 1.0 },
        u_r: BtVec2 { x: 1.0, y: 1.0 },
    };
    let status = unsafe {
        bt_control(
            BtVec2 { x: -10.0, y: 0.0 },
            BtVec2 { x: 10.0, y: 0.0 },
            target,
            goal,
            gains,
            &mut out,
        )
    };
    assert_eq!(status, BtStatus::Ok);
    for v in [out.u_l, out.u_r] {
        assert!(v.x.abs() < 1e-9 && v.y.abs() < 1e-9, "{v:?}");
    }
    let bad = BtGains {
        kappa_c: -1.0,
        ..gains
    };
    let status = unsafe {
        bt_control(
            BtVec2 { x: -10.0, y: 0.0 },
            BtVec2 { x: 10.0, y: 0.0 },
            target,
            goal,
            bad,
            &mut out,
        )
    };
    assert_eq!(status, BtStatus::InvalidArgument);
}

#[test]
fn run_builtin_and_read_records() {
    let name = CString::new("fig3c").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { bt_scenario_builtin(name.as_ptr(), &mut s) },
        BtStatus::Ok
    );
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bt_run(s, 1000, &mut t) }, BtStatus::Ok);
    let n = unsafe { bt_trace_len(t) };
    assert_eq!(n, 61);
    let mut row = [0.0; BT_TRACE_WIDTH];
    assert_eq!(
        unsafe { bt_trace_record(t, n - 1, row.as_mut_ptr()) },
        BtStatus::Ok
    );
    assert_eq!(row[0], 600.0);
    let norm = (row[7].powi(2) + row[8].powi(2) + row[9].powi(2)).sqrt();
    assert!(norm < 1e-3);
    assert_eq!(
        unsafe { bt_trace_record(t, n, row.as_mut_ptr()) },
        BtStatus::OutOfRange
    );
    unsafe {
        bt_trace_free(t);
        bt_scenario_free(s);
    }
}

#[test]
fn toml_scenarios_parse_and_report_errors() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/fig4.toml");
    let text = std::fs::read_to_string(path).unwrap();
    let good = CString::new(text.replace("t_end = 400.0", "t_end = 1.0")).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { bt_scenario_from_toml(good.as_ptr(), &mut s) },
        BtStatus::Ok
    );
    let mut t = ptr::null_mut();
    // 0 keeps the file's decimation of 10
    assert_eq!(unsafe { bt_run(s, 0, &mut t) }, BtStatus::Ok);
    assert_eq!(unsafe { bt_trace_len(t) }, 11);
    unsafe {
        bt_trace_free(t);
        bt_scenario_free(s);
    }

    let bad = CString::new("dt = 0.01\nbogus = 1\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { bt_scenario_from_toml(bad.as_ptr(), &mut s) },
        BtStatus::ParseError
    );
    assert!(s.is_null());
    assert!(last_error().contains(":2:"), "{}", last_error());
}

#[test]
fn abort_returns_partial_trace() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/fig3a.toml");
    let text = std::fs::read_to_string(path)
        .unwrap()
        .replace("t_end = 600.0", "t_end = 20.0")
        .replace(
            "kind = \"stationary\"",
            "kind = \"waypoints\"\npoints = [[15.0, 25.0], [1.7e308, 25.0]]\nspeed = 1.5e307",
        );
    let text = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { bt_scenario_from_toml(text.as_ptr(), &mut s) },
        BtStatus::Ok
    );
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { bt_run(s, 0, &mut t) }, BtStatus::SimulationAborted);
    assert!(!t.is_null());
    assert!(unsafe { bt_trace_len(t) } > 0);
    assert!(
        last_error().contains("aborted") || last_error().contains("xi"),
        "{}",
        last_error()
    );
    unsafe {
        bt_trace_free(t);
        bt_scenario_free(s);
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        bt_trace_free(ptr::null_mut());
        bt_scenario_free(ptr::null_mut());
        assert_eq!(bt_trace_len(ptr::null()), 0);
        let mut t = ptr::null_mut();
        assert_eq!(bt_run(ptr::null(), 1, &mut t), BtStatus::NullPointer);
    }
}

#[test]
fn column_names_match_trace_layout() {
    let names: Vec<String> = (0..BT_TRACE_WIDTH)
        .map(|i| {
            unsafe { CStr::from_ptr(bt_trace_column_name(i)) }
                .to_str()
                .unwrap()
                .to_owned()
        })
        .collect();
    assert_eq!(
        names.join(","),
        "t,plx,ply,prx,pry,ptx,pty,e1,e2,e3,V,vc,veta,vxi,c"
    );
    assert!(bt_trace_column_name(BT_TRACE_WIDTH).is_null());
}

fn header() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bintrack.h")
}

#[test]
fn header_declares_the_api() {
    let text = std::fs::read_to_string(header()).unwrap();
    for sym in [
        "typedef struct BtScenario BtScenario;",
        "typedef struct BtTrace BtTrace;",
        "BT_STATUS_SIMULATION_ABORTED = 4",
        "bt_last_error_message",
        "bt_elliptic_to_local",
        "bt_local_to_elliptic",
        "bt_distances_to_elliptic",
        "bt_control",
        "bt_scenario_from_toml",
        "bt_scenario_builtin",
        "bt_scenario_free",
        "bt_run",
        "bt_trace_len",
        "bt_trace_record",
        "bt_trace_column_name",
        "bt_trace_free",
    ] {
        assert!(text.contains(sym), "missing {sym}");
    }
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "bintrack.h"

int main(void) {
    BtScenario *s = NULL;
    BtTrace *t = NULL;
    double row[BT_TRACE_WIDTH];
    if (bt_scenario_builtin("fig3a", &s) != BT_STATUS_OK) return 1;
    if (bt_run(s, 1000, &t) != BT_STATUS_OK) return 2;
    size_t n = bt_trace_len(t);
    if (bt_trace_record(t, n - 1, row) != BT_STATUS_OK) return 3;
    bt_trace_free(t);
    bt_scenario_free(s);
    printf("%zu %.3e\n", n, sqrt(row[7] * row[7] + row[8] * row[8] + row[9] * row[9]));
    return 0;
}
"#;

/// Directory holding the library artifacts of this test build.
fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = artifact_dir().join("libbintrack_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(header().parent().unwrap())
        .arg(&src)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut parts = text.split_whitespace();
    assert_eq!(parts.next(), Some("61"));
    let norm: f64 = parts.next().unwrap().parse().unwrap();
    assert!(norm < 1e-3, "{text}");
}
