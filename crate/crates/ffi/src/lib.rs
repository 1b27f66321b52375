//! C ABI for `bintrack`.
//!
//! Every function returns a [`BtStatus`]. On failure a thread-local message
//! is available through [`bt_last_error_message`]. Scenarios and traces are
//! opaque handles released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bintrack::cli::config::ScenarioFile;
use bintrack::cli::scenarios;
use bintrack::controller::{command, FormationGoal, Gains};
use bintrack::geometry::{
    distances_to_elliptic, elliptic_to_local, local_to_elliptic, BinocularFrame, EllipticCoord,
    Side, Vec2,
};
use bintrack::sim::{measure, run_decimated, Scenario, SimAbort, Trace, TRACE_COLUMNS};

/// Number of values per trace record.
pub const BT_TRACE_WIDTH: usize = 15;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    /// The simulation stopped early; the partial trace is still returned.
    SimulationAborted = 4,
    OutOfRange = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtVec2 {
    pub x: f64,
    pub y: f64,
}

impl From<BtVec2> for Vec2 {
    fn from(v: BtVec2) -> Self {
        Vec2::new(v.x, v.y)
    }
}

impl From<Vec2> for BtVec2 {
    fn from(v: Vec2) -> Self {
        BtVec2 { x: v.x, y: v.y }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtGoal {
    pub xi_star: f64,
    pub eta_star: f64,
    pub c_star: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtGains {
    pub kappa_c: f64,
    pub kappa_eta: f64,
    pub kappa_xi: f64,
}

/// Velocity commands of the left and right vehicle.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BtControl {
    pub u_l: BtVec2,
    pub u_r: BtVec2,
}

/// Opaque scenario handle.
pub struct BtScenario {
    scenario: Scenario,
    decimate: usize,
}

/// Opaque trace handle.
pub struct BtTrace {
    trace: Trace,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: BtStatus, msg: impl std::fmt::Display) -> BtStatus {
    set_error(msg.to_string());
    status
}

fn guard(f: impl FnOnce() -> BtStatus) -> BtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == BtStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(BtStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(BtStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, BtStatus> {
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(BtStatus::InvalidArgument, "string is not valid UTF-8"))
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL,
/// so a buffer of `return + 1` bytes always suffices.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn bt_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Local Cartesian position of the elliptic coordinate `(xi, eta)` for
/// foci at `(-c, 0)` and `(c, 0)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bt_elliptic_to_local(
    xi: f64,
    eta: f64,
    c: f64,
    out: *mut BtVec2,
) -> BtStatus {
    guard(|| {
        non_null!(out);
        let r = EllipticCoord::new(xi, eta).and_then(|coord| elliptic_to_local(coord, c));
        match r {
            Ok(v) => {
                *out = v.into();
                BtStatus::Ok
            }
            Err(e) => fail(BtStatus::InvalidArgument, e),
        }
    })
}

/// Elliptic coordinate of a local Cartesian point.
///
/// # Safety
/// `xi` and `eta` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bt_local_to_elliptic(
    point: BtVec2,
    c: f64,
    xi: *mut f64,
    eta: *mut f64,
) -> BtStatus {
    guard(|| {
        non_null!(xi, eta);
        match local_to_elliptic(point.into(), c) {
            Ok(coord) => {
                *xi = coord.xi;
                *eta = coord.eta;
                BtStatus::Ok
            }
            Err(e) => fail(BtStatus::InvalidArgument, e),
        }
    })
}

/// Elliptic coordinate from the target's ranges to the left and right
/// vehicle. `upper` selects the half-plane (`y >= 0`) of the target.
///
/// # Safety
/// `xi` and `eta` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bt_distances_to_elliptic(
    d_left: f64,
    d_right: f64,
    c: f64,
    upper: bool,
    xi: *mut f64,
    eta: *mut f64,
) -> BtStatus {
    guard(|| {
        non_null!(xi, eta);
        let side = if upper { Side::Upper } else { Side::Lower };
        match distances_to_elliptic(d_left, d_right, c, side) {
            Ok(coord) => {
                *xi = coord.xi;
                *eta = coord.eta;
                BtStatus::Ok
            }
            Err(e) => fail(BtStatus::InvalidArgument, e),
        }
    })
}

/// Velocity commands for vehicles at `p_l`, `p_r` tracking a target at
/// `p_t`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bt_control(
    p_l: BtVec2,
    p_r: BtVec2,
    p_t: BtVec2,
    goal: BtGoal,
    gains: BtGains,
    out: *mut BtControl,
) -> BtStatus {
    guard(|| {
        non_null!(out);
        let goal = match FormationGoal::new(goal.xi_star, goal.eta_star, goal.c_star) {
            Ok(g) => g,
            Err(e) => return fail(BtStatus::InvalidArgument, e),
        };
        let gains = match Gains::new(gains.kappa_c, gains.kappa_eta, gains.kappa_xi) {
            Ok(g) => g,
            Err(e) => return fail(BtStatus::InvalidArgument, e),
        };
        let state = bintrack::sim::SimState {
            t: 0.0,
            p_l: p_l.into(),
            p_r: p_r.into(),
            p_t: p_t.into(),
        };
        let r = BinocularFrame::new(state.p_l, state.p_r)
            .map_err(|e| e.to_string())
            .and_then(|frame| {
                let meas = measure(&state).map_err(|e| e.to_string())?;
                command(&frame, &meas, &goal, &gains).map_err(|e| e.to_string())
            });
        match r {
            Ok(cmd) => {
                *out = BtControl {
                    u_l: cmd.output.u_l.into(),
                    u_r: cmd.output.u_r.into(),
                };
                BtStatus::Ok
            }
            Err(msg) => fail(BtStatus::InvalidArgument, msg),
        }
    })
}

fn store_scenario(file: ScenarioFile, out: *mut *mut BtScenario) -> BtStatus {
    let handle = Box::new(BtScenario {
        scenario: file.scenario(),
        decimate: file.decimate,
    });
    unsafe { *out = Box::into_raw(handle) };
    BtStatus::Ok
}

/// Parses a TOML scenario document.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bt_scenario_from_toml(
    text: *const c_char,
    out: *mut *mut BtScenario,
) -> BtStatus {
    guard(|| {
        non_null!(text, out);
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match ScenarioFile::parse(text, "<string>".as_ref()) {
            Ok(file) => store_scenario(file, out),
            Err(e) => fail(BtStatus::ParseError, e),
        }
    })
}

/// One of the built-in scenarios (`fig3a` .. `fig5`).
///
/// # Safety
/// `name` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn bt_scenario_builtin(
    name: *const c_char,
    out: *mut *mut BtScenario,
) -> BtStatus {
    guard(|| {
        non_null!(name, out);
        *out = ptr::null_mut();
        let name = match read_str(name) {
            Ok(n) => n,
            Err(status) => return status,
        };
        match scenarios::builtin(name) {
            Some(s) => store_scenario(ScenarioFile::from_scenario(&s, 10), out),
            None => fail(
                BtStatus::InvalidArgument,
                format!("no built-in scenario `{name}`"),
            ),
        }
    })
}

/// # Safety
/// `scenario` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bt_scenario_free(scenario: *mut BtScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Simulates `scenario`, recording every `decimate`-th step (0 uses the
/// scenario's own setting). On `BT_STATUS_SIMULATION_ABORTED` `*out` still
/// receives the partial trace.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn bt_run(
    scenario: *const BtScenario,
    decimate: usize,
    out: *mut *mut BtTrace,
) -> BtStatus {
    guard(|| {
        non_null!(scenario, out);
        *out = ptr::null_mut();
        let handle = &*scenario;
        let decimate = if decimate == 0 {
            handle.decimate
        } else {
            decimate
        };
        let (trace, status) = match run_decimated(&handle.scenario, decimate) {
            Ok(trace) => (trace, BtStatus::Ok),
            Err(SimAbort { error, partial }) => {
                let status = fail(BtStatus::SimulationAborted, &error);
                (partial, status)
            }
        };
        *out = Box::into_raw(Box::new(BtTrace { trace }));
        status
    })
}

/// Number of records in `trace`, or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bt_trace_len(trace: *const BtTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// Writes record `index` as `BT_TRACE_WIDTH` values in the column order of
/// [`bt_trace_column_name`].
///
/// # Safety
/// `trace` must be null or a live handle; `values` must be null or valid for
/// `BT_TRACE_WIDTH` writes.
#[no_mangle]
pub unsafe extern "C" fn bt_trace_record(
    trace: *const BtTrace,
    index: usize,
    values: *mut f64,
) -> BtStatus {
    guard(|| {
        non_null!(trace, values);
        let trace = &*trace;
        match trace.trace.records.get(index) {
            Some(r) => {
                ptr::copy_nonoverlapping(r.values().as_ptr(), values, BT_TRACE_WIDTH);
                BtStatus::Ok
            }
            None => fail(BtStatus::OutOfRange, format!("record {index} out of range")),
        }
    })
}

/// Static NUL-terminated name of trace column `index`, or null when out of
/// range.
#[no_mangle]
pub extern "C" fn bt_trace_column_name(index: usize) -> *const c_char {
    const NAMES: [&CStr; BT_TRACE_WIDTH] = [
        c"t", c"plx", c"ply", c"prx", c"pry", c"ptx", c"pty", c"e1", c"e2", c"e3", c"V", c"vc",
        c"veta", c"vxi", c"c",
    ];
    debug_assert!(NAMES
        .iter()
        .zip(TRACE_COLUMNS)
        .all(|(a, b)| a.to_bytes() == b.as_bytes()));
    NAMES.get(index).map_or(ptr::null(), |n| n.as_ptr())
}

/// # Safety
/// `trace` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bt_trace_free(trace: *mut BtTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
