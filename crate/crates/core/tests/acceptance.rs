//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use bintrack::analysis::{
    check_f2_bound, check_f3_bound, drift_terms, error_rates, perturbation_bound, rate_functions,
    Region,
};
use bintrack::cli::commands::{simulate, SweepParam};
use bintrack::cli::config::ScenarioFile;
use bintrack::cli::scenarios;
use bintrack::controller::Gains;
use bintrack::geometry::{
    distances_to_elliptic, elliptic_to_local, local_to_elliptic, EllipticCoord, Side, Vec2,
};
use bintrack::sim::{run, Scenario, Trace};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn builtin(name: &str) -> Scenario {
    scenarios::builtin(name).unwrap()
}

fn aligned() -> Scenario {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/aligned.toml");
    ScenarioFile::load(path.as_ref()).unwrap().scenario()
}

fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn transforms() -> Verdict {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let (mut roundtrip, mut paths) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let xi = rng.random_range(0.01..5.0);
        let eta = rng.random_range(0.0..TAU);
        let c = rng.random_range(0.5..100.0);
        let coord = EllipticCoord::new(xi, eta).unwrap();
        let local = elliptic_to_local(coord, c).unwrap();
        let back = local_to_elliptic(local, c).unwrap();
        roundtrip = roundtrip
            .max((back.xi - xi).abs() / xi)
            .max(angle_dist(back.eta, eta) / eta.max(1.0));
        let d1 = local.distance(Vec2::new(-c, 0.0));
        let d2 = local.distance(Vec2::new(c, 0.0));
        let via_dist = distances_to_elliptic(d1, d2, c, Side::of_local_y(local.y)).unwrap();
        paths = paths
            .max((via_dist.xi - back.xi).abs() / back.xi)
            .max(angle_dist(via_dist.eta, back.eta));
    }
    let elapsed = start.elapsed();
    verdict(
        roundtrip < 1e-9 && paths < 1e-9 && elapsed < Duration::from_secs(1),
        format!(
            "roundtrip max rel err {roundtrip:.2e}, path disagreement {paths:.2e}, {elapsed:.2?}"
        ),
    )
}

fn stationary_convergence() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["fig3a", "fig3b", "fig3c", "fig3d"] {
        let out = simulate(&builtin(name), 10);
        let s = out.summary.unwrap();
        let settled = s.settle_time.is_some();
        let rate = s.fitted_rate.unwrap_or(f64::NAN);
        let r2 = s.fit_r2.unwrap_or(f64::NAN);
        ok &= out.completed() && settled && rate > 0.0 && r2 > 0.95;
        parts.push(format!(
            "{name}: settle {:?} rate {rate:.4} R2 {r2:.4}",
            s.settle_time
        ));
    }
    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(10);
    verdict(ok, format!("{}; {elapsed:.2?}", parts.join(", ")))
}

fn local_target(r: &bintrack::sim::TraceRecord) -> Vec2 {
    r.state().frame().unwrap().global_to_local(r.p_t)
}

/// Largest relative mismatch between central differences of the recorded
/// errors and the closed-form rates, per component.
fn derivative_mismatch(trace: &Trace, s: &Scenario) -> [f64; 3] {
    let mut worst = [0.0f64; 3];
    for w in trace.records.windows(3) {
        let (a, r, b) = (&w[0], &w[1], &w[2]);
        let local = local_target(r);
        if local.x.abs() < 1e-3 * r.c || local.y.abs() < 1e-3 * r.c {
            continue;
        }
        let h = b.t - a.t;
        let fd = [(b.e1 - a.e1) / h, (b.e2 - a.e2) / h, (b.e3 - a.e3) / h];
        let cf = error_rates(local, r.c, s.goal.c_star, &s.gains, &r.error()).unwrap();
        for (k, an) in [cf.e1_dot, cf.e2_dot, cf.e3_dot].into_iter().enumerate() {
            if an != 0.0 {
                worst[k] = worst[k].max(((fd[k] - an) / an).abs());
            }
        }
    }
    worst
}

fn derivative_consistency() -> Verdict {
    // Pair already at c = c*: the baseline does not change, so the rates are
    // exact for the eta and xi channels.
    let mut s = aligned();
    s.dt = 1e-3;
    s.t_end = 20.0;
    let held = derivative_mismatch(&run(&s).unwrap(), &s);
    // Baseline converging from c = 10: the c channel.
    let mut s = builtin("fig3a");
    s.dt = 1e-3;
    s.t_end = 20.0;
    let scaling = derivative_mismatch(&run(&s).unwrap(), &s);
    let worst = [scaling[0], held[1], held[2]];
    verdict(
        worst.iter().all(|&e| e < 1e-3),
        format!(
            "max rel err e1' {:.2e}, e2' {:.2e}, e3' {:.2e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn rate_lower_bounds() -> Verdict {
    let gains = Gains::new(0.1, 1.0, 1.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for c in [1.0, 20.0, 40.0] {
        let region = Region::default_for(c);
        let f2 = check_f2_bound(c, region, &gains, 200).unwrap();
        let f3 = check_f3_bound(c, region, &gains, 200).unwrap();
        ok &= f2.holds() && f3.holds();
        parts.push(format!(
            "c={c}: F2/k2 min {:.4} ({} pts), F3/k3 min {:.4} ({} pts)",
            f2.min_ratio, f2.points, f3.min_ratio, f3.points
        ));
    }
    // g = (x^2 + y^2) / c^2 = 1e6 on the diagonal
    let c = 20.0;
    let s = c * (1e6f64 / 2.0).sqrt();
    let f2 = rate_functions(Vec2::new(s, s), c, c, &gains).unwrap().f2;
    let limit = gains.kappa_eta / c;
    let rel = ((f2 - limit) / limit).abs();
    ok &= rel < 0.01;
    parts.push(format!("F2 at g=1e6 within {rel:.2e} of kappa_eta/c"));
    verdict(ok, parts.join("; "))
}

fn speed_proportionality() -> Verdict {
    let base = builtin("fig4");
    let speeds = [1.25, 2.5, 5.0];
    let bands: Vec<f64> = speeds
        .iter()
        .map(|&v| {
            let s = SweepParam::TargetSpeed.apply(&base, v).unwrap();
            let out = simulate(&s, 10);
            if out.completed() {
                out.summary.unwrap().steady_state_band
            } else {
                f64::NAN
            }
        })
        .collect();
    let per_speed: Vec<f64> = bands.iter().zip(speeds).map(|(b, v)| b / v).collect();
    let reference = per_speed[2];
    let ok = bands.iter().all(|b| b.is_finite() && *b > 0.0)
        && per_speed
            .iter()
            .all(|r| (0.5..=2.0).contains(&(r / reference)));
    verdict(
        ok,
        format!("bands {bands:.4?} at speeds {speeds:?}; band/speed {per_speed:.4?}"),
    )
}

fn perturbation_soundness() -> Verdict {
    let mut rng = StdRng::seed_from_u64(6);
    let (mut states, mut worst) = (0, 0.0f64);
    let mut violations = 0;
    while states < 1000 {
        let c = rng.random_range(0.5..50.0);
        let local = Vec2::new(
            rng.random_range(-20.0..20.0) * c,
            rng.random_range(-20.0..20.0) * c,
        );
        if (local.x * local.y).abs() < 1e-6 * c * c {
            continue;
        }
        states += 1;
        let eps = rng.random_range(0.1..10.0);
        let bound = perturbation_bound(local, c, eps).unwrap();
        for k in 0..360 {
            let th = k as f64 * PI / 180.0;
            let d = drift_terms(local, c, Vec2::new(th.cos(), th.sin()) * eps).unwrap();
            let ratio = d.g_eta.abs().max(d.g_xi.abs()) / bound;
            worst = worst.max(ratio);
            if ratio > 1.0 + 1e-12 {
                violations += 1;
            }
        }
    }
    verdict(
        violations == 0,
        format!(
            "{states} states x 360 headings, max |g|/bound {worst:.12}, {violations} violations"
        ),
    )
}

fn axis_targets() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["fig3c", "fig3d"] {
        let out = simulate(&builtin(name), 1);
        let finite = out.trace.records.iter().all(|r| r.is_finite());
        let s = out.summary.unwrap();
        ok &= out.completed() && finite && s.settle_time.is_some();
        parts.push(format!(
            "{name}: completed {}, finite {finite}, final |e| {:.2e}",
            out.completed(),
            s.final_error_norm
        ));
    }
    verdict(ok, parts.join(", "))
}

fn final_positions(s: &Scenario) -> [f64; 4] {
    let last = *run(s).unwrap().last().unwrap();
    [last.p_l.x, last.p_l.y, last.p_r.x, last.p_r.y]
}

fn max_diff(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn determinism_and_order() -> Verdict {
    let s = builtin("fig4");
    let bits = |t: &Trace| -> Vec<u64> {
        t.records
            .iter()
            .flat_map(|r| r.values())
            .map(f64::to_bits)
            .collect()
    };
    let identical = bits(&run(&s).unwrap()) == bits(&run(&s).unwrap());

    let mut smooth = builtin("fig3a");
    smooth.t_end = 10.0;
    let at = |dt: f64| {
        let mut s = smooth.clone();
        s.dt = dt;
        final_positions(&s)
    };
    let reference = at(0.0025);
    let coarse = max_diff(&at(0.08), &reference);
    let fine = max_diff(&at(0.04), &reference);
    let ratio = coarse / fine;
    verdict(
        identical && ratio >= 12.0,
        format!("bit-identical reruns {identical}; dt-halving error ratio {ratio:.2} ({coarse:.2e} -> {fine:.2e})"),
    )
}

type Check = fn() -> Verdict;

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("1 transform correctness", transforms),
        (
            "2 exponential convergence, stationary targets",
            stationary_convergence,
        ),
        ("3 derivative consistency", derivative_consistency),
        ("4 rate lower bounds", rate_lower_bounds),
        (
            "5 steady-state band proportional to target speed",
            speed_proportionality,
        ),
        ("6 perturbation bound soundness", perturbation_soundness),
        ("7 targets on the baseline axes", axis_targets),
        ("8 determinism and integrator order", determinism_and_order),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let v = check();
        println!(
            "{} criterion {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
