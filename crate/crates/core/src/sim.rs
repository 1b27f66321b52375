//! Closed-loop simulation: two single-integrator vehicles driven by the
//! distance-only controller, a target following a prescribed path, and a
//! fixed-step RK4 integrator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{lyapunov, tracking_error_from, TrackingError};
use crate::controller::{command, Command, ControlError, FormationGoal, Gains, Measurements};
use crate::geometry::{BinocularFrame, GeometryError, Side, Vec2};

/// Vehicles closer than `COINCIDENCE_RATIO * c*` abort the run.
pub const COINCIDENCE_RATIO: f64 = 1e-12;

/// Upper limit on `max(kappa) * dt`.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("vehicles coincide (c = {c:e}) at t = {t}")]
    Coincident { t: f64, c: f64 },
    #[error("controller failed at t = {t}: {source}")]
    Control { t: f64, source: ControlError },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

impl StepError {
    pub fn time(&self) -> f64 {
        match *self {
            StepError::Coincident { t, .. }
            | StepError::Control { t, .. }
            | StepError::NonFinite { t } => t,
        }
    }
}

/// A run that stopped before `t_end`, with everything recorded up to then.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("simulation aborted at t = {}: {error}", error.time())]
pub struct SimAbort {
    pub error: StepError,
    pub partial: Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimState {
    #[serde(default)]
    pub t: f64,
    pub p_l: Vec2,
    pub p_r: Vec2,
    pub p_t: Vec2,
}

impl SimState {
    pub fn frame(&self) -> Result<BinocularFrame, GeometryError> {
        BinocularFrame::new(self.p_l, self.p_r)
    }

    fn is_finite(&self) -> bool {
        self.t.is_finite() && self.p_l.is_finite() && self.p_r.is_finite() && self.p_t.is_finite()
    }
}

/// Prescribed target motion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetTrajectory {
    Stationary,
    /// Uniform motion on a circle; positive `speed` is counterclockwise.
    Circular {
        center: Vec2,
        radius: f64,
        speed: f64,
    },
    /// Constant-speed traversal of a polyline starting at `points[0]`; the
    /// target stops at the last point.
    Waypoints {
        points: Vec<Vec2>,
        speed: f64,
    },
}

impl TargetTrajectory {
    /// Checks the trajectory and that it starts at `p0`.
    pub fn validate(&self, p0: Vec2) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        match self {
            TargetTrajectory::Stationary => Ok(()),
            TargetTrajectory::Circular {
                center,
                radius,
                speed,
            } => {
                if !(center.is_finite() && radius.is_finite() && *radius > 0.0 && speed.is_finite())
                {
                    return bad(
                        "circular trajectory needs a finite center, radius > 0 and finite speed",
                    );
                }
                let r0 = p0.distance(*center);
                if (r0 - radius).abs() > 1e-9 * radius.max(1.0) {
                    return Err(ScenarioError::Invalid(format!(
                        "initial target is {r0} from the circle center, radius is {radius}"
                    )));
                }
                Ok(())
            }
            TargetTrajectory::Waypoints { points, speed } => {
                if !(speed.is_finite() && *speed > 0.0) {
                    return bad("waypoint speed must be positive");
                }
                if points.len() < 2 || points.iter().any(|p| !p.is_finite()) {
                    return bad("waypoint trajectory needs at least two finite points");
                }
                if points.windows(2).any(|w| w[0] == w[1]) {
                    return bad("consecutive waypoints must be distinct");
                }
                if p0.distance(points[0]) > 1e-9 * p0.norm().max(1.0) {
                    return bad("initial target position must equal the first waypoint");
                }
                Ok(())
            }
        }
    }

    /// Target position `elapsed` seconds after the start, given the start
    /// position `p0`.
    pub fn position(&self, p0: Vec2, elapsed: f64) -> Vec2 {
        match self {
            TargetTrajectory::Stationary => p0,
            TargetTrajectory::Circular {
                center,
                radius,
                speed,
            } => {
                let d = p0 - *center;
                let theta = d.y.atan2(d.x) + speed / radius * elapsed;
                *center + Vec2::new(theta.cos(), theta.sin()) * *radius
            }
            TargetTrajectory::Waypoints { points, speed } => {
                let mut s = speed * elapsed.max(0.0);
                for w in points.windows(2) {
                    let seg = w[1] - w[0];
                    let len = seg.norm();
                    if s < len {
                        return w[0] + seg * (s / len);
                    }
                    s -= len;
                }
                *points.last().expect("validated")
            }
        }
    }

    /// Target velocity at `elapsed` seconds, target currently at `p_t`.
    pub fn velocity(&self, elapsed: f64, p_t: Vec2) -> Vec2 {
        match self {
            TargetTrajectory::Stationary => Vec2::ZERO,
            TargetTrajectory::Circular { center, speed, .. } => {
                let d = p_t - *center;
                let n = d.norm();
                if n == 0.0 {
                    return Vec2::ZERO;
                }
                d.perp() * (speed / n)
            }
            TargetTrajectory::Waypoints { points, speed } => {
                let mut s = speed * elapsed.max(0.0);
                for w in points.windows(2) {
                    let seg = w[1] - w[0];
                    let len = seg.norm();
                    if s < len {
                        return seg * (speed / len);
                    }
                    s -= len;
                }
                Vec2::ZERO
            }
        }
    }

    /// Largest target speed along the path.
    pub fn max_speed(&self) -> f64 {
        match self {
            TargetTrajectory::Stationary => 0.0,
            TargetTrajectory::Circular { speed, .. } => speed.abs(),
            TargetTrajectory::Waypoints { speed, .. } => *speed,
        }
    }

    /// Same path shape at a different speed.
    pub fn with_speed(&self, new_speed: f64) -> TargetTrajectory {
        match self {
            TargetTrajectory::Stationary => TargetTrajectory::Stationary,
            TargetTrajectory::Circular {
                center,
                radius,
                speed,
            } => TargetTrajectory::Circular {
                center: *center,
                radius: *radius,
                speed: if *speed < 0.0 { -new_speed } else { new_speed },
            },
            TargetTrajectory::Waypoints { points, .. } => TargetTrajectory::Waypoints {
                points: points.clone(),
                speed: new_speed,
            },
        }
    }
}

/// `target_velocity` as a free function.
pub fn target_velocity(traj: &TargetTrajectory, elapsed: f64, p_t: Vec2) -> Vec2 {
    traj.velocity(elapsed, p_t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub initial: SimState,
    pub goal: FormationGoal,
    pub gains: Gains,
    pub trajectory: TargetTrajectory,
    pub dt: f64,
    pub t_end: f64,
    /// Reserved for measurement noise; runs are noiseless.
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.goal.validate()?;
        self.gains.validate()?;
        if !self.initial.is_finite() {
            return Err(ScenarioError::Invalid(
                "initial state must be finite".into(),
            ));
        }
        if self.initial.p_l == self.initial.p_r {
            return Err(ScenarioError::Invalid(
                "initial vehicle positions must not coincide".into(),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ScenarioError::Invalid("dt must be positive".into()));
        }
        if !(self.t_end.is_finite() && self.t_end >= self.initial.t) {
            return Err(ScenarioError::Invalid(
                "t_end must not precede the initial time".into(),
            ));
        }
        if self.gains.max() * self.dt >= STABILITY_LIMIT {
            return Err(ScenarioError::Invalid(format!(
                "max gain * dt = {} must stay below {STABILITY_LIMIT}",
                self.gains.max() * self.dt
            )));
        }
        self.trajectory.validate(self.initial.p_t)
    }

    /// Number of integration steps from the initial time to `t_end`; the
    /// last one may be shorter than `dt`.
    pub fn step_count(&self) -> usize {
        let span = self.t_end - self.initial.t;
        let n = span / self.dt;
        let whole = (n + 1e-9).floor();
        if n - whole > 1e-9 {
            whole as usize + 1
        } else {
            whole as usize
        }
    }

    fn target_at(&self, t: f64) -> Vec2 {
        self.trajectory
            .position(self.initial.p_t, t - self.initial.t)
    }
}

/// Range measurements of a state; the side bit comes from the sign of the
/// target's local `y` (ties go to `Upper`).
pub fn measure(state: &SimState) -> Result<Measurements, GeometryError> {
    let frame = state.frame()?;
    Ok(Measurements {
        d12: state.p_l.distance(state.p_r),
        d1t: state.p_l.distance(state.p_t),
        d2t: state.p_r.distance(state.p_t),
        side: Side::of_local_y(frame.global_to_local(state.p_t).y),
    })
}

fn evaluate(state: &SimState, scenario: &Scenario) -> Result<(Command, Measurements), StepError> {
    let t = state.t;
    let c = 0.5 * state.p_l.distance(state.p_r);
    if c.is_nan() || c < COINCIDENCE_RATIO * scenario.goal.c_star {
        return Err(StepError::Coincident { t, c });
    }
    let geometry = |e: GeometryError| StepError::Control {
        t,
        source: ControlError::Geometry(e),
    };
    let frame = state.frame().map_err(geometry)?;
    let meas = measure(state).map_err(geometry)?;
    let cmd = command(&frame, &meas, &scenario.goal, &scenario.gains)
        .map_err(|source| StepError::Control { t, source })?;
    Ok((cmd, meas))
}

fn vehicle_rates(
    t: f64,
    p_l: Vec2,
    p_r: Vec2,
    scenario: &Scenario,
) -> Result<(Vec2, Vec2), StepError> {
    let state = SimState {
        t,
        p_l,
        p_r,
        p_t: scenario.target_at(t),
    };
    let (cmd, _) = evaluate(&state, scenario)?;
    Ok((cmd.output.u_l, cmd.output.u_r))
}

/// Advances by `h` with classical RK4 on the vehicle positions; the
/// controller is re-evaluated from synthesized ranges at each stage and the
/// target is placed on its path at the stage time.
pub fn step_by(state: &SimState, scenario: &Scenario, h: f64) -> Result<SimState, StepError> {
    let t = state.t;
    let (l1, r1) = vehicle_rates(t, state.p_l, state.p_r, scenario)?;
    let (l2, r2) = vehicle_rates(
        t + 0.5 * h,
        state.p_l + l1 * (0.5 * h),
        state.p_r + r1 * (0.5 * h),
        scenario,
    )?;
    let (l3, r3) = vehicle_rates(
        t + 0.5 * h,
        state.p_l + l2 * (0.5 * h),
        state.p_r + r2 * (0.5 * h),
        scenario,
    )?;
    let (l4, r4) = vehicle_rates(t + h, state.p_l + l3 * h, state.p_r + r3 * h, scenario)?;
    let w = h / 6.0;
    let next = SimState {
        t: t + h,
        p_l: state.p_l + (l1 + (l2 + l3) * 2.0 + l4) * w,
        p_r: state.p_r + (r1 + (r2 + r3) * 2.0 + r4) * w,
        p_t: scenario.target_at(t + h),
    };
    if !next.is_finite() {
        return Err(StepError::NonFinite { t: t + h });
    }
    Ok(next)
}

/// One step of length `scenario.dt`.
pub fn step(state: &SimState, scenario: &Scenario) -> Result<SimState, StepError> {
    step_by(state, scenario, scenario.dt)
}

/// Column names of [`TraceRecord`], in output order.
pub const TRACE_COLUMNS: [&str; 15] = [
    "t", "plx", "ply", "prx", "pry", "ptx", "pty", "e1", "e2", "e3", "V", "vc", "veta", "vxi", "c",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub p_l: Vec2,
    pub p_r: Vec2,
    pub p_t: Vec2,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub v: f64,
    pub v_c: f64,
    pub v_eta: f64,
    pub v_xi: f64,
    pub c: f64,
}

impl TraceRecord {
    pub fn error(&self) -> TrackingError {
        TrackingError {
            e1: self.e1,
            e2: self.e2,
            e3: self.e3,
        }
    }

    pub fn error_norm(&self) -> f64 {
        self.error().norm()
    }

    pub fn state(&self) -> SimState {
        SimState {
            t: self.t,
            p_l: self.p_l,
            p_r: self.p_r,
            p_t: self.p_t,
        }
    }

    /// Values in [`TRACE_COLUMNS`] order.
    pub fn values(&self) -> [f64; 15] {
        [
            self.t, self.p_l.x, self.p_l.y, self.p_r.x, self.p_r.y, self.p_t.x, self.p_t.y,
            self.e1, self.e2, self.e3, self.v, self.v_c, self.v_eta, self.v_xi, self.c,
        ]
    }

    pub fn from_values(v: &[f64; 15]) -> Self {
        Self {
            t: v[0],
            p_l: Vec2::new(v[1], v[2]),
            p_r: Vec2::new(v[3], v[4]),
            p_t: Vec2::new(v[5], v[6]),
            e1: v[7],
            e2: v[8],
            e3: v[9],
            v: v[10],
            v_c: v[11],
            v_eta: v[12],
            v_xi: v[13],
            c: v[14],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Snapshot of a state as the controller sees it.
pub fn record(state: &SimState, scenario: &Scenario) -> Result<TraceRecord, StepError> {
    let (cmd, meas) = evaluate(state, scenario)?;
    let e = tracking_error_from(meas.c(), cmd.coord, &scenario.goal);
    Ok(TraceRecord {
        t: state.t,
        p_l: state.p_l,
        p_r: state.p_r,
        p_t: state.p_t,
        e1: e.e1,
        e2: e.e2,
        e3: e.e3,
        v: lyapunov(&e),
        v_c: cmd.components.v_c,
        v_eta: cmd.components.v_eta,
        v_xi: cmd.components.v_xi,
        c: meas.c(),
    })
}

/// Runs the scenario recording every step.
pub fn run(scenario: &Scenario) -> Result<Trace, SimAbort> {
    run_decimated(scenario, 1)
}

/// Runs the scenario recording every `decimate`-th step plus the final one.
///
/// Panics if the scenario fails validation; callers load scenarios through
/// [`Scenario::validate`] first.
pub fn run_decimated(scenario: &Scenario, decimate: usize) -> Result<Trace, SimAbort> {
    assert!(
        scenario.validate().is_ok(),
        "scenario must be validated before running"
    );
    let decimate = decimate.max(1);
    let n = scenario.step_count();
    let t0 = scenario.initial.t;
    let mut trace = Trace::default();
    let mut state = scenario.initial;
    let abort = |error: StepError, partial: &Trace| SimAbort {
        error,
        partial: partial.clone(),
    };
    match record(&state, scenario) {
        Ok(r) => trace.records.push(r),
        Err(e) => return Err(abort(e, &trace)),
    }
    for k in 1..=n {
        let t_next = (t0 + k as f64 * scenario.dt).min(scenario.t_end);
        let h = t_next - state.t;
        state = match step_by(&state, scenario, h) {
            Ok(mut s) => {
                s.t = t_next;
                s
            }
            Err(e) => return Err(abort(e, &trace)),
        };
        if k % decimate == 0 || k == n {
            match record(&state, scenario) {
                Ok(r) => trace.records.push(r),
                Err(e) => return Err(abort(e, &trace)),
            }
        }
    }
    Ok(trace)
}
