//! Tracking error, Lyapunov function and the rate/bound quantities of the
//! closed-loop error dynamics.
//!
//! Notation follows the local frame of the pair: target at `(x, y)`, foci at
//! `(+-c, 0)`, and
//!
//! ```text
//! B     = x^2 + y^2 - c^2
//! G1    = sqrt(B^2 + 4 c^2 y^2)
//! G2    = 1 / (2 c^2 sqrt(p - p^2))      p = sin^2 eta
//! G3    = 1 / (2 c^2 sqrt(q^2 - q))      q = -sinh^2 xi
//! G_phi = sqrt(x^2 sin^4 eta + y^2 cos^4 eta)
//! g     = (x^2 + y^2) / c^2
//! h     = G1 / c^2
//! ```
//!
//! With a stationary target and constant `c` the error obeys
//! `e1' = -F1 e1`, `e2' = -F2 e2`, `e3' = -F3 e3 - 2 c x y kappa_eta (G3/G1) e2`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{FormationGoal, Gains, DEGENERATE_XY};
use crate::geometry::{compute_pq, BinocularFrame, EllipticCoord, GeometryError, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("parameter out of domain: {0}")]
    Domain(&'static str),
    #[error("target on a local coordinate axis; quantity undefined")]
    Degenerate,
}

/// `e = (2(c^2 - c*^2), eta - eta*, xi - xi*)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingError {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
}

impl TrackingError {
    pub fn norm(&self) -> f64 {
        (self.e1 * self.e1 + self.e2 * self.e2 + self.e3 * self.e3).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.e1, self.e2, self.e3]
    }
}

/// Error of a configuration, with `c` the half-distance of the frame.
pub fn tracking_error(
    frame: &BinocularFrame,
    target: EllipticCoord,
    goal: &FormationGoal,
) -> TrackingError {
    tracking_error_from(frame.c(), target, goal)
}

pub fn tracking_error_from(c: f64, target: EllipticCoord, goal: &FormationGoal) -> TrackingError {
    TrackingError {
        e1: 2.0 * (c * c - goal.c_star * goal.c_star),
        e2: target.eta - goal.eta_star,
        e3: target.xi - goal.xi_star,
    }
}

/// `V = (e1^2 + e2^2 + e3^2) / 2`.
pub fn lyapunov(e: &TrackingError) -> f64 {
    0.5 * (e.e1 * e.e1 + e.e2 * e.e2 + e.e3 * e.e3)
}

/// Intermediate quantities of a local target position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalTerms {
    pub x: f64,
    pub y: f64,
    pub c: f64,
    pub b: f64,
    pub g1: f64,
    pub p: f64,
    pub q: f64,
    /// `(x^2 + y^2) / c^2`
    pub g: f64,
    /// `G1 / c^2`
    pub h: f64,
}

impl LocalTerms {
    pub fn new(local: Vec2, c: f64) -> Result<Self, AnalysisError> {
        let pq = compute_pq(local, c)?;
        let Vec2 { x, y } = local;
        let c2 = c * c;
        let b = x * x + y * y - c2;
        let g1 = b.hypot(2.0 * c * y);
        Ok(Self {
            x,
            y,
            c,
            b,
            g1,
            p: pq.p,
            q: pq.q,
            g: (x * x + y * y) / c2,
            h: g1 / c2,
        })
    }

    pub fn is_degenerate(&self) -> bool {
        (self.x * self.y).abs() < DEGENERATE_XY * self.c * self.c
    }

    fn sgn_xy(&self) -> f64 {
        if self.x * self.y >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn g2(&self) -> f64 {
        1.0 / (2.0 * self.c * self.c * (self.p - self.p * self.p).sqrt())
    }

    pub fn g3(&self) -> f64 {
        1.0 / (2.0 * self.c * self.c * (self.q * self.q - self.q).sqrt())
    }

    /// `G_phi`, with `sin^2 eta = p` and `cos^2 eta = 1 - p`.
    pub fn g_phi(&self) -> f64 {
        let s2 = self.p;
        let c2 = 1.0 - self.p;
        (self.x * self.x * s2 * s2 + self.y * self.y * c2 * c2).sqrt()
    }

    /// `(d eta/dx, d eta/dy)`. Undefined on the axes.
    pub fn eta_gradient(&self) -> Vec2 {
        let s = self.sgn_xy() * self.g2();
        Vec2::new(
            s * (self.b / self.g1 - 1.0) * self.x,
            s * ((self.b + 2.0 * self.c * self.c) / self.g1 - 1.0) * self.y,
        )
    }

    /// `(d xi/dx, d xi/dy)`. Undefined where `xi = 0`.
    pub fn xi_gradient(&self) -> Vec2 {
        let g3 = self.g3();
        Vec2::new(
            g3 * (1.0 + self.b / self.g1) * self.x,
            g3 * (1.0 + (self.b + 2.0 * self.c * self.c) / self.g1) * self.y,
        )
    }
}

/// Rates `F1`, `F2`, `F3` at one state.
///
/// `f2` is the closed form `kappa_eta/(2c) sqrt(1 + (g/h)^2 + 2g/h - 1/h^2)`,
/// `f3` is `kappa_xi / (c^3 sqrt(h))` as written in the bound derivation.
/// The direct definitions are [`f2_direct`] and [`f3_direct`]; `f2` agrees
/// with its direct form, `f3` differs from its direct form
/// `kappa_xi / (c sqrt(h))` by a factor `c^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFunctions {
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub degenerate: bool,
}

/// `F1 = 2 c kappa_c / (c + c*)`.
pub fn f1(c: f64, c_star: f64, gains: &Gains) -> f64 {
    2.0 * c * gains.kappa_c / (c + c_star)
}

pub fn rate_functions(
    local_target: Vec2,
    c: f64,
    c_star: f64,
    gains: &Gains,
) -> Result<RateFunctions, AnalysisError> {
    let t = LocalTerms::new(local_target, c)?;
    let f1 = f1(c, c_star, gains);
    if t.is_degenerate() {
        return Ok(RateFunctions {
            f1,
            f2: 0.0,
            f3: 0.0,
            degenerate: true,
        });
    }
    let r = t.g / t.h;
    let f2 =
        gains.kappa_eta / (2.0 * c) * (1.0 + r * r + 2.0 * r - 1.0 / (t.h * t.h)).max(0.0).sqrt();
    let f3 = gains.kappa_xi / (c.powi(3) * t.h.sqrt());
    Ok(RateFunctions {
        f1,
        f2,
        f3,
        degenerate: false,
    })
}

/// `F2 = 2 c kappa_eta |xy| G2 / G1`.
pub fn f2_direct(local_target: Vec2, c: f64, gains: &Gains) -> Result<f64, AnalysisError> {
    let t = LocalTerms::new(local_target, c)?;
    if t.is_degenerate() {
        return Err(AnalysisError::Degenerate);
    }
    Ok(2.0 * c * gains.kappa_eta * (t.x * t.y).abs() * t.g2() / t.g1)
}

/// `F3 = 2 |xy| kappa_xi G3 / G_phi`.
pub fn f3_direct(local_target: Vec2, c: f64, gains: &Gains) -> Result<f64, AnalysisError> {
    let t = LocalTerms::new(local_target, c)?;
    if t.is_degenerate() {
        return Err(AnalysisError::Degenerate);
    }
    Ok(2.0 * (t.x * t.y).abs() * gains.kappa_xi * t.g3() / t.g_phi())
}

/// Closed-form error derivatives for a stationary target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRates {
    pub e1_dot: f64,
    pub e2_dot: f64,
    pub e3_dot: f64,
}

/// `e1' = -F1 e1`, `e2' = -F2 e2`, `e3' = -F3 e3 - 2cxy kappa_eta (G3/G1) e2`,
/// using the direct forms of `F2` and `F3`. Exact while `c` is constant; see
/// [`scaling_rates`] for the part contributed by a changing baseline.
pub fn error_rates(
    local_target: Vec2,
    c: f64,
    c_star: f64,
    gains: &Gains,
    e: &TrackingError,
) -> Result<ErrorRates, AnalysisError> {
    let t = LocalTerms::new(local_target, c)?;
    if t.is_degenerate() {
        return Err(AnalysisError::Degenerate);
    }
    let f2 = 2.0 * c * gains.kappa_eta * (t.x * t.y).abs() * t.g2() / t.g1;
    let f3 = 2.0 * (t.x * t.y).abs() * gains.kappa_xi * t.g3() / t.g_phi();
    let coupling = 2.0 * c * t.x * t.y * gains.kappa_eta * t.g3() / t.g1;
    Ok(ErrorRates {
        e1_dot: -f1(c, c_star, gains) * e.e1,
        e2_dot: -f2 * e.e2,
        e3_dot: -f3 * e.e3 - coupling * e.e2,
    })
}

/// `(eta', xi')` caused by the baseline growing at `c_dot` with the target's
/// local `(x, y)` held fixed: `-(c_dot / c) (x, y) . grad`.
pub fn scaling_rates(local_target: Vec2, c: f64, c_dot: f64) -> Result<(f64, f64), AnalysisError> {
    let t = LocalTerms::new(local_target, c)?;
    if t.is_degenerate() {
        return Err(AnalysisError::Degenerate);
    }
    let r = local_target * (-c_dot / c);
    Ok((r.dot(t.eta_gradient()), r.dot(t.xi_gradient())))
}

/// Region parameters of the lower bounds on `F2` (`|y| >= mu`) and `F3`
/// (`x^2 + y^2 <= nu^2`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub mu: f64,
    pub nu: f64,
}

impl Region {
    /// `mu = 0.1 c`, `nu = 10 c`.
    pub fn default_for(c: f64) -> Self {
        Self {
            mu: 0.1 * c,
            nu: 10.0 * c,
        }
    }

    pub fn contains(&self, local: Vec2) -> bool {
        local.y.abs() >= self.mu && local.norm_sq() <= self.nu * self.nu
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
}

/// Lower-bound constants at half-baseline `c`:
///
/// ```text
/// k1 = 2 min{ 2 kappa_c s / (s + c*), kappa_c },  s = sqrt(e1(t0)/2 + c*^2)
/// k2 = kappa_eta / c * sqrt(mu^2 / (mu^2 + c^2))
/// k3 = kappa_xi / (c^2 sqrt(nu^2 + c^2))
/// k4 = 2 min{k1, k2, k3}
/// ```
pub fn bound_constants(
    e1_init: f64,
    c_star: f64,
    c: f64,
    region: Region,
    gains: &Gains,
) -> Result<BoundConstants, AnalysisError> {
    if !(c_star.is_finite() && c_star > 0.0) {
        return Err(AnalysisError::Domain("c_star must be positive"));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(AnalysisError::Domain("c must be positive"));
    }
    let rad = e1_init / 2.0 + c_star * c_star;
    if !(rad.is_finite() && rad > 0.0) {
        return Err(AnalysisError::Domain("e1(t0)/2 + c*^2 must be positive"));
    }
    if !(region.mu > 0.0 && region.mu < c) {
        return Err(AnalysisError::Domain("mu must lie in (0, c)"));
    }
    if !(region.nu > c && region.nu.is_finite()) {
        return Err(AnalysisError::Domain("nu must exceed c"));
    }
    let s = rad.sqrt();
    let k1 = 2.0 * (2.0 * gains.kappa_c * s / (s + c_star)).min(gains.kappa_c);
    let mu2 = region.mu * region.mu;
    let k2 = gains.kappa_eta / c * (mu2 / (mu2 + c * c)).sqrt();
    let k3 = gains.kappa_xi / (c * c * (region.nu * region.nu + c * c).sqrt());
    let k4 = 2.0 * k1.min(k2).min(k3);
    Ok(BoundConstants { k1, k2, k3, k4 })
}

/// Common upper bound `eps / (c sqrt(h))` on `|g_eta|` and `|g_xi|` for a
/// target speed of at most `eps`.
pub fn perturbation_bound(local_target: Vec2, c: f64, eps: f64) -> Result<f64, AnalysisError> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(AnalysisError::Domain("eps must be finite and >= 0"));
    }
    let t = LocalTerms::new(local_target, c)?;
    Ok(eps / (c * t.h.sqrt()))
}

/// Contribution of target motion to `(eta', xi')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftTerms {
    pub g_eta: f64,
    pub g_xi: f64,
}

/// `g_eta = grad(eta) . v_t`, `g_xi = grad(xi) . v_t` for a target velocity
/// `v_t` expressed in the local frame.
pub fn drift_terms(
    local_target: Vec2,
    c: f64,
    target_velocity: Vec2,
) -> Result<DriftTerms, AnalysisError> {
    let t = LocalTerms::new(local_target, c)?;
    if target_velocity == Vec2::ZERO {
        return Ok(DriftTerms {
            g_eta: 0.0,
            g_xi: 0.0,
        });
    }
    if t.is_degenerate() {
        return Err(AnalysisError::Degenerate);
    }
    Ok(DriftTerms {
        g_eta: t.eta_gradient().dot(target_velocity),
        g_xi: t.xi_gradient().dot(target_velocity),
    })
}

/// Outcome of a sampled lower-bound check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCheck {
    pub points: usize,
    pub violations: usize,
    /// Smallest `F / k` observed.
    pub min_ratio: f64,
}

impl GridCheck {
    pub fn holds(&self) -> bool {
        self.points > 0 && self.violations == 0
    }
}

/// Relative slack for grid comparisons; the bounds are attained exactly at
/// region corners.
pub const GRID_RELATIVE_SLACK: f64 = 1e-12;

fn centered(n: usize, lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    let step = (hi - lo) / n as f64;
    (0..n).map(move |i| lo + (i as f64 + 0.5) * step)
}

/// `F2 >= k2` on an `n x n` grid: `x` cell-centred on `[-nu, nu]`, `|y|`
/// spanning `[mu, nu]` inclusive on both sides of the baseline.
pub fn check_f2_bound(
    c: f64,
    region: Region,
    gains: &Gains,
    n: usize,
) -> Result<GridCheck, AnalysisError> {
    let k = bound_constants(0.0, c, c, region, gains)?.k2;
    let half = (n / 2).max(2);
    let ys: Vec<f64> = (0..half)
        .map(|i| region.mu + (region.nu - region.mu) * i as f64 / (half - 1) as f64)
        .flat_map(|y| [y, -y])
        .collect();
    let mut check = GridCheck {
        points: 0,
        violations: 0,
        min_ratio: f64::INFINITY,
    };
    for x in centered(n, -region.nu, region.nu) {
        for &y in &ys {
            let r = rate_functions(Vec2::new(x, y), c, c, gains)?;
            tally(&mut check, r.f2, k);
        }
    }
    Ok(check)
}

/// `F3 >= k3` on the cell-centred `n x n` grid of `[-nu, nu]^2` restricted to
/// `x^2 + y^2 <= nu^2`.
pub fn check_f3_bound(
    c: f64,
    region: Region,
    gains: &Gains,
    n: usize,
) -> Result<GridCheck, AnalysisError> {
    let k = bound_constants(0.0, c, c, region, gains)?.k3;
    let mut check = GridCheck {
        points: 0,
        violations: 0,
        min_ratio: f64::INFINITY,
    };
    for x in centered(n, -region.nu, region.nu) {
        for y in centered(n, -region.nu, region.nu) {
            if x * x + y * y > region.nu * region.nu {
                continue;
            }
            let r = rate_functions(Vec2::new(x, y), c, c, gains)?;
            tally(&mut check, r.f3, k);
        }
    }
    Ok(check)
}

fn tally(check: &mut GridCheck, f: f64, k: f64) {
    check.points += 1;
    check.min_ratio = check.min_ratio.min(f / k);
    if f < k * (1.0 - GRID_RELATIVE_SLACK) {
        check.violations += 1;
    }
}

/// Least-squares line through `(t, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub samples: usize,
}

pub fn linear_fit(ts: &[f64], vs: &[f64]) -> Option<LinearFit> {
    let n = ts.len().min(vs.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mt = ts[..n].iter().sum::<f64>() / nf;
    let mv = vs[..n].iter().sum::<f64>() / nf;
    let (mut stt, mut stv, mut svv) = (0.0, 0.0, 0.0);
    for (t, v) in ts[..n].iter().zip(&vs[..n]) {
        let (dt, dv) = (t - mt, v - mv);
        stt += dt * dt;
        stv += dt * dv;
        svv += dv * dv;
    }
    if stt == 0.0 {
        return None;
    }
    let slope = stv / stt;
    let r2 = if svv == 0.0 {
        1.0
    } else {
        stv * stv / (stt * svv)
    };
    Some(LinearFit {
        slope,
        intercept: mv - slope * mt,
        r2,
        samples: n,
    })
}
