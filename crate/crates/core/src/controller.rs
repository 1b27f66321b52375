//! Binocular coordination law.
//!
//! The pair is steered as one rigid-ish body with three collective motions:
//! scaling of the baseline (`v_c`), rotation about the midpoint (`v_eta`) and
//! common translation (`v_xi`). Each is a proportional law on one of
//! `c`, `eta`, `xi`, and all three are computed from the inter-vehicle range
//! and the two vehicle-to-target ranges only.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    distances_to_elliptic, elliptic_to_local, BinocularFrame, EllipticCoord, GeometryError, Side,
    Vec2,
};

/// Below `DEGENERATE_XY * c^2` in `|x y|` the target is treated as lying on a
/// local coordinate axis.
pub const DEGENERATE_XY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControlError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("gain {name} must be positive and finite, got {value}")]
    InvalidGain { name: &'static str, value: f64 },
    #[error("invalid formation goal: {0}")]
    InvalidGoal(&'static str),
}

/// 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };
    /// Exact `R(pi/2)`.
    pub const QUARTER_TURN: Mat2 = Mat2 {
        m: [[0.0, -1.0], [1.0, 0.0]],
    };
    /// Exact `R(-pi/2)`.
    pub const NEG_QUARTER_TURN: Mat2 = Mat2 {
        m: [[0.0, 1.0], [-1.0, 0.0]],
    };
    /// Exact `R(pi)`.
    pub const HALF_TURN: Mat2 = Mat2 {
        m: [[-1.0, 0.0], [0.0, -1.0]],
    };

    pub fn apply(&self, v: Vec2) -> Vec2 {
        Vec2::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y,
            self.m[1][0] * v.x + self.m[1][1] * v.y,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut m = self.m;
        for (row, orow) in m.iter_mut().zip(o.m.iter()) {
            for (a, b) in row.iter_mut().zip(orow.iter()) {
                *a += b;
            }
        }
        Mat2 { m }
    }
}

impl Mul<Mat2> for f64 {
    type Output = Mat2;
    fn mul(self, a: Mat2) -> Mat2 {
        let mut m = a.m;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= self;
            }
        }
        Mat2 { m }
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

/// Counterclockwise rotation by `angle` radians.
pub fn rotation(angle: f64) -> Mat2 {
    let (s, c) = angle.sin_cos();
    Mat2 {
        m: [[c, -s], [s, c]],
    }
}

/// Proportional gains shared by both vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gains {
    pub kappa_c: f64,
    pub kappa_eta: f64,
    pub kappa_xi: f64,
}

impl Gains {
    pub fn new(kappa_c: f64, kappa_eta: f64, kappa_xi: f64) -> Result<Self, ControlError> {
        let g = Self {
            kappa_c,
            kappa_eta,
            kappa_xi,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        for (name, value) in [
            ("kappa_c", self.kappa_c),
            ("kappa_eta", self.kappa_eta),
            ("kappa_xi", self.kappa_xi),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(ControlError::InvalidGain { name, value });
            }
        }
        Ok(())
    }

    pub fn max(&self) -> f64 {
        self.kappa_c.max(self.kappa_eta).max(self.kappa_xi)
    }
}

/// Desired target placement `(xi*, eta*)` relative to the pair and desired
/// half-baseline `c*`.
///
/// The angular error is the raw difference `eta - eta*` on the `[0, 2pi)`
/// chart with no wrap-around, so a goal near the `0 / 2pi` seam should be
/// written on the same branch as the expected initial `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormationGoal {
    pub xi_star: f64,
    pub eta_star: f64,
    pub c_star: f64,
}

impl FormationGoal {
    pub fn new(xi_star: f64, eta_star: f64, c_star: f64) -> Result<Self, ControlError> {
        let g = Self {
            xi_star,
            eta_star,
            c_star,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), ControlError> {
        if !(self.c_star.is_finite() && self.c_star > 0.0) {
            return Err(ControlError::InvalidGoal("c_star must be positive"));
        }
        if !(self.xi_star.is_finite() && self.xi_star >= 0.0) {
            return Err(ControlError::InvalidGoal("xi_star must be >= 0"));
        }
        if !(self.eta_star.is_finite()
            && self.eta_star >= 0.0
            && self.eta_star < std::f64::consts::TAU)
        {
            return Err(ControlError::InvalidGoal("eta_star must lie in [0, 2pi)"));
        }
        Ok(())
    }

    pub fn coord(&self) -> EllipticCoord {
        EllipticCoord {
            xi: self.xi_star,
            eta: self.eta_star,
        }
    }

    pub fn side(&self) -> Side {
        Side::of_eta(self.eta_star)
    }
}

/// Range measurements available to the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurements {
    /// Inter-vehicle distance.
    pub d12: f64,
    /// Left vehicle to target.
    pub d1t: f64,
    /// Right vehicle to target.
    pub d2t: f64,
    pub side: Side,
}

impl Measurements {
    /// Half-baseline implied by the inter-vehicle range.
    pub fn c(&self) -> f64 {
        0.5 * self.d12
    }

    /// Target elliptic coordinates in the frame spanned by the pair.
    pub fn target_coord(&self) -> Result<EllipticCoord, GeometryError> {
        if !(self.d12.is_finite() && self.d12 > 0.0) {
            return Err(GeometryError::NonPositiveFocal(self.c()));
        }
        distances_to_elliptic(self.d1t, self.d2t, self.c(), self.side)
    }
}

/// Collective scaling, rotation and translation speeds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlComponents {
    pub v_c: f64,
    pub v_eta: f64,
    pub v_xi: f64,
}

/// Velocity commands of the two vehicles, global frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlOutput {
    pub u_l: Vec2,
    pub u_r: Vec2,
}

fn components_from(
    coord: EllipticCoord,
    c: f64,
    goal: &FormationGoal,
    gains: &Gains,
) -> ControlComponents {
    ControlComponents {
        v_c: gains.kappa_c * (goal.c_star - c),
        v_eta: gains.kappa_eta * (goal.eta_star - coord.eta),
        v_xi: gains.kappa_xi * (goal.xi_star - coord.xi),
    }
}

/// Proportional laws on `c`, `eta` and `xi`, with the target coordinates
/// recovered from the ranges.
pub fn control_components(
    meas: &Measurements,
    goal: &FormationGoal,
    gains: &Gains,
) -> Result<ControlComponents, ControlError> {
    let coord = meas.target_coord()?;
    Ok(components_from(coord, meas.c(), goal, gains))
}

/// Unit direction (local frame) along which the pair translates for
/// `v_xi > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationDirection {
    pub dir: Vec2,
    /// `true` when the target was on a local axis and the off-axis formula
    /// was replaced by its continuous extension or the focus fallback.
    pub degenerate: bool,
}

impl TranslationDirection {
    /// Angle `phi` with `R(phi) (1, 0) = dir`.
    pub fn angle(&self) -> f64 {
        self.dir.y.atan2(self.dir.x)
    }
}

fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Translation direction of the pair.
///
/// Off the local axes this is `-sgn(xy) (y cos^2 eta, x sin^2 eta) / G_phi`:
/// the pair moves against the outward normal of the target's ellipse, so the
/// target drifts outward relative to the pair and `xi` grows when
/// `v_xi > 0`. On an axis the same normal is evaluated as
/// `(sinh xi cos eta, cosh xi sin eta)`, which is continuous there. At a
/// focus that normal vanishes and the pair moves perpendicular to the
/// baseline so the target enters the goal's half-plane.
pub fn translation_direction(
    local_target: Vec2,
    coord: EllipticCoord,
    c: f64,
    goal_side: Side,
) -> TranslationDirection {
    let Vec2 { x, y } = local_target;
    let (s, co) = coord.eta.sin_cos();
    let xy = x * y;
    if xy.abs() >= DEGENERATE_XY * c * c {
        let raw = Vec2::new(y * co * co, x * s * s);
        let g_phi = raw.norm();
        if g_phi > 0.0 {
            return TranslationDirection {
                dir: raw * (-sgn(xy) / g_phi),
                degenerate: false,
            };
        }
    }
    let normal = Vec2::new(coord.xi.sinh() * co, coord.xi.cosh() * s);
    let n = normal.norm();
    let dir = if n > 1e-12 {
        normal * (-1.0 / n)
    } else {
        Vec2::new(0.0, -goal_side.sign())
    };
    TranslationDirection {
        dir,
        degenerate: true,
    }
}

/// Per-vehicle velocities `u_l = A_l (p_r - p_l)`, `u_r = A_r (p_r - p_l)`
/// with
///
/// ```text
/// A_l = (v_xi R(phi) + v_eta R(pi/2)  + v_c R(pi)) / 2c
/// A_r = (v_xi R(phi) + v_eta R(-pi/2) + v_c R(0))  / 2c
/// ```
///
/// where `R(phi)` turns the baseline onto the translation direction.
pub fn control_inputs(
    frame: &BinocularFrame,
    comps: &ControlComponents,
    d_hat: Vec2,
) -> ControlOutput {
    let baseline = frame.p_r() - frame.p_l();
    let inv = 1.0 / (2.0 * frame.c());
    let r_phi = rotation(d_hat.y.atan2(d_hat.x));
    let common = comps.v_xi * r_phi;
    let a_l = inv * (common + comps.v_eta * Mat2::QUARTER_TURN + comps.v_c * Mat2::HALF_TURN);
    let a_r = inv * (common + comps.v_eta * Mat2::NEG_QUARTER_TURN + comps.v_c * Mat2::IDENTITY);
    ControlOutput {
        u_l: a_l * baseline,
        u_r: a_r * baseline,
    }
}

/// Everything one controller evaluation produces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub coord: EllipticCoord,
    pub components: ControlComponents,
    pub direction: TranslationDirection,
    pub output: ControlOutput,
}

/// Full distance-only pipeline: ranges -> elliptic coordinates -> collective
/// speeds -> per-vehicle velocities.
///
/// `frame` supplies only the baseline vector `p_r - p_l` (known to the pair
/// from its own range and bearing); the target enters through `meas` alone.
pub fn command(
    frame: &BinocularFrame,
    meas: &Measurements,
    goal: &FormationGoal,
    gains: &Gains,
) -> Result<Command, ControlError> {
    let coord = meas.target_coord()?;
    let c = meas.c();
    let components = components_from(coord, c, goal, gains);
    let local = elliptic_to_local(coord, c)?;
    let direction = translation_direction(local, coord, c, goal.side());
    let output = control_inputs(frame, &components, direction.dir);
    Ok(Command {
        coord,
        components,
        direction,
        output,
    })
}
