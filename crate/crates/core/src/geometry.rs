//! Elliptic coordinates induced by a pair of vehicles.
//!
//! The two vehicles are the foci `(-c, 0)` and `(c, 0)` of a local frame
//! whose origin is the midpoint of the baseline and whose `+x` axis points
//! from the left vehicle toward the right one. A point in that frame is
//! described either by Cartesian `(x, y)` or by elliptic `(xi, eta)`:
//!
//! ```text
//! x = c cosh(xi) cos(eta)
//! y = c sinh(xi) sin(eta)
//! ```
//!
//! Level sets of `xi` are confocal ellipses, level sets of `eta` are confocal
//! hyperbolae. The same coordinates can be recovered from the two
//! vehicle-to-target ranges alone, which is what makes the controller
//! distance-only.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack allowed on the triangle inequality before a set of range
/// measurements is declared inconsistent.
pub const MEASUREMENT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("focal half-distance must be positive and finite, got {0}")]
    NonPositiveFocal(f64),
    #[error("degenerate binocular frame: vehicles coincide at ({x}, {y})")]
    DegenerateFrame { x: f64, y: f64 },
    #[error("inconsistent range measurements d1t={d1t}, d2t={d2t} for c={c}")]
    InconsistentMeasurement { d1t: f64, d2t: f64, c: f64 },
    #[error("non-finite or out-of-domain value: {0}")]
    InvalidValue(&'static str),
}

/// A point or vector in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Counterclockwise quarter turn.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(v: [f64; 2]) -> Self {
        Vec2::new(v[0], v[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl fmt::Display for Vec2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

/// Which side of the baseline a point lies on.
///
/// `Upper` is the half-plane `y >= 0` of the local frame (`eta` in `[0, pi]`),
/// `Lower` the open half-plane `y < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    /// Ties (`y == 0`) go to `Upper`.
    pub fn of_local_y(y: f64) -> Side {
        if y >= 0.0 {
            Side::Upper
        } else {
            Side::Lower
        }
    }

    /// Side of an angular coordinate already normalized into `[0, 2pi)`.
    pub fn of_eta(eta: f64) -> Side {
        if eta <= PI {
            Side::Upper
        } else {
            Side::Lower
        }
    }

    /// `+1` for `Upper`, `-1` for `Lower`.
    pub fn sign(self) -> f64 {
        match self {
            Side::Upper => 1.0,
            Side::Lower => -1.0,
        }
    }
}

/// Elliptic coordinates `(xi, eta)` with `xi >= 0` and `eta` in `[0, 2pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticCoord {
    pub xi: f64,
    pub eta: f64,
}

impl EllipticCoord {
    /// Validates `xi` and wraps `eta` into `[0, 2pi)`.
    pub fn new(xi: f64, eta: f64) -> Result<Self, GeometryError> {
        if !xi.is_finite() || xi < 0.0 {
            return Err(GeometryError::InvalidValue("xi must be finite and >= 0"));
        }
        if !eta.is_finite() {
            return Err(GeometryError::InvalidValue("eta must be finite"));
        }
        Ok(Self {
            xi,
            eta: normalize_angle(eta),
        })
    }

    pub fn side(&self) -> Side {
        Side::of_eta(self.eta)
    }
}

/// Wraps an angle into `[0, 2pi)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// The pair `p = sin^2(eta)`, `q = -sinh^2(xi)` of a local point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQPair {
    pub p: f64,
    pub q: f64,
}

fn check_focal(c: f64) -> Result<(), GeometryError> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(GeometryError::NonPositiveFocal(c))
    }
}

/// Local Cartesian position of an elliptic coordinate for foci at `(+-c, 0)`.
pub fn elliptic_to_local(coord: EllipticCoord, c: f64) -> Result<Vec2, GeometryError> {
    check_focal(c)?;
    let (s, co) = coord.eta.sin_cos();
    Ok(Vec2::new(c * coord.xi.cosh() * co, c * coord.xi.sinh() * s))
}

/// `p` and `q` of a local point.
///
/// They are the two roots of `c^2 t^2 + B t - y^2 = 0` with
/// `B = x^2 + y^2 - c^2`. The larger-magnitude root is taken from the
/// quadratic formula and the other from the product `p q = -y^2 / c^2`,
/// which avoids the cancellation in `-B + sqrt(B^2 + 4c^2y^2)` when `B > 0`.
pub fn compute_pq(local: Vec2, c: f64) -> Result<PQPair, GeometryError> {
    check_focal(c)?;
    if !local.is_finite() {
        return Err(GeometryError::InvalidValue("local point must be finite"));
    }
    let c2 = c * c;
    let Vec2 { x, y } = local;
    let b = x * x + y * y - c2;
    let g1 = b.hypot(2.0 * c * y);
    let (p, q) = if b >= 0.0 {
        let q = (-b - g1) / (2.0 * c2);
        let p = if q < 0.0 { -(y * y) / (c2 * q) } else { 0.0 };
        (p, q)
    } else {
        let p = (-b + g1) / (2.0 * c2);
        let q = if p > 0.0 { -(y * y) / (c2 * p) } else { 0.0 };
        (p, q)
    };
    Ok(PQPair {
        p: p.clamp(0.0, 1.0),
        q: q.min(0.0),
    })
}

/// Elliptic coordinates of a local point.
///
/// `eta` follows the quadrant table on `x >= 0` / `y >= 0` with
/// `eta0 = asin(sqrt(p))`. `eta0` is evaluated as
/// `atan2(sqrt(p), sqrt(1 - p))` with `1 - p = x^2 / (c^2 (1 - q))`, which
/// is the same angle but keeps full precision next to `eta0 = pi/2`.
/// `xi = 1/2 ln(1 - 2q + 2 sqrt(q^2 - q))`.
pub fn local_to_elliptic(local: Vec2, c: f64) -> Result<EllipticCoord, GeometryError> {
    let PQPair { p, q } = compute_pq(local, c)?;
    let Vec2 { x, y } = local;
    let cos_part = x.abs() / (c * (1.0 - q).sqrt());
    let eta0 = p.sqrt().atan2(cos_part);
    let eta = if x >= 0.0 && y >= 0.0 {
        eta0
    } else if x < 0.0 && y >= 0.0 {
        PI - eta0
    } else if x <= 0.0 && y < 0.0 {
        PI + eta0
    } else {
        TAU - eta0
    };
    let xi = 0.5 * (-2.0 * q + 2.0 * (q * q - q).sqrt()).ln_1p();
    EllipticCoord::new(xi.max(0.0), eta)
}

/// Elliptic coordinates of the target from the two vehicle-to-target ranges.
///
/// `eta = acos((d1t - d2t) / 2c)` on the upper side and `2pi` minus that on
/// the lower side; `xi = acosh((d1t + d2t) / 2c)` from the constant
/// sum-of-distances property of the confocal ellipses. Ranges that violate
/// the triangle inequality by more than [`MEASUREMENT_TOLERANCE`] (relative)
/// are rejected; smaller violations are clamped.
pub fn distances_to_elliptic(
    d1t: f64,
    d2t: f64,
    c: f64,
    side: Side,
) -> Result<EllipticCoord, GeometryError> {
    check_focal(c)?;
    if !(d1t.is_finite() && d2t.is_finite()) || d1t < 0.0 || d2t < 0.0 {
        return Err(GeometryError::InvalidValue(
            "ranges must be finite and >= 0",
        ));
    }
    let base = 2.0 * c;
    let tol = MEASUREMENT_TOLERANCE * base.max(d1t + d2t);
    let diff = d1t - d2t;
    let sum = d1t + d2t;
    if diff.abs() > base + tol || sum < base - tol {
        return Err(GeometryError::InconsistentMeasurement { d1t, d2t, c });
    }
    let eta0 = (diff / base).clamp(-1.0, 1.0).acos();
    let eta = match side {
        Side::Upper => eta0,
        Side::Lower => TAU - eta0,
    };
    let xi = (sum / base).max(1.0).acosh();
    EllipticCoord::new(xi, eta)
}

/// The frame spanned by the two vehicles: origin at the midpoint, `+x` from
/// `p_l` toward `p_r`, foci at `(-c, 0)` and `(c, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinocularFrame {
    p_l: Vec2,
    p_r: Vec2,
    c: f64,
    axis: Vec2,
}

impl BinocularFrame {
    pub fn new(p_l: Vec2, p_r: Vec2) -> Result<Self, GeometryError> {
        if !(p_l.is_finite() && p_r.is_finite()) {
            return Err(GeometryError::InvalidValue(
                "vehicle positions must be finite",
            ));
        }
        let baseline = p_r - p_l;
        let len = baseline.norm();
        if len <= 0.0 {
            return Err(GeometryError::DegenerateFrame { x: p_l.x, y: p_l.y });
        }
        Ok(Self {
            p_l,
            p_r,
            c: 0.5 * len,
            axis: baseline * (1.0 / len),
        })
    }

    pub fn p_l(&self) -> Vec2 {
        self.p_l
    }

    pub fn p_r(&self) -> Vec2 {
        self.p_r
    }

    /// Half of the inter-vehicle distance.
    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn origin(&self) -> Vec2 {
        (self.p_l + self.p_r) * 0.5
    }

    /// Unit vector from `p_l` toward `p_r` (local `+x`).
    pub fn axis(&self) -> Vec2 {
        self.axis
    }

    /// Orientation of the local `+x` axis in the global frame.
    pub fn heading(&self) -> f64 {
        self.axis.y.atan2(self.axis.x)
    }

    pub fn global_to_local(&self, pt: Vec2) -> Vec2 {
        let d = pt - self.origin();
        Vec2::new(d.dot(self.axis), d.dot(self.axis.perp()))
    }

    pub fn local_to_global(&self, v: Vec2) -> Vec2 {
        self.origin() + self.vector_to_global(v)
    }

    /// Rotates a free vector (velocity, direction) from local to global.
    pub fn vector_to_global(&self, v: Vec2) -> Vec2 {
        self.axis * v.x + self.axis.perp() * v.y
    }

    /// Rotates a free vector from global to local.
    pub fn vector_to_local(&self, v: Vec2) -> Vec2 {
        Vec2::new(v.dot(self.axis), v.dot(self.axis.perp()))
    }
}

/// Free-function form of [`BinocularFrame::global_to_local`].
pub fn global_to_local(frame: &BinocularFrame, pt: Vec2) -> Vec2 {
    frame.global_to_local(pt)
}

/// Free-function form of [`BinocularFrame::local_to_global`].
pub fn local_to_global(frame: &BinocularFrame, v: Vec2) -> Vec2 {
    frame.local_to_global(v)
}
