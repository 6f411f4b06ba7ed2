//! Plane geometry for panel boundaries: points, quaternions, Bézier and
//! circular-arc evaluation.
//!
//! All lengths are centimeters. Curves are evaluated in the panel's own 2D
//! frame; the rigid placement into 3D lives on [`crate::pattern::Panel`].

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Distance (in cm) below which an arc's third point counts as collinear
/// with the endpoints, making the circumscribed circle degenerate.
pub const ARC_COLLINEAR_TOL: f64 = 1e-6;

/// A point in a panel's 2D frame, in cm. Serialized as a `[x, y]` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Serialize for Point2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y] = <[f64; 2]>::deserialize(d)?;
        Point2::new(x, y).map_err(D::Error::custom)
    }
}

impl Point2 {
    /// Builds a point, rejecting NaN/Inf components.
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeometryError::NonFinite { x, y });
        }
        Ok(Self { x, y })
    }

    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2 {
            x: (1.0 - t) * self.x + t * other.x,
            y: (1.0 - t) * self.y + t * other.y,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Unit quaternion (w, x, y, z) with a canonical sign so that equal rotations
/// compare equal: w >= 0, and if w == 0 the first nonzero of (x, y, z) >= 0.
///
/// Serialized as a `[w, x, y, z]` array; deserialization normalizes, so
/// files may carry non-unit quaternions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Serialize for Quaternion {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.as_array().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Quaternion {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [w, x, y, z] = <[f64; 4]>::deserialize(d)?;
        Quaternion::new(w, x, y, z).map_err(D::Error::custom)
    }
}

impl Quaternion {
    /// Normalizes and sign-canonicalizes. Rejects non-finite or zero input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeometryError> {
        if ![w, x, y, z].iter().all(|v| v.is_finite()) {
            return Err(GeometryError::NonFinite { x: w, y: x });
        }
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if norm < 1e-12 {
            return Err(GeometryError::ZeroQuaternion);
        }
        let q = Self {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        };
        Ok(q.canonicalized())
    }

    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Rotation of `angle` radians about the +Y axis.
    pub fn about_y(angle: f64) -> Self {
        Self::new((angle * 0.5).cos(), 0.0, (angle * 0.5).sin(), 0.0)
            .expect("finite angle produces a valid quaternion")
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    fn canonicalized(self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            Self {
                w: -self.w,
                x: -self.x,
                y: -self.y,
                z: -self.z,
            }
        } else {
            self
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn l2_dist(&self, other: &Quaternion) -> f64 {
        let a = self.as_array();
        let b = other.as_array();
        a.iter()
            .zip(b.iter())
            .map(|(p, q)| (p - q) * (p - q))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryError {
    NonFinite { x: f64, y: f64 },
    ZeroQuaternion,
    DegenerateArc { start: Point2, mid: Point2, end: Point2 },
    ParamOutOfRange { t: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonFinite { x, y } => write!(f, "non-finite coordinate ({x}, {y})"),
            Self::ZeroQuaternion => write!(f, "zero-length quaternion cannot be normalized"),
            Self::DegenerateArc { start, mid, end } => write!(
                f,
                "arc through {start}, {mid}, {end} is degenerate (collinear points)"
            ),
            Self::ParamOutOfRange { t } => write!(f, "curve parameter {t} outside [0, 1]"),
        }
    }
}

impl std::error::Error for GeometryError {}

/// Quadratic Bézier with endpoints `p0`, `p1` and control `c`.
pub fn quad_bezier(p0: Point2, c: Point2, p1: Point2, t: f64) -> Point2 {
    let u = 1.0 - t;
    Point2 {
        x: u * u * p0.x + 2.0 * u * t * c.x + t * t * p1.x,
        y: u * u * p0.y + 2.0 * u * t * c.y + t * t * p1.y,
    }
}

/// Cubic Bézier with endpoints `p0`, `p1` and controls `c1`, `c2`.
pub fn cubic_bezier(p0: Point2, c1: Point2, c2: Point2, p1: Point2, t: f64) -> Point2 {
    let u = 1.0 - t;
    let uu = u * u;
    let tt = t * t;
    Point2 {
        x: uu * u * p0.x + 3.0 * uu * t * c1.x + 3.0 * u * tt * c2.x + tt * t * p1.x,
        y: uu * u * p0.y + 3.0 * uu * t * c1.y + 3.0 * u * tt * c2.y + tt * t * p1.y,
    }
}

/// Circle through three non-collinear points: (center, radius).
pub fn circumcircle(a: Point2, b: Point2, c: Point2) -> Result<(Point2, f64), GeometryError> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    // |d| / (2 * chord) is the distance of b from line ac scaled by the
    // chord length; compare against the collinearity tolerance in cm.
    let chord = a.dist(&c).max(a.dist(&b)).max(b.dist(&c));
    if chord <= 0.0 || d.abs() / (2.0 * chord) < ARC_COLLINEAR_TOL {
        return Err(GeometryError::DegenerateArc {
            start: a,
            mid: b,
            end: c,
        });
    }
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point2 { x: ux, y: uy };
    Ok((center, center.dist(&a)))
}

/// Point at parameter `t` on the circular arc from `start` to `end` passing
/// through `mid`, parameterized by angle swept from the start.
pub fn arc_point(start: Point2, mid: Point2, end: Point2, t: f64) -> Result<Point2, GeometryError> {
    let (center, radius) = circumcircle(start, mid, end)?;
    let a0 = (start.y - center.y).atan2(start.x - center.x);
    let am = (mid.y - center.y).atan2(mid.x - center.x);
    let a1 = (end.y - center.y).atan2(end.x - center.x);
    let tau = std::f64::consts::TAU;
    // Sweep counterclockwise from a0; if mid is not passed on the way to the
    // end, the arc runs clockwise instead.
    let to_mid = (am - a0).rem_euclid(tau);
    let to_end = (a1 - a0).rem_euclid(tau);
    let sweep = if to_mid <= to_end { to_end } else { to_end - tau };
    let angle = a0 + t * sweep;
    Ok(Point2 {
        x: center.x + radius * angle.cos(),
        y: center.y + radius * angle.sin(),
    })
}
