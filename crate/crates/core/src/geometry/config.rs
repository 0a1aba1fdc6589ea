use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Signed shortest angular difference `a - b`, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b)
}

/// Wraps an angle into `[0, 2π)`.
pub fn mod_two_pi(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Planar pose `(x, y, θ)`. The heading is kept in `(-π, π]`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawConfiguration", into = "RawConfiguration")]
pub struct Configuration {
    x: f64,
    y: f64,
    theta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawConfiguration {
    x: f64,
    y: f64,
    theta: f64,
}

impl From<RawConfiguration> for Configuration {
    fn from(r: RawConfiguration) -> Self {
        Configuration::new(r.x, r.y, r.theta)
    }
}

impl From<Configuration> for RawConfiguration {
    fn from(c: Configuration) -> Self {
        RawConfiguration {
            x: c.x,
            y: c.y,
            theta: c.theta,
        }
    }
}

impl Configuration {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Configuration {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite()
    }

    /// Euclidean distance between the positions of two poses.
    pub fn distance(&self, other: &Configuration) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Pose difference `self ⊖ other` with the heading component wrapped.
    pub fn error_to(&self, other: &Configuration) -> [f64; 3] {
        [
            self.x - other.x,
            self.y - other.y,
            angle_diff(self.theta, other.theta),
        ]
    }

    /// True when positions agree within `pos_tol` and headings within `angle_tol`.
    pub fn approx_eq(&self, other: &Configuration, pos_tol: f64, angle_tol: f64) -> bool {
        self.distance(other) <= pos_tol && angle_diff(self.theta, other.theta).abs() <= angle_tol
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.theta)
    }
}
