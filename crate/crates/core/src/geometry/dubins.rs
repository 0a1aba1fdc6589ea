//! Shortest bounded-curvature paths for a forward-only vehicle.
//!
//! Every shortest path is one of six three-segment words built from left
//! arcs (`L`), right arcs (`R`) and straight lines (`S`). The segment
//! parameters are obtained in closed form in a frame normalized by the
//! turning radius.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::{mod_two_pi, Configuration};
use super::GeometryError;

/// Segment kind inside a Dubins word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Left,
    Straight,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DubinsWord {
    LSL,
    RSR,
    LSR,
    RSL,
    RLR,
    LRL,
}

impl DubinsWord {
    /// Enumeration order used for tie-breaking: first minimum wins.
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::LSL,
        DubinsWord::RSR,
        DubinsWord::LSR,
        DubinsWord::RSL,
        DubinsWord::RLR,
        DubinsWord::LRL,
    ];

    pub fn segments(self) -> [SegmentKind; 3] {
        use SegmentKind::*;
        match self {
            DubinsWord::LSL => [Left, Straight, Left],
            DubinsWord::RSR => [Right, Straight, Right],
            DubinsWord::LSR => [Left, Straight, Right],
            DubinsWord::RSL => [Right, Straight, Left],
            DubinsWord::RLR => [Right, Left, Right],
            DubinsWord::LRL => [Left, Right, Left],
        }
    }
}

impl fmt::Display for DubinsWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// A Dubins curve between two poses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DubinsPath {
    word: DubinsWord,
    seg_lengths: [f64; 3],
    rho: f64,
    start: Configuration,
    end: Configuration,
}

// Normalized arc parameters below this are treated as zero; removes
// near-2π wrap artifacts from `mod_two_pi`.
const PARAM_EPS: f64 = 1e-10;

fn clean(param: f64) -> f64 {
    if param < PARAM_EPS || TAU - param < PARAM_EPS {
        0.0
    } else {
        param
    }
}

/// Normalized segment parameters `(t, p, q)` of one word, or `None` when
/// the word does not exist for this geometry.
fn word_params(word: DubinsWord, alpha: f64, beta: f64, d: f64) -> Option<[f64; 3]> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let c_ab = (alpha - beta).cos();
    match word {
        DubinsWord::LSL => {
            let p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb);
            if p_sq < -1e-12 {
                return None;
            }
            let p = p_sq.max(0.0).sqrt();
            if p < 1e-9 {
                // coincident left circles: one arc carries the whole turn
                return Some([clean(mod_two_pi(beta - alpha)), 0.0, 0.0]);
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([clean(mod_two_pi(tmp - alpha)), p, clean(mod_two_pi(beta - tmp))])
        }
        DubinsWord::RSR => {
            let p_sq = 2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa);
            if p_sq < -1e-12 {
                return None;
            }
            let p = p_sq.max(0.0).sqrt();
            if p < 1e-9 {
                return Some([clean(mod_two_pi(alpha - beta)), 0.0, 0.0]);
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([clean(mod_two_pi(alpha - tmp)), p, clean(mod_two_pi(tmp - beta))])
        }
        DubinsWord::LSR => {
            let p_sq = -2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb);
            if p_sq < 0.0 {
                return None;
            }
            let p = p_sq.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([clean(mod_two_pi(tmp - alpha)), p, clean(mod_two_pi(tmp - beta))])
        }
        DubinsWord::RSL => {
            let p_sq = -2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb);
            if p_sq < 0.0 {
                return None;
            }
            let p = p_sq.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([clean(mod_two_pi(alpha - tmp)), p, clean(mod_two_pi(beta - tmp))])
        }
        DubinsWord::RLR => {
            let tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod_two_pi(TAU - tmp.acos());
            let t = clean(mod_two_pi(alpha - (ca - cb).atan2(d - sa + sb) + p / 2.0));
            let q = clean(mod_two_pi(alpha - beta - t + p));
            Some([t, p, q])
        }
        DubinsWord::LRL => {
            let tmp = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod_two_pi(TAU - tmp.acos());
            let t = clean(mod_two_pi(-alpha - (ca - cb).atan2(d + sa - sb) + p / 2.0));
            let q = clean(mod_two_pi(beta - alpha - t + p));
            Some([t, p, q])
        }
    }
}

/// Advances `q` along one segment of arc length `len`.
pub(crate) fn advance(q: Configuration, kind: SegmentKind, len: f64, rho: f64) -> Configuration {
    let (x, y, th) = (q.x(), q.y(), q.theta());
    match kind {
        SegmentKind::Straight => Configuration::new(x + len * th.cos(), y + len * th.sin(), th),
        SegmentKind::Left => {
            let phi = len / rho;
            Configuration::new(
                x + rho * ((th + phi).sin() - th.sin()),
                y - rho * ((th + phi).cos() - th.cos()),
                th + phi,
            )
        }
        SegmentKind::Right => {
            let phi = len / rho;
            Configuration::new(
                x - rho * ((th - phi).sin() - th.sin()),
                y + rho * ((th - phi).cos() - th.cos()),
                th - phi,
            )
        }
    }
}

fn check_inputs(from: &Configuration, to: &Configuration, rho: f64) -> Result<(), GeometryError> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(GeometryError::InvalidRadius(rho));
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    Ok(())
}

impl DubinsPath {
    /// The path of one specific word, if it exists between the two poses.
    pub fn with_word(
        from: Configuration,
        to: Configuration,
        rho: f64,
        word: DubinsWord,
    ) -> Result<Option<DubinsPath>, GeometryError> {
        check_inputs(&from, &to, rho)?;
        let dx = to.x() - from.x();
        let dy = to.y() - from.y();
        let d = dx.hypot(dy) / rho;
        let phi = if d > 0.0 { dy.atan2(dx) } else { 0.0 };
        let alpha = mod_two_pi(from.theta() - phi);
        let beta = mod_two_pi(to.theta() - phi);
        Ok(word_params(word, alpha, beta, d).map(|p| DubinsPath {
            word,
            seg_lengths: [p[0] * rho, p[1] * rho, p[2] * rho],
            rho,
            start: from,
            end: to,
        }))
    }

    pub fn word(&self) -> DubinsWord {
        self.word
    }

    pub fn seg_lengths(&self) -> [f64; 3] {
        self.seg_lengths
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn start(&self) -> Configuration {
        self.start
    }

    pub fn end(&self) -> Configuration {
        self.end
    }

    pub fn length(&self) -> f64 {
        self.seg_lengths.iter().sum()
    }

    /// Pose reached after travelling `arc` meters from the start
    /// (clamped to the path).
    pub fn sample(&self, arc: f64) -> Configuration {
        let mut remaining = arc.clamp(0.0, self.length());
        let mut q = self.start;
        for (kind, &len) in self.word.segments().iter().zip(&self.seg_lengths) {
            let step = remaining.min(len);
            q = advance(q, *kind, step, self.rho);
            remaining -= step;
            if remaining <= 0.0 {
                break;
            }
        }
        q
    }

    /// Forward-integrates the full word from the start pose.
    pub fn replay_end(&self) -> Configuration {
        self.word
            .segments()
            .iter()
            .zip(&self.seg_lengths)
            .fold(self.start, |q, (kind, &len)| advance(q, *kind, len, self.rho))
    }
}

/// Minimum-length Dubins path from `from` to `to` with turning radius `rho`.
pub fn dubins_shortest(
    from: Configuration,
    to: Configuration,
    rho: f64,
) -> Result<DubinsPath, GeometryError> {
    let mut best: Option<DubinsPath> = None;
    for word in DubinsWord::ALL {
        if let Some(path) = DubinsPath::with_word(from, to, rho, word)? {
            if best.map_or(true, |b| path.length() < b.length()) {
                best = Some(path);
            }
        }
    }
    // LSL always exists (two coincident or separated circles admit an outer tangent)
    Ok(best.expect("LSL word always exists"))
}

/// Length of the shortest Dubins path.
pub fn dubins_distance(from: Configuration, to: Configuration, rho: f64) -> Result<f64, GeometryError> {
    dubins_shortest(from, to, rho).map(|p| p.length())
}
