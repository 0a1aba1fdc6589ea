use super::config::{angle_diff, normalize_angle, Configuration};
use super::dubins::DubinsPath;
use super::GeometryError;

/// Default spacing between reference samples, meters.
pub const DEFAULT_SAMPLE_STEP: f64 = 0.05;

// Remaining arc below this is merged into the snapped endpoint.
const ENDPOINT_MERGE: f64 = 1e-9;

/// Densely sampled path segment, parameterized over `s ∈ [0, 1]` by
/// normalized arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath {
    samples: Vec<Configuration>,
    cumulative: Vec<f64>,
    total_length: f64,
}

/// Interpolation interval containing a given `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Knot {
    pub index: usize,
    /// Position inside the interval, in `[0, 1]`.
    pub frac: f64,
}

impl ReferencePath {
    /// Builds a reference path from explicit samples; arc lengths are taken
    /// from the polyline.
    pub fn from_samples(samples: Vec<Configuration>) -> Result<Self, GeometryError> {
        if samples.is_empty() {
            return Err(GeometryError::EmptyPath);
        }
        let mut cumulative = Vec::with_capacity(samples.len());
        cumulative.push(0.0);
        for w in samples.windows(2) {
            let d = w[0].distance(&w[1]);
            if !(d > 0.0) {
                return Err(GeometryError::RepeatedSample);
            }
            cumulative.push(cumulative.last().unwrap() + d);
        }
        let total_length = *cumulative.last().unwrap();
        Ok(ReferencePath {
            samples,
            cumulative,
            total_length,
        })
    }

    pub fn samples(&self) -> &[Configuration] {
        &self.samples
    }

    pub fn cumulative_arclength(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn start(&self) -> Configuration {
        self.samples[0]
    }

    pub fn end(&self) -> Configuration {
        *self.samples.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Interval holding `s`; `s = 1` maps to the end of the last interval.
    /// Single-sample paths always report interval 0 with `frac = 0`.
    pub fn knot(&self, s: f64) -> Knot {
        let n = self.samples.len();
        if n < 2 || self.total_length <= 0.0 {
            return Knot { index: 0, frac: 0.0 };
        }
        let arc = s.clamp(0.0, 1.0) * self.total_length;
        // first index with cumulative > arc, minus one
        let upper = self.cumulative.partition_point(|&c| c <= arc);
        let index = upper.saturating_sub(1).min(n - 2);
        let span = self.cumulative[index + 1] - self.cumulative[index];
        let frac = ((arc - self.cumulative[index]) / span).clamp(0.0, 1.0);
        Knot { index, frac }
    }

    /// Interpolated pose at `s`, without domain checks.
    pub fn eval(&self, s: f64) -> Configuration {
        let k = self.knot(s);
        if self.samples.len() < 2 {
            return self.samples[0];
        }
        let a = self.samples[k.index];
        let b = self.samples[k.index + 1];
        if k.frac == 0.0 {
            return a;
        }
        if k.frac == 1.0 {
            return b;
        }
        let dth = angle_diff(b.theta(), a.theta());
        Configuration::new(
            a.x() + k.frac * (b.x() - a.x()),
            a.y() + k.frac * (b.y() - a.y()),
            normalize_angle(a.theta() + k.frac * dth),
        )
    }

    /// Derivative of the interpolant with respect to `s` on the interval
    /// holding `s` (one-sided at knots). Heading uses the shortest arc.
    pub fn derivative(&self, s: f64) -> [f64; 3] {
        if self.samples.len() < 2 || self.total_length <= 0.0 {
            return [0.0; 3];
        }
        let k = self.knot(s);
        let a = self.samples[k.index];
        let b = self.samples[k.index + 1];
        let ds = (self.cumulative[k.index + 1] - self.cumulative[k.index]) / self.total_length;
        [
            (b.x() - a.x()) / ds,
            (b.y() - a.y()) / ds,
            angle_diff(b.theta(), a.theta()) / ds,
        ]
    }

    /// Normalized parameter of the sample nearest to `(x, y)`.
    pub fn nearest_s(&self, x: f64, y: f64) -> f64 {
        if self.total_length <= 0.0 {
            return 1.0;
        }
        let (idx, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, q)| (i, (q.x() - x).hypot(q.y() - y)))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        (self.cumulative[idx] / self.total_length).clamp(0.0, 1.0)
    }
}

/// Samples a Dubins path every `step` meters of arc length; the last
/// sample is the exact analytic endpoint.
pub fn dubins_sample(path: &DubinsPath, step: f64) -> Result<ReferencePath, GeometryError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(GeometryError::InvalidStep(step));
    }
    let total = path.length();
    let mut samples = vec![path.start()];
    let mut cumulative = vec![0.0];
    if total > 0.0 {
        let mut k = 1usize;
        loop {
            let arc = k as f64 * step;
            if arc >= total - ENDPOINT_MERGE {
                break;
            }
            samples.push(path.sample(arc));
            cumulative.push(arc);
            k += 1;
        }
        samples.push(path.end());
        cumulative.push(total);
    }
    Ok(ReferencePath {
        samples,
        cumulative,
        total_length: total,
    })
}

/// Interpolated pose at normalized arc length `s ∈ [0, 1]`.
pub fn path_at(path: &ReferencePath, s: f64) -> Result<Configuration, GeometryError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(GeometryError::OutOfDomain(s));
    }
    Ok(path.eval(s))
}

/// Tolerance on shared endpoints between consecutive tour legs.
pub const CONTINUITY_TOL: f64 = 1e-6;

/// Samples each leg of a tour, in order.
pub fn concatenate(paths: &[DubinsPath], step: f64) -> Result<Vec<ReferencePath>, GeometryError> {
    for (i, w) in paths.windows(2).enumerate() {
        let gap = w[0].end().distance(&w[1].start());
        let dth = angle_diff(w[0].end().theta(), w[1].start().theta()).abs();
        if gap > CONTINUITY_TOL || dth > CONTINUITY_TOL {
            return Err(GeometryError::DiscontinuousTour {
                index: i + 1,
                gap: gap.max(dth),
            });
        }
    }
    paths.iter().map(|p| dubins_sample(p, step)).collect()
}
