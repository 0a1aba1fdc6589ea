//! Oriented configurations, Dubins curves, and sampled reference paths.

mod config;
mod dubins;
mod reference;

pub use config::{angle_diff, mod_two_pi, normalize_angle, Configuration};
pub use dubins::{dubins_distance, dubins_shortest, DubinsPath, DubinsWord, SegmentKind};
pub use reference::{
    concatenate, dubins_sample, path_at, Knot, ReferencePath, CONTINUITY_TOL, DEFAULT_SAMPLE_STEP,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("turning radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("sampling step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("path parameter {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("tour leg {index} does not start where the previous leg ends (gap {gap:.3e})")]
    DiscontinuousTour { index: usize, gap: f64 },
    #[error("configuration has non-finite coordinates")]
    NonFinite,
    #[error("reference path has no samples")]
    EmptyPath,
    #[error("reference path has two coincident consecutive samples")]
    RepeatedSample,
}
