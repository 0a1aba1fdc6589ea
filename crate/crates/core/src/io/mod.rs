//! File formats, experiment configuration, and the plan / simulate /
//! compare / generate workflows used by the command-line tool.

mod config;
mod experiment;
mod export;
mod field;

pub use config::{ExperimentConfig, PlannerKind};
pub use experiment::{
    compare, plan, simulate, CompareReport, CompareRow, FailureSummary, MissionSummary, Plan, SimulationOutcome,
    TourFile, WaypointSummary,
};
pub use export::{mission_csv, reference_csv, render_svg, MISSION_CSV_HEADER};
pub use field::{generate_field, parse_field, read_field, write_field, MAX_PACKING_ATTEMPTS};

use std::path::PathBuf;

use thiserror::Error;

use crate::routing::RoutingError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("invalid field: {0}")]
    Field(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid solver configuration: {0}")]
    Solver(String),
    #[error("could not place {count} targets {min_separation} m apart in {attempts} attempts")]
    PackingInfeasible {
        count: usize,
        min_separation: f64,
        attempts: usize,
    },
    #[error("planning failed: {0}")]
    Planning(#[from] RoutingError),
}

impl IoError {
    pub(crate) fn file(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        IoError::File {
            path: path.into(),
            source,
        }
    }
}
