//! Waypoint tour planning: coupled Dubins TSP through heading clusters and
//! the decoupled Euclidean-order baseline.

mod atsp;
mod cluster;
mod etsp;
mod field;
mod matrix;
mod planner;
mod refine;
mod tour;

pub use atsp::{solve_atsp, AtspBudget};
pub use cluster::{build_cluster_graph, candidate_heading, gtsp_to_atsp, ClusterGraph, NoonBean};
pub use etsp::{etsp_exact, euclidean_cycle_length, euclidean_path_length, solve_etsp};
pub use field::{Bounds, Field};
pub use matrix::CostMatrix;
pub use planner::{alternating_headings, euclidean_order, solve_dtsp_coupled, solve_dtsp_decoupled};
pub use tour::{tour_cost, Tour};

use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RoutingError {
    #[error("at least 2 targets are required, got {0}")]
    TooFewTargets(usize),
    #[error("targets {0} and {1} coincide")]
    DuplicateTarget(usize, usize),
    #[error("target {0} has non-finite coordinates")]
    NonFiniteTarget(usize),
    #[error("heading count must be at least 1, got {0}")]
    InvalidHeadingCount(usize),
    #[error("invalid cost matrix: {0}")]
    InvalidMatrix(String),
    #[error("node {0} has no allowed outgoing arc")]
    Infeasible(usize),
    #[error("invalid visiting order: {0}")]
    InvalidOrder(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
