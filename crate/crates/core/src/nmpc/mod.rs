//! Artificial-reference NMPC: a multiple-shooting optimal control problem
//! over one path segment, solved each sampling instant by an in-house
//! interior-point method.

mod controller;
mod problem;
pub mod solver;

pub use controller::{control_step, solve_ocp, OcpSolution};
pub use problem::{build_nlp, OcpNlp};
pub use solver::{NlpProblem, SolverOptions, SolverStatus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, Configuration};
use crate::routing::Bounds;
use crate::vehicle::{ControlInput, RobotLimits};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NmpcError {
    #[error("reference segment has no samples")]
    EmptySegment,
    #[error("invalid OCP parameters: {0}")]
    InvalidParams(String),
    #[error("non-finite initial state")]
    NonFiniteState,
}

/// Static disc obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OcpParams {
    /// Prediction horizon in steps.
    pub horizon: usize,
    pub dt: f64,
    pub q: [[f64; 3]; 3],
    pub r: [[f64; 2]; 2],
    pub q_s: f64,
    pub limits: RobotLimits,
    pub obstacles: Vec<Obstacle>,
    /// Optional rectangle the predicted positions must stay in.
    pub geofence: Option<Bounds>,
    pub max_iterations: usize,
}

impl Default for OcpParams {
    fn default() -> Self {
        OcpParams {
            horizon: 20,
            dt: 0.1,
            q: [[0.1, 0.0, 0.0], [0.0, 0.1, 0.0], [0.0, 0.0, 0.01]],
            r: [[0.1, 0.0], [0.0, 1.0]],
            q_s: 1e4,
            limits: RobotLimits::default(),
            obstacles: Vec::new(),
            geofence: None,
            max_iterations: 200,
        }
    }
}

fn positive_definite<const N: usize>(m: &[[f64; N]; N]) -> bool {
    let sym = (0..N).all(|i| (0..N).all(|j| (m[i][j] - m[j][i]).abs() <= 1e-12 * (1.0 + m[i][j].abs())));
    let mat = nalgebra::DMatrix::from_fn(N, N, |i, j| m[i][j]);
    sym && mat.iter().all(|v| v.is_finite()) && nalgebra::Cholesky::new(mat).is_some()
}

impl OcpParams {
    pub fn validate(&self) -> Result<(), NmpcError> {
        let bad = |m: &str| Err(NmpcError::InvalidParams(m.into()));
        if self.horizon < 2 {
            return bad("horizon must be at least 2");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !positive_definite(&self.q) {
            return bad("Q must be symmetric positive definite");
        }
        if !positive_definite(&self.r) {
            return bad("R must be symmetric positive definite");
        }
        if !(self.q_s > 0.0 && self.q_s.is_finite()) {
            return bad("q_s must be positive");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        self.limits.validate().map_err(|e| NmpcError::InvalidParams(e.0))?;
        for o in &self.obstacles {
            if !(o.x.is_finite() && o.y.is_finite() && o.radius > 0.0 && o.radius.is_finite()) {
                return bad("obstacles need finite centers and positive radii");
            }
        }
        if let Some(g) = &self.geofence {
            if !(g.min_x < g.max_x && g.min_y < g.max_y) {
                return bad("geofence must be a non-empty rectangle");
            }
        }
        Ok(())
    }

    /// Decision vector length: `3H` states, `2H` inputs, and `s̄`.
    pub fn n_vars(&self) -> usize {
        5 * self.horizon + 1
    }
}

fn quad<const N: usize>(m: &[[f64; N]; N], e: &[f64; N]) -> f64 {
    (0..N).map(|i| (0..N).map(|j| e[i] * m[i][j] * e[j]).sum::<f64>()).sum()
}

/// `(eᵀQe)² + (uᵀRu)²` with `e = x ⊖ reference` (heading wrapped).
pub fn stage_cost(x: &Configuration, u: &ControlInput, reference: &Configuration, q: &[[f64; 3]; 3], r: &[[f64; 2]; 2]) -> f64 {
    let e = [
        x.x() - reference.x(),
        x.y() - reference.y(),
        angle_diff(x.theta(), reference.theta()),
    ];
    let a = quad(q, &e);
    let b = quad(r, &[u.v, u.omega]);
    a * a + b * b
}

/// `q_s (1 − s̄)²`.
pub fn offset_cost(s_bar: f64, q_s: f64) -> f64 {
    q_s * (1.0 - s_bar).powi(2)
}
