use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::nmpc::{Obstacle, OcpParams};
use crate::routing::AtspBudget;
use crate::vehicle::{RobotLimits, DEFAULT_RATE_DIVISOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    /// Joint order and heading selection over `k` candidate headings.
    Coupled,
    /// Euclidean order, then alternating headings.
    Decoupled,
    /// Euclidean order only; no headings and no curvature limit.
    EtspOnly,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Coupled => "coupled",
            PlannerKind::Decoupled => "decoupled",
            PlannerKind::EtspOnly => "etsp_only",
        }
    }
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "coupled" => Ok(PlannerKind::Coupled),
            "decoupled" => Ok(PlannerKind::Decoupled),
            "etsp_only" => Ok(PlannerKind::EtspOnly),
            _ => Err(format!("unknown planner \"{s}\" (expected coupled, decoupled, or etsp_only)")),
        }
    }
}

/// Every experiment parameter in one flat JSON object. Missing keys take
/// their defaults; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub planner: PlannerKind,
    /// Candidate headings per target for the coupled planner.
    pub k: usize,
    /// Planning turning radius, meters. Must not be below `r_min`; a small
    /// margin above it keeps the reference strictly inside the vehicle's
    /// turning capability.
    pub rho: f64,
    pub closed_tour: bool,
    pub seed: u64,
    /// Perturbation rounds for the tour heuristics.
    pub atsp_budget: usize,
    /// Reference path sampling step, meters.
    pub sample_step: f64,
    pub horizon: usize,
    pub dt: f64,
    pub q: [[f64; 3]; 3],
    pub r: [[f64; 2]; 2],
    pub q_s: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Per-step input change is limited to `u_max / rate_divisor`.
    pub rate_divisor: f64,
    pub r_min: f64,
    pub goal_pos_tol: f64,
    pub goal_heading_tol: f64,
    pub footprint_radius: f64,
    pub obstacles: Vec<Obstacle>,
    pub max_iterations: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ocp = OcpParams::default();
        let lim = ocp.limits;
        ExperimentConfig {
            planner: PlannerKind::Coupled,
            k: 10,
            rho: 0.55,
            closed_tour: true,
            seed: 0,
            atsp_budget: AtspBudget::default().iterations,
            sample_step: crate::geometry::DEFAULT_SAMPLE_STEP,
            horizon: ocp.horizon,
            dt: ocp.dt,
            q: ocp.q,
            r: ocp.r,
            q_s: ocp.q_s,
            v_max: lim.v_max,
            omega_max: lim.omega_max,
            rate_divisor: DEFAULT_RATE_DIVISOR,
            r_min: lim.r_min,
            goal_pos_tol: lim.goal_pos_tol,
            goal_heading_tol: lim.goal_heading_tol,
            footprint_radius: lim.footprint_radius,
            obstacles: Vec::new(),
            max_iterations: ocp.max_iterations,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| IoError::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn budget(&self) -> AtspBudget {
        AtspBudget {
            iterations: self.atsp_budget,
            max_time: None,
        }
    }

    pub fn limits(&self) -> RobotLimits {
        RobotLimits {
            v_min: 0.0,
            v_max: self.v_max,
            omega_max: self.omega_max,
            dv_max: self.v_max / self.rate_divisor,
            domega_max: self.omega_max / self.rate_divisor,
            r_min: self.r_min,
            goal_pos_tol: self.goal_pos_tol,
            goal_heading_tol: self.goal_heading_tol,
            footprint_radius: self.footprint_radius,
        }
    }

    pub fn ocp_params(&self) -> OcpParams {
        OcpParams {
            horizon: self.horizon,
            dt: self.dt,
            q: self.q,
            r: self.r,
            q_s: self.q_s,
            limits: self.limits(),
            obstacles: self.obstacles.clone(),
            geofence: None,
            max_iterations: self.max_iterations,
        }
    }

    /// Checks the planning fields. Controller and vehicle fields are
    /// checked separately by [`ExperimentConfig::validate_solver`].
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::Config(m));
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if !(self.sample_step > 0.0 && self.sample_step.is_finite()) {
            return bad("sample_step must be positive".into());
        }
        if self.atsp_budget == 0 {
            return bad("atsp_budget must be at least 1".into());
        }
        Ok(())
    }

    /// Checks the controller and vehicle fields, and that the planning
    /// radius is one the vehicle can follow.
    pub fn validate_solver(&self) -> Result<(), IoError> {
        if !(self.rate_divisor > 0.0 && self.rate_divisor.is_finite()) {
            return Err(IoError::Solver("rate_divisor must be positive".into()));
        }
        self.ocp_params().validate().map_err(|e| IoError::Solver(e.to_string()))?;
        if self.rho < self.r_min {
            return Err(IoError::Solver(format!(
                "planning radius rho = {} is below the vehicle's r_min = {}",
                self.rho, self.r_min
            )));
        }
        Ok(())
    }
}
