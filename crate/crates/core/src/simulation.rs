//! Closed-loop mission execution: measure, solve, apply, over every leg of
//! a tour, with waypoint arrival detection and mission metrics.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{angle_diff, Configuration, ReferencePath, CONTINUITY_TOL};
use crate::nmpc::{control_step, OcpParams, OcpSolution, SolverStatus};
use crate::routing::Tour;
use crate::vehicle::{rk4_step, ControlInput, RobotLimits};

/// Speed below which the robot counts as stopped at a waypoint.
pub const STOP_SPEED: f64 = 0.02;

/// Consecutive failed solves after which the mission is aborted.
pub const MAX_CONSECUTIVE_FAILURES: usize = 3;

/// Floor of the per-segment step cap.
pub const MIN_STEP_CAP: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Time of the measurement, seconds since mission start.
    pub t: f64,
    /// Leg being tracked.
    pub segment: usize,
    /// Measured state the controller saw.
    pub state: Configuration,
    /// Input applied over the following sampling interval.
    pub input: ControlInput,
    pub s_bar: f64,
    pub status: SolverStatus,
    pub iterations: usize,
    /// Wall-clock solve time in seconds.
    pub solve_time: f64,
    /// True when the solver failed and the fallback input was applied.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointRecord {
    /// Position in the tour.
    pub index: usize,
    /// Index of the target in the field.
    pub target: usize,
    pub arrival_time: f64,
    pub position_error: f64,
    pub heading_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub closed_loop_length: f64,
    pub reference_length: f64,
    pub min_turn_violations: usize,
    pub infeasible_solves: usize,
    pub steps: usize,
    pub total_iterations: usize,
    pub max_iterations_per_step: usize,
    pub elapsed: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub steps: Vec<StepRecord>,
    pub waypoints: Vec<WaypointRecord>,
    /// State after the last applied input.
    pub final_state: Option<Configuration>,
    pub metrics: MissionMetrics,
}

impl MissionLog {
    /// Sum of distances between consecutive logged states, ending at the
    /// final state.
    pub fn path_length(&self) -> f64 {
        let mut pts: Vec<Configuration> = self.steps.iter().map(|s| s.state).collect();
        pts.extend(self.final_state);
        pts.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    pub fn max_position_error(&self) -> f64 {
        self.waypoints.iter().map(|w| w.position_error).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    StepCap,
    Infeasible,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::StepCap => write!(f, "step cap reached"),
            FailureReason::Infeasible => write!(f, "repeated solver failures"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid mission setup: {0}")]
    InvalidSetup(String),
    #[error("mission failed before waypoint {waypoint}: {reason}")]
    MissionFailed {
        waypoint: usize,
        reason: FailureReason,
        log: Box<MissionLog>,
    },
}

/// True once the robot is within the position tolerance of `target` and
/// its applied speed is below [`STOP_SPEED`].
pub fn check_arrival(state: &Configuration, target: &Configuration, applied_v: f64, limits: &RobotLimits) -> bool {
    state.distance(target) <= limits.goal_pos_tol && applied_v.abs() <= STOP_SPEED
}

/// Input applied when a solve fails: the fastest rate-feasible slowdown
/// toward rest, keeping the minimum-turn constraint.
pub fn fallback_policy(last_status: SolverStatus, prev: ControlInput, limits: &RobotLimits) -> ControlInput {
    debug_assert_ne!(last_status, SolverStatus::Converged);
    let toward_zero = |x: f64, step: f64| x - x.signum() * x.abs().min(step);
    let v = toward_zero(prev.v, limits.dv_max).max(limits.v_min);
    let cap = v / limits.r_min;
    let omega = toward_zero(prev.omega, limits.domega_max).clamp(-cap, cap);
    ControlInput::new(v, omega)
}

/// Default step budget for one leg.
pub fn step_cap(segment: &ReferencePath, params: &OcpParams) -> usize {
    let nominal = segment.total_length() / (params.limits.v_max * params.dt);
    MIN_STEP_CAP.max((20.0 * nominal).ceil() as usize)
}

fn check_setup(tour: &Tour, segments: &[ReferencePath], params: &OcpParams, sim_dt: f64) -> Result<(), SimulationError> {
    let bad = |m: String| Err(SimulationError::InvalidSetup(m));
    if let Err(e) = params.validate() {
        return bad(e.to_string());
    }
    if (sim_dt - params.dt).abs() > 1e-12 {
        return bad(format!("simulation step {sim_dt} must equal the control step {}", params.dt));
    }
    if segments.len() != tour.n_legs() {
        return bad(format!("{} segments for a tour with {} legs", segments.len(), tour.n_legs()));
    }
    let n = tour.configurations.len();
    for (i, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            return bad(format!("segment {i} is empty"));
        }
        let from = tour.configurations[i];
        let to = tour.configurations[(i + 1) % n];
        let close = |a: &Configuration, b: &Configuration| {
            a.distance(b) <= CONTINUITY_TOL && angle_diff(a.theta(), b.theta()).abs() <= CONTINUITY_TOL
        };
        if !close(&seg.start(), &from) || !close(&seg.end(), &to) {
            return bad(format!("segment {i} does not join tour configurations {i} and {}", (i + 1) % n));
        }
    }
    Ok(())
}

/// Runs the tour in closed loop, starting at rest at its first
/// configuration. `max_steps` overrides the per-leg step cap.
///
/// On failure the partial log is returned inside the error.
pub fn run_mission(
    tour: &Tour,
    segments: &[ReferencePath],
    params: &OcpParams,
    sim_dt: f64,
    max_steps: Option<usize>,
) -> Result<MissionLog, SimulationError> {
    check_setup(tour, segments, params, sim_dt)?;
    let limits = &params.limits;
    let n = tour.configurations.len();
    let mut log = MissionLog::default();
    let mut x = tour.configurations[0];
    let mut prev = ControlInput::ZERO;
    let mut t = 0.0;
    let mut step_index = 0usize;

    if !tour.closed {
        log.waypoints.push(WaypointRecord {
            index: 0,
            target: tour.order[0],
            arrival_time: 0.0,
            position_error: 0.0,
            heading_error: 0.0,
        });
    }

    let mut failure = None;
    'legs: for (leg, seg) in segments.iter().enumerate() {
        let target = seg.end();
        let cap = max_steps.unwrap_or_else(|| step_cap(seg, params));
        let mut warm: Option<OcpSolution> = None;
        let mut failures = 0;
        let mut taken = 0;
        loop {
            if check_arrival(&x, &target, prev.v, limits) {
                log.waypoints.push(WaypointRecord {
                    index: (leg + 1) % n,
                    target: tour.order[(leg + 1) % n],
                    arrival_time: t,
                    position_error: x.distance(&target),
                    heading_error: angle_diff(x.theta(), target.theta()).abs(),
                });
                break;
            }
            if taken >= cap {
                failure = Some(((leg + 1) % n, FailureReason::StepCap));
                break 'legs;
            }
            let clock = Instant::now();
            let (u_opt, sol) = control_step(x, seg, prev, params, warm.as_ref())
                .map_err(|e| SimulationError::InvalidSetup(e.to_string()))?;
            let solve_time = clock.elapsed().as_secs_f64();
            let ok = sol.status == SolverStatus::Converged;
            let u = if ok {
                failures = 0;
                u_opt
            } else {
                failures += 1;
                log.metrics.infeasible_solves += 1;
                fallback_policy(sol.status, prev, limits)
            };
            if u.v < limits.r_min * u.omega.abs() - 1e-6 {
                log.metrics.min_turn_violations += 1;
            }
            log.metrics.total_iterations += sol.iterations;
            log.metrics.max_iterations_per_step = log.metrics.max_iterations_per_step.max(sol.iterations);
            log.steps.push(StepRecord {
                t,
                segment: leg,
                state: x,
                input: u,
                s_bar: sol.s_bar,
                status: sol.status,
                iterations: sol.iterations,
                solve_time,
                fallback: !ok,
            });
            x = rk4_step(&x, &u, sim_dt);
            prev = u;
            step_index += 1;
            t = step_index as f64 * sim_dt;
            taken += 1;
            warm = ok.then_some(sol);
            if failures >= MAX_CONSECUTIVE_FAILURES {
                failure = Some(((leg + 1) % n, FailureReason::Infeasible));
                break 'legs;
            }
        }
    }

    log.final_state = Some(x);
    log.metrics.steps = log.steps.len();
    log.metrics.elapsed = t;
    log.metrics.reference_length = segments.iter().map(ReferencePath::total_length).sum();
    log.metrics.closed_loop_length = log.path_length();
    match failure {
        None => Ok(log),
        Some((waypoint, reason)) => Err(SimulationError::MissionFailed {
            waypoint,
            reason,
            log: Box::new(log),
        }),
    }
}
