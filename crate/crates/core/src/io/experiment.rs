use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, IoError, PlannerKind};
use crate::geometry::{concatenate, Configuration, ReferencePath};
use crate::routing::{
    euclidean_cycle_length, euclidean_order, euclidean_path_length, solve_dtsp_coupled, solve_dtsp_decoupled, Field,
    Tour,
};
use crate::simulation::{run_mission, FailureReason, MissionLog, SimulationError};

/// Result of the planning stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub planner: PlannerKind,
    pub closed: bool,
    /// Absent for the Euclidean-only planner, which assigns no headings.
    pub tour: Option<Tour>,
    pub order: Vec<usize>,
    pub leg_lengths: Vec<f64>,
    pub total_cost: f64,
    /// Length of the same visiting order with straight legs.
    pub euclidean_cost: f64,
    /// Sampled legs; empty for the Euclidean-only planner.
    pub segments: Vec<ReferencePath>,
}

impl Plan {
    /// Visited configurations; Euclidean-only plans point each target
    /// along its outgoing chord.
    pub fn configurations(&self, field: &Field) -> Vec<Configuration> {
        if let Some(t) = &self.tour {
            return t.configurations.clone();
        }
        let n = self.order.len();
        (0..n)
            .map(|i| {
                let p = field.targets()[self.order[i]];
                let j = if i + 1 < n { i + 1 } else if self.closed { 0 } else { i - 1 };
                let q = field.targets()[self.order[j]];
                let mut h = (q[1] - p[1]).atan2(q[0] - p[0]);
                if j < i && !self.closed {
                    h = (p[1] - q[1]).atan2(p[0] - q[0]);
                }
                Configuration::new(p[0], p[1], h)
            })
            .collect()
    }

    /// Each leg as a list of points: the dense samples of a Dubins leg, or
    /// the two endpoints of a straight one.
    pub fn polylines(&self, field: &Field) -> Vec<Vec<Configuration>> {
        if !self.segments.is_empty() {
            return self.segments.iter().map(|s| s.samples().to_vec()).collect();
        }
        let c = self.configurations(field);
        let n = c.len();
        let legs = if self.closed { n } else { n - 1 };
        (0..legs)
            .map(|i| {
                let (a, b) = (c[i], c[(i + 1) % n]);
                let h = (b.y() - a.y()).atan2(b.x() - a.x());
                vec![Configuration::new(a.x(), a.y(), h), Configuration::new(b.x(), b.y(), h)]
            })
            .collect()
    }

    pub fn tour_file(&self, field: &Field) -> TourFile {
        TourFile {
            planner: self.planner,
            closed: self.closed,
            rho: self.tour.as_ref().map(|t| t.rho),
            order: self.order.clone(),
            configurations: self
                .configurations(field)
                .iter()
                .map(|c| [c.x(), c.y(), c.theta()])
                .collect(),
            leg_lengths: self.leg_lengths.clone(),
            total_cost: self.total_cost,
            euclidean_cost: self.euclidean_cost,
        }
    }
}

/// Serialized tour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourFile {
    pub planner: PlannerKind,
    pub closed: bool,
    /// Turning radius of the Dubins legs; absent for straight legs.
    pub rho: Option<f64>,
    /// Target indices in visiting order.
    pub order: Vec<usize>,
    /// `[x, y, theta]` per visited target, in visiting order.
    pub configurations: Vec<[f64; 3]>,
    pub leg_lengths: Vec<f64>,
    pub total_cost: f64,
    pub euclidean_cost: f64,
}

impl TourFile {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tour serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })
    }

    /// Recomputes the total cost from the stored configurations.
    pub fn recost(&self) -> Result<f64, IoError> {
        let configs: Vec<Configuration> = self
            .configurations
            .iter()
            .map(|c| Configuration::new(c[0], c[1], c[2]))
            .collect();
        match self.rho {
            Some(rho) => Ok(Tour::new(self.order.clone(), configs, self.closed, rho)?.total_cost),
            None => {
                let n = configs.len();
                let legs = if self.closed { n } else { n.saturating_sub(1) };
                Ok((0..legs).map(|i| configs[i].distance(&configs[(i + 1) % n])).sum())
            }
        }
    }
}

fn euclidean_cost(field: &Field, order: &[usize], closed: bool) -> f64 {
    if closed {
        euclidean_cycle_length(field, order)
    } else {
        euclidean_path_length(field, order)
    }
}

/// Runs the configured planner on `field`.
pub fn plan(field: &Field, cfg: &ExperimentConfig) -> Result<Plan, IoError> {
    cfg.validate()?;
    let budget = cfg.budget();
    let tour = match cfg.planner {
        PlannerKind::Coupled => Some(solve_dtsp_coupled(field, cfg.k, cfg.rho, cfg.closed_tour, cfg.seed, &budget)?),
        PlannerKind::Decoupled => Some(solve_dtsp_decoupled(field, cfg.rho, cfg.closed_tour, cfg.seed, &budget)?),
        PlannerKind::EtspOnly => None,
    };
    match tour {
        Some(tour) => {
            let segments = concatenate(&tour.legs()?, cfg.sample_step).map_err(crate::routing::RoutingError::from)?;
            Ok(Plan {
                planner: cfg.planner,
                closed: tour.closed,
                order: tour.order.clone(),
                leg_lengths: tour.leg_lengths.clone(),
                total_cost: tour.total_cost,
                euclidean_cost: euclidean_cost(field, &tour.order, tour.closed),
                segments,
                tour: Some(tour),
            })
        }
        None => {
            let order = euclidean_order(field, cfg.closed_tour, cfg.seed, &budget)?;
            let n = order.len();
            let legs = if cfg.closed_tour { n } else { n - 1 };
            let leg_lengths: Vec<f64> = (0..legs).map(|i| field.distance(order[i], order[(i + 1) % n])).collect();
            let total = leg_lengths.iter().sum();
            Ok(Plan {
                planner: cfg.planner,
                closed: cfg.closed_tour,
                tour: None,
                euclidean_cost: euclidean_cost(field, &order, cfg.closed_tour),
                order,
                leg_lengths,
                total_cost: total,
                segments: Vec::new(),
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureSummary {
    /// Tour position the robot was heading for.
    pub waypoint: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointSummary {
    pub index: usize,
    pub target: usize,
    pub arrival_time: f64,
    pub position_error: f64,
    pub heading_error: f64,
}

/// Mission summary. Holds no wall-clock measurements, so reruns with the
/// same inputs serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    pub planner: PlannerKind,
    pub seed: u64,
    pub targets: usize,
    pub completed: bool,
    pub failure: Option<FailureSummary>,
    pub reference_length: f64,
    pub closed_loop_length: f64,
    pub mission_time: f64,
    pub waypoints_reached: usize,
    pub max_position_error: f64,
    pub max_heading_error: f64,
    pub min_turn_violations: usize,
    pub failed_solves: usize,
    pub steps: usize,
    pub total_iterations: usize,
    pub mean_iterations_per_step: f64,
    pub max_iterations_per_step: usize,
    pub waypoints: Vec<WaypointSummary>,
}

impl MissionSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub plan: Plan,
    pub log: MissionLog,
    pub failure: Option<(usize, FailureReason)>,
    pub summary: MissionSummary,
}

fn summarize(field: &Field, cfg: &ExperimentConfig, log: &MissionLog, failure: Option<(usize, FailureReason)>) -> MissionSummary {
    let m = &log.metrics;
    let waypoints: Vec<WaypointSummary> = log
        .waypoints
        .iter()
        .map(|w| WaypointSummary {
            index: w.index,
            target: w.target,
            arrival_time: w.arrival_time,
            position_error: w.position_error,
            heading_error: w.heading_error,
        })
        .collect();
    MissionSummary {
        planner: cfg.planner,
        seed: cfg.seed,
        targets: field.len(),
        completed: failure.is_none(),
        failure: failure.map(|(waypoint, reason)| FailureSummary {
            waypoint,
            reason: reason.to_string(),
        }),
        reference_length: m.reference_length,
        closed_loop_length: m.closed_loop_length,
        mission_time: m.elapsed,
        waypoints_reached: waypoints.len(),
        max_position_error: log.max_position_error(),
        max_heading_error: waypoints.iter().map(|w| w.heading_error).fold(0.0, f64::max),
        min_turn_violations: m.min_turn_violations,
        failed_solves: m.infeasible_solves,
        steps: m.steps,
        total_iterations: m.total_iterations,
        mean_iterations_per_step: if m.steps > 0 { m.total_iterations as f64 / m.steps as f64 } else { 0.0 },
        max_iterations_per_step: m.max_iterations_per_step,
        waypoints,
    }
}

/// Plans, then flies the tour in closed loop. A failed mission is not an
/// error here: the partial log comes back with `failure` set.
pub fn simulate(field: &Field, cfg: &ExperimentConfig) -> Result<SimulationOutcome, IoError> {
    if cfg.planner == PlannerKind::EtspOnly {
        return Err(IoError::Config(
            "the etsp_only planner has no headings or curvature limit and cannot be flown".into(),
        ));
    }
    cfg.validate()?;
    cfg.validate_solver()?;
    let plan = plan(field, cfg)?;
    let tour = plan.tour.as_ref().expect("heading planners produce a tour");
    let (log, failure) = match run_mission(tour, &plan.segments, &cfg.ocp_params(), cfg.dt, None) {
        Ok(log) => (log, None),
        Err(SimulationError::MissionFailed { waypoint, reason, log }) => (*log, Some((waypoint, reason))),
        Err(SimulationError::InvalidSetup(m)) => return Err(IoError::Solver(m)),
    };
    let summary = summarize(field, cfg, &log, failure);
    Ok(SimulationOutcome {
        plan,
        log,
        failure,
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub label: String,
    pub planner: PlannerKind,
    pub tour_length: f64,
    pub closed_loop_length: Option<f64>,
    pub max_position_error: Option<f64>,
    pub completed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub a: CompareRow,
    pub b: CompareRow,
    /// `(b - a) / a` in percent, on tour length.
    pub tour_difference_percent: f64,
    /// Same, on closed-loop length, when both were simulated.
    pub closed_loop_difference_percent: Option<f64>,
}

fn percent(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        100.0 * (b - a) / a
    }
}

impl CompareReport {
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
        let mut s = format!(
            "{:<6} {:<10} {:>12} {:>12} {:>10} {:>9}\n",
            "run", "planner", "tour_m", "flown_m", "max_err_m", "completed"
        );
        for r in [&self.a, &self.b] {
            s += &format!(
                "{:<6} {:<10} {:>12.3} {:>12} {:>10} {:>9}\n",
                r.label,
                r.planner.name(),
                r.tour_length,
                opt(r.closed_loop_length),
                r.max_position_error.map_or("-".into(), |x| format!("{x:.4}")),
                r.completed.map_or("-".into(), |c| c.to_string()),
            );
        }
        s += &format!("tour length difference (b vs a): {:+.2}%\n", self.tour_difference_percent);
        if let Some(p) = self.closed_loop_difference_percent {
            s += &format!("closed-loop length difference (b vs a): {p:+.2}%\n");
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let mut s = String::from("run,planner,tour_length,closed_loop_length,max_position_error,completed\n");
        for r in [&self.a, &self.b] {
            s += &format!(
                "{},{},{},{},{},{}\n",
                r.label,
                r.planner.name(),
                r.tour_length,
                opt(r.closed_loop_length),
                opt(r.max_position_error),
                r.completed.map_or(String::new(), |c| c.to_string()),
            );
        }
        s
    }
}

fn compare_row(label: &str, field: &Field, cfg: &ExperimentConfig, fly: bool) -> Result<CompareRow, IoError> {
    let mut row = CompareRow {
        label: label.into(),
        planner: cfg.planner,
        tour_length: 0.0,
        closed_loop_length: None,
        max_position_error: None,
        completed: None,
    };
    if fly && cfg.planner != PlannerKind::EtspOnly {
        let out = simulate(field, cfg)?;
        row.tour_length = out.plan.total_cost;
        row.closed_loop_length = Some(out.summary.closed_loop_length);
        row.max_position_error = Some(out.summary.max_position_error);
        row.completed = Some(out.summary.completed);
    } else {
        row.tour_length = plan(field, cfg)?.total_cost;
    }
    Ok(row)
}

/// Plans (and optionally flies) the same field under two configurations.
/// Euclidean-only runs are never flown.
pub fn compare(
    field_a: &Field,
    field_b: &Field,
    cfg_a: &ExperimentConfig,
    cfg_b: &ExperimentConfig,
    fly: bool,
) -> Result<CompareReport, IoError> {
    if field_a.targets() != field_b.targets() {
        return Err(IoError::Field("compared runs must use the same field".into()));
    }
    let a = compare_row("a", field_a, cfg_a, fly)?;
    let b = compare_row("b", field_b, cfg_b, fly)?;
    let closed_loop_difference_percent = match (a.closed_loop_length, b.closed_loop_length) {
        (Some(x), Some(y)) => Some(percent(x, y)),
        _ => None,
    };
    Ok(CompareReport {
        tour_difference_percent: percent(a.tour_length, b.tour_length),
        closed_loop_difference_percent,
        a,
        b,
    })
}
