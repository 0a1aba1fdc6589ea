use dtsp_nav::geometry::{concatenate, Configuration, DEFAULT_SAMPLE_STEP};
use dtsp_nav::nmpc::{Obstacle, OcpParams};
use dtsp_nav::routing::{solve_dtsp_coupled, AtspBudget, Field, Tour};
use dtsp_nav::simulation::{fallback_policy, run_mission, FailureReason, MissionLog, SimulationError};
use dtsp_nav::vehicle::{rk4_step, ControlInput, RobotLimits};
use dtsp_nav::nmpc::SolverStatus;
use dtsp_nav::ReferencePath;
use proptest::prelude::*;

fn segments(tour: &Tour) -> Vec<ReferencePath> {
    concatenate(&tour.legs().unwrap(), DEFAULT_SAMPLE_STEP).unwrap()
}

fn open_pair(a: Configuration, b: Configuration) -> Tour {
    Tour::new(vec![0, 1], vec![a, b], false, 0.55).unwrap()
}

/// Checks the whole-log invariants: feasible inputs, exact replay, and
/// the logged path length.
fn check_log(log: &MissionLog, start: Configuration, limits: &RobotLimits, dt: f64) {
    let mut prev = ControlInput::ZERO;
    let mut x = start;
    for (i, s) in log.steps.iter().enumerate() {
        assert!(limits.violation(&s.input, &prev) <= 1e-6, "step {i}: {:?} after {prev:?}", s.input);
        assert!(s.state.distance(&x) <= 1e-12, "step {i}: replay drifted");
        x = rk4_step(&x, &s.input, dt);
        prev = s.input;
    }
    assert!(log.final_state.unwrap().distance(&x) <= 1e-12);
    let mut len = 0.0;
    let mut last = start;
    for s in log.steps.iter().skip(1) {
        len += last.distance(&s.state);
        last = s.state;
    }
    len += last.distance(&x);
    assert!((len - log.metrics.closed_loop_length).abs() <= 1e-9);
}

#[test]
fn zero_length_leg_arrives_immediately() {
    let q = Configuration::new(1.0, 2.0, 0.3);
    let tour = open_pair(q, q);
    let log = run_mission(&tour, &segments(&tour), &OcpParams::default(), 0.1, None).unwrap();
    assert!(log.steps.len() <= 1);
    assert_eq!(log.waypoints.len(), 2);
    assert_eq!(log.waypoints[1].position_error, 0.0);
}

#[test]
fn straight_leg_respects_speed_limit_and_tolerance() {
    let a = Configuration::new(0.0, 0.0, 0.0);
    let b = Configuration::new(5.0, 0.0, 0.0);
    let tour = open_pair(a, b);
    let p = OcpParams::default();
    let log = run_mission(&tour, &segments(&tour), &p, p.dt, None).unwrap();
    let w = &log.waypoints[1];
    assert!(w.position_error <= 0.05, "error {}", w.position_error);
    assert!(w.arrival_time >= 10.0, "arrived after {} s", w.arrival_time);
    assert_eq!(log.metrics.min_turn_violations, 0);
    assert_eq!(log.metrics.infeasible_solves, 0);
    assert!(log.steps.iter().all(|s| s.status == SolverStatus::Converged));
    check_log(&log, a, &p.limits, p.dt);
}

#[test]
fn small_closed_mission_visits_every_target() {
    let field = Field::new(vec![[0.0, 0.0], [4.0, 0.5], [3.5, 4.0], [0.5, 3.0]]).unwrap();
    let tour = solve_dtsp_coupled(&field, 8, 0.55, true, 3, &AtspBudget::default()).unwrap();
    let p = OcpParams::default();
    let log = run_mission(&tour, &segments(&tour), &p, p.dt, None).unwrap();
    assert_eq!(log.waypoints.len(), 4);
    let mut seen: Vec<usize> = log.waypoints.iter().map(|w| w.target).collect();
    seen.sort();
    assert_eq!(seen, vec![0, 1, 2, 3]);
    assert!(log.waypoints.iter().all(|w| w.position_error <= p.limits.goal_pos_tol));
    assert!(log.waypoints.windows(2).all(|w| w[0].arrival_time <= w[1].arrival_time));
    assert_eq!(log.metrics.min_turn_violations, 0);
    assert!(log.metrics.closed_loop_length <= 1.25 * log.metrics.reference_length);
    assert!((log.metrics.reference_length - tour.total_cost).abs() < 1e-6);
    check_log(&log, tour.configurations[0], &p.limits, p.dt);
    // last arrival closes the loop at the first configuration
    assert_eq!(log.waypoints.last().unwrap().index, 0);
}

#[test]
fn same_inputs_give_the_same_trajectory() {
    let a = Configuration::new(0.0, 0.0, 0.0);
    let b = Configuration::new(2.0, 1.5, 1.0);
    let tour = open_pair(a, b);
    let p = OcpParams::default();
    let one = run_mission(&tour, &segments(&tour), &p, p.dt, None).unwrap();
    let two = run_mission(&tour, &segments(&tour), &p, p.dt, None).unwrap();
    assert_eq!(one.steps.len(), two.steps.len());
    for (x, y) in one.steps.iter().zip(&two.steps) {
        assert_eq!(x.state, y.state);
        assert_eq!(x.input, y.input);
    }
}

#[test]
fn step_cap_failure_keeps_the_log() {
    let tour = open_pair(Configuration::new(0.0, 0.0, 0.0), Configuration::new(5.0, 0.0, 0.0));
    let p = OcpParams::default();
    match run_mission(&tour, &segments(&tour), &p, p.dt, Some(5)) {
        Err(SimulationError::MissionFailed { waypoint, reason, log }) => {
            assert_eq!(waypoint, 1);
            assert_eq!(reason, FailureReason::StepCap);
            assert_eq!(log.steps.len(), 5);
        }
        other => panic!("expected a step-cap failure, got {other:?}"),
    }
}

#[test]
fn repeated_infeasible_solves_abort() {
    let tour = open_pair(Configuration::new(0.0, 0.0, 0.0), Configuration::new(5.0, 0.0, 0.0));
    let mut p = OcpParams::default();
    p.obstacles.push(Obstacle { x: 0.0, y: 0.0, radius: 2.0 });
    match run_mission(&tour, &segments(&tour), &p, p.dt, None) {
        Err(SimulationError::MissionFailed { reason, log, .. }) => {
            assert_eq!(reason, FailureReason::Infeasible);
            assert_eq!(log.steps.len(), 3);
            assert!(log.steps.iter().all(|s| s.fallback));
            assert_eq!(log.metrics.infeasible_solves, 3);
            assert!(log.steps.iter().all(|s| s.input == ControlInput::ZERO));
        }
        other => panic!("expected an infeasibility abort, got {other:?}"),
    }
}

#[test]
fn setup_is_validated() {
    let tour = open_pair(Configuration::new(0.0, 0.0, 0.0), Configuration::new(5.0, 0.0, 0.0));
    let segs = segments(&tour);
    let p = OcpParams::default();
    assert!(matches!(run_mission(&tour, &segs, &p, 0.05, None), Err(SimulationError::InvalidSetup(_))));
    assert!(matches!(run_mission(&tour, &[], &p, p.dt, None), Err(SimulationError::InvalidSetup(_))));
    let other = open_pair(Configuration::new(0.0, 0.0, 0.0), Configuration::new(5.0, 1.0, 0.0));
    assert!(matches!(run_mission(&other, &segs, &p, p.dt, None), Err(SimulationError::InvalidSetup(_))));
}

proptest! {
    #[test]
    fn fallback_is_feasible_and_slows_down(v in 0.0f64..0.5, frac in -1.0f64..1.0, divisor in 1.0f64..10.0) {
        let l = RobotLimits::with_rate_divisor(divisor);
        let prev = ControlInput::new(v, frac * (v / l.r_min).min(l.omega_max));
        let u = fallback_policy(SolverStatus::Infeasible, prev, &l);
        prop_assert!(l.violation(&u, &prev) <= 1e-12, "{:?} -> {:?}", prev, u);
        prop_assert!(u.v <= prev.v && u.omega.abs() <= prev.omega.abs());
        prop_assert!((u.v - (v - l.dv_max).max(0.0)).abs() <= 1e-12);
    }
}
