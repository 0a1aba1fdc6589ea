use serde::{Deserialize, Serialize};

use super::problem::{build_nlp, OcpNlp};
use super::solver::{solve_nlp, NlpProblem, NlpSolution, SolverOptions, SolverStatus};
use super::{NmpcError, OcpParams};
use crate::geometry::{angle_diff, Configuration, ReferencePath};
use crate::vehicle::{rk4_raw, ControlInput};

/// Barrier parameter used when starting from a shifted previous solution.
const WARM_MU: f64 = 1e-3;

/// Predicted trajectory, artificial reference, and solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcpSolution {
    pub states: Vec<Configuration>,
    pub inputs: Vec<ControlInput>,
    pub s_bar: f64,
    pub cost: f64,
    pub status: SolverStatus,
    pub kkt_residual: f64,
    pub iterations: usize,
}

fn cold_guess(nlp: &OcpNlp) -> Vec<f64> {
    let p = nlp.params();
    let lim = &p.limits;
    let h = nlp.horizon();
    let x0 = nlp.initial_state();
    let seg = nlp.segment();
    let s0 = seg.nearest_s(x0.x(), x0.y());
    let remaining = (1.0 - s0) * seg.total_length() + x0.distance(&seg.eval(s0));
    let cruise = (remaining / (h as f64 * p.dt)).clamp(lim.v_min, lim.v_max);

    let mut z = vec![0.0; nlp.n_vars()];
    let mut x = [x0.x(), x0.y(), x0.theta()];
    let mut u = nlp.prev_applied();
    for k in 0..h {
        u.v = if u.v < cruise { (u.v + lim.dv_max).min(cruise) } else { (u.v - lim.dv_max).max(cruise) };
        u.omega = if u.omega > 0.0 {
            (u.omega - lim.domega_max).max(0.0)
        } else {
            (u.omega + lim.domega_max).min(0.0)
        };
        let w_cap = u.v / lim.r_min;
        u.omega = u.omega.clamp(-w_cap, w_cap);
        let iu = nlp.input_index(k);
        z[iu] = u.v;
        z[iu + 1] = u.omega;
        x = rk4_raw(x, &u, p.dt);
        z[nlp.state_index(k + 1)..nlp.state_index(k + 1) + 3].copy_from_slice(&x);
    }
    z[nlp.s_index()] = s0;
    z
}

fn warm_guess(nlp: &OcpNlp, prev: &OcpSolution) -> Vec<f64> {
    let h = nlp.horizon();
    let dt = nlp.params().dt;
    let mut z = vec![0.0; nlp.n_vars()];
    let mut theta = nlp.initial_state().theta();
    for k in 1..=h {
        let q = if k < h {
            prev.states[k + 1]
        } else {
            let last = prev.states[h];
            let r = rk4_raw([last.x(), last.y(), last.theta()], &prev.inputs[h - 1], dt);
            Configuration::new(r[0], r[1], r[2])
        };
        theta += angle_diff(q.theta(), theta);
        let ix = nlp.state_index(k);
        z[ix] = q.x();
        z[ix + 1] = q.y();
        z[ix + 2] = theta;
    }
    for k in 0..h {
        let u = prev.inputs[(k + 1).min(h - 1)];
        let iu = nlp.input_index(k);
        z[iu] = u.v;
        z[iu + 1] = u.omega;
    }
    z[nlp.s_index()] = prev.s_bar;
    z
}

/// Look-ahead distance of the pursuit rollout, meters.
const PURSUIT_LOOKAHEAD: f64 = 0.5;

/// Rolls the vehicle forward with a rate-limited pure-pursuit law aimed at
/// a point ahead on the segment.
fn pursuit_guess(nlp: &OcpNlp) -> Vec<f64> {
    let p = nlp.params();
    let lim = &p.limits;
    let h = nlp.horizon();
    let x0 = nlp.initial_state();
    let seg = nlp.segment();
    let len = seg.total_length().max(1e-9);
    let s0 = seg.nearest_s(x0.x(), x0.y());
    let remaining = (1.0 - s0) * len + x0.distance(&seg.eval(s0));
    let cruise = (remaining / (h as f64 * p.dt)).clamp(lim.v_min, lim.v_max);

    let mut z = vec![0.0; nlp.n_vars()];
    let mut x = [x0.x(), x0.y(), x0.theta()];
    let mut u = nlp.prev_applied();
    for k in 0..h {
        let s = seg.nearest_s(x[0], x[1]);
        let goal = seg.eval((s + PURSUIT_LOOKAHEAD / len).min(1.0));
        let (dx, dy) = (goal.x() - x[0], goal.y() - x[1]);
        let dist = dx.hypot(dy).max(1e-9);
        let alpha = angle_diff(dy.atan2(dx), x[2]);
        let v_des = cruise.min(dist / p.dt);
        u.v = u.v + (v_des - u.v).clamp(-lim.dv_max, lim.dv_max);
        let w_des = 2.0 * u.v * alpha.sin() / dist;
        u.omega = u.omega + (w_des - u.omega).clamp(-lim.domega_max, lim.domega_max);
        let w_cap = (u.v / lim.r_min).min(lim.omega_max);
        u.omega = u.omega.clamp(-w_cap, w_cap);
        let iu = nlp.input_index(k);
        z[iu] = u.v;
        z[iu + 1] = u.omega;
        x = rk4_raw(x, &u, p.dt);
        z[nlp.state_index(k + 1)..nlp.state_index(k + 1) + 3].copy_from_slice(&x);
    }
    z[nlp.s_index()] = seg.nearest_s(x[0], x[1]);
    z
}

/// Decelerates at the rate limit toward rest and straightens the wheel.
fn brake_guess(nlp: &OcpNlp) -> Vec<f64> {
    let p = nlp.params();
    let lim = &p.limits;
    let h = nlp.horizon();
    let x0 = nlp.initial_state();
    let mut z = vec![0.0; nlp.n_vars()];
    let mut x = [x0.x(), x0.y(), x0.theta()];
    let mut u = nlp.prev_applied();
    for k in 0..h {
        u.v = (u.v - lim.dv_max).max(lim.v_min);
        u.omega = u.omega.signum() * (u.omega.abs() - lim.domega_max).max(0.0);
        u.omega = u.omega.clamp(-u.v / lim.r_min, u.v / lim.r_min);
        let iu = nlp.input_index(k);
        z[iu] = u.v;
        z[iu + 1] = u.omega;
        x = rk4_raw(x, &u, p.dt);
        z[nlp.state_index(k + 1)..nlp.state_index(k + 1) + 3].copy_from_slice(&x);
    }
    z[nlp.s_index()] = nlp.segment().nearest_s(x[0], x[1]);
    z
}

fn to_solution(nlp: &OcpNlp, sol: &NlpSolution) -> OcpSolution {
    let h = nlp.horizon();
    let z = &sol.z;
    let mut states = Vec::with_capacity(h + 1);
    states.push(nlp.initial_state());
    for k in 1..=h {
        let ix = nlp.state_index(k);
        states.push(Configuration::new(z[ix], z[ix + 1], z[ix + 2]));
    }
    let inputs = (0..h)
        .map(|k| {
            let iu = nlp.input_index(k);
            ControlInput::new(z[iu], z[iu + 1])
        })
        .collect();
    OcpSolution {
        states,
        inputs,
        s_bar: z[nlp.s_index()].clamp(0.0, 1.0),
        cost: sol.objective,
        status: sol.status,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
    }
}

/// Progress along the segment, in meters, below which a converged plan
/// that has not reached the segment end counts as stalled.
const STALL_PROGRESS: f64 = 0.1;

/// A converged plan that barely advances the reference even though the
/// segment end is still ahead; usually a local minimum where the robot
/// creeps toward a nearby path point it can only reach at the curvature
/// limit.
fn stalled(nlp: &OcpNlp, sol: &NlpSolution) -> bool {
    let seg = nlp.segment();
    let x0 = nlp.initial_state();
    let s_bar = sol.z[nlp.s_index()];
    let progress = (s_bar - seg.nearest_s(x0.x(), x0.y())) * seg.total_length();
    s_bar < 1.0 - 1e-3 && progress < STALL_PROGRESS
}

/// Solves the OCP, warm-started from the previous solution when given.
///
/// Starts are tried in order: the shifted previous solution, a ramp-up
/// from the current input, a pure-pursuit rollout along the segment, and a
/// braking trajectory. The first converged plan that is not stalled is
/// returned; otherwise the cheapest converged plan, or, if none converged,
/// the attempt that ended closest to feasibility. `iterations` counts all
/// attempts.
pub fn solve_ocp(nlp: &OcpNlp, warm_start: Option<&OcpSolution>) -> OcpSolution {
    let h = nlp.horizon();
    let opts = SolverOptions {
        max_iterations: nlp.params().max_iterations,
        ..SolverOptions::default()
    };
    let mut starts: Vec<(Vec<f64>, Option<f64>)> = Vec::with_capacity(4);
    if let Some(w) = warm_start.filter(|w| w.states.len() == h + 1 && w.inputs.len() == h) {
        starts.push((warm_guess(nlp, w), Some(WARM_MU)));
    }
    starts.push((cold_guess(nlp), None));
    starts.push((pursuit_guess(nlp), None));
    starts.push((brake_guess(nlp), None));

    let mut total = 0;
    let mut best: Option<NlpSolution> = None;
    let mut best_converged: Option<NlpSolution> = None;
    for (z0, mu0) in starts {
        let sol = solve_nlp(nlp, &z0, mu0, &opts);
        total += sol.iterations;
        if sol.status == SolverStatus::Converged {
            let done = !stalled(nlp, &sol);
            if best_converged.as_ref().is_none_or(|b| sol.objective < b.objective) {
                best_converged = Some(sol);
            }
            if done {
                break;
            }
        } else if best.as_ref().is_none_or(|b| sol.violation < b.violation) {
            best = Some(sol);
        }
    }
    let best = best_converged.or(best).expect("at least one start");
    let mut out = to_solution(nlp, &best);
    out.iterations = total;
    out
}

/// One receding-horizon step: returns the first optimal input and the
/// full solution for logging and warm starting.
pub fn control_step(
    x_measured: Configuration,
    segment: &ReferencePath,
    prev_applied: ControlInput,
    params: &OcpParams,
    warm: Option<&OcpSolution>,
) -> Result<(ControlInput, OcpSolution), NmpcError> {
    let nlp = build_nlp(x_measured, segment, prev_applied, params)?;
    let sol = solve_ocp(&nlp, warm);
    Ok((sol.inputs[0], sol))
}

