//! Unicycle kinematics of a differential-drive robot, its RK4
//! discretization, and the actuator limits shared by the controller and the
//! simulator.

use serde::{Deserialize, Serialize};

use crate::geometry::Configuration;

/// Linear and angular velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    pub v: f64,
    pub omega: f64,
}

impl ControlInput {
    pub const ZERO: ControlInput = ControlInput { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        ControlInput { v, omega }
    }
}

/// Continuous-time unicycle model: `(v cos θ, v sin θ, ω)`.
pub fn dynamics(state: &Configuration, u: &ControlInput) -> [f64; 3] {
    [
        u.v * state.theta().cos(),
        u.v * state.theta().sin(),
        u.omega,
    ]
}

/// Classic fourth-order Runge-Kutta step with the input held constant.
pub fn rk4_step(state: &Configuration, u: &ControlInput, dt: f64) -> Configuration {
    let raw = rk4_raw([state.x(), state.y(), state.theta()], u, dt);
    Configuration::new(raw[0], raw[1], raw[2])
}

/// RK4 step on a raw state vector; the heading is not wrapped.
pub(crate) fn rk4_raw(x: [f64; 3], u: &ControlInput, dt: f64) -> [f64; 3] {
    let f = |s: [f64; 3]| [u.v * s[2].cos(), u.v * s[2].sin(), u.omega];
    let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
    let k1 = f(x);
    let k2 = f(add(x, k1, dt / 2.0));
    let k3 = f(add(x, k2, dt / 2.0));
    let k4 = f(add(x, k3, dt));
    [
        x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        x[2] + dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    ]
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid robot limits: {0}")]
pub struct LimitsError(pub String);

/// Actuator and task limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotLimits {
    pub v_min: f64,
    pub v_max: f64,
    pub omega_max: f64,
    /// Per-step rate bound on `v`.
    pub dv_max: f64,
    /// Per-step rate bound on `ω`.
    pub domega_max: f64,
    pub r_min: f64,
    pub goal_pos_tol: f64,
    /// Heading error reported against this at each waypoint; not an arrival gate.
    pub goal_heading_tol: f64,
    pub footprint_radius: f64,
}

/// Divisor used to derive rate bounds from the input bounds.
pub const DEFAULT_RATE_DIVISOR: f64 = 5.0;

impl Default for RobotLimits {
    fn default() -> Self {
        RobotLimits::with_rate_divisor(DEFAULT_RATE_DIVISOR)
    }
}

impl RobotLimits {
    /// Defaults with `Δu_max = u_max / divisor`.
    pub fn with_rate_divisor(divisor: f64) -> Self {
        let v_max = 0.5;
        let omega_max = 1.9;
        RobotLimits {
            v_min: 0.0,
            v_max,
            omega_max,
            dv_max: v_max / divisor,
            domega_max: omega_max / divisor,
            r_min: 0.5,
            goal_pos_tol: 0.05,
            goal_heading_tol: 0.2,
            footprint_radius: 0.3,
        }
    }

    pub fn validate(&self) -> Result<(), LimitsError> {
        let checks = [
            (self.v_max > 0.0, "v_max must be positive"),
            (self.v_min >= 0.0, "v_min must be non-negative (no reverse motion)"),
            (self.v_min < self.v_max, "v_min must be below v_max"),
            (self.omega_max > 0.0, "omega_max must be positive"),
            (self.dv_max > 0.0, "dv_max must be positive"),
            (self.domega_max > 0.0, "domega_max must be positive"),
            (self.r_min > 0.0, "r_min must be positive"),
            (self.goal_pos_tol > 0.0, "goal_pos_tol must be positive"),
            (self.goal_heading_tol > 0.0, "goal_heading_tol must be positive"),
            (self.footprint_radius >= 0.0, "footprint_radius must be non-negative"),
        ];
        let all_finite = [
            self.v_min,
            self.v_max,
            self.omega_max,
            self.dv_max,
            self.domega_max,
            self.r_min,
            self.goal_pos_tol,
            self.goal_heading_tol,
            self.footprint_radius,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(LimitsError("all limits must be finite".into()));
        }
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(LimitsError((*msg).into())),
            None => Ok(()),
        }
    }

    /// Largest violation of the box, rate, and minimum-turn constraints by
    /// `u` applied after `prev`; zero when feasible.
    pub fn violation(&self, u: &ControlInput, prev: &ControlInput) -> f64 {
        [
            self.v_min - u.v,
            u.v - self.v_max,
            -self.omega_max - u.omega,
            u.omega - self.omega_max,
            (u.v - prev.v).abs() - self.dv_max,
            (u.omega - prev.omega).abs() - self.domega_max,
            self.r_min * u.omega.abs() - u.v,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}
