//! Curvature-constrained waypoint tours (coupled Dubins TSP and a decoupled
//! baseline) executed by an artificial-reference nonlinear MPC on a
//! simulated differential-drive robot.

pub mod geometry;
pub mod io;
pub mod nmpc;
pub mod routing;
pub mod simulation;
pub mod vehicle;

pub use geometry::{Configuration, DubinsPath, ReferencePath};
