use serde::{Deserialize, Serialize};

use crate::geometry::{dubins_shortest, Configuration, DubinsPath};

use super::RoutingError;

/// Ordered visit of all targets with one heading per target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    /// Target indices in visiting order.
    pub order: Vec<usize>,
    /// One configuration per visited target, in visiting order.
    pub configurations: Vec<Configuration>,
    pub closed: bool,
    pub rho: f64,
    /// Dubins length of each leg; the wrap-around leg is last when closed.
    pub leg_lengths: Vec<f64>,
    pub total_cost: f64,
}

impl Tour {
    /// Builds a tour and computes every leg length.
    pub fn new(
        order: Vec<usize>,
        configurations: Vec<Configuration>,
        closed: bool,
        rho: f64,
    ) -> Result<Self, RoutingError> {
        if order.len() != configurations.len() {
            return Err(RoutingError::InvalidOrder(format!(
                "{} targets but {} configurations",
                order.len(),
                configurations.len()
            )));
        }
        if order.len() < 2 {
            return Err(RoutingError::TooFewTargets(order.len()));
        }
        let mut tour = Tour {
            order,
            configurations,
            closed,
            rho,
            leg_lengths: Vec::new(),
            total_cost: 0.0,
        };
        tour.leg_lengths = tour
            .legs()?
            .iter()
            .map(DubinsPath::length)
            .collect();
        tour.total_cost = tour.leg_lengths.iter().sum();
        Ok(tour)
    }

    pub fn headings(&self) -> Vec<f64> {
        self.configurations.iter().map(Configuration::theta).collect()
    }

    pub fn n_legs(&self) -> usize {
        if self.closed {
            self.configurations.len()
        } else {
            self.configurations.len() - 1
        }
    }

    /// Shortest Dubins path of every leg, in tour order.
    pub fn legs(&self) -> Result<Vec<DubinsPath>, RoutingError> {
        let n = self.configurations.len();
        (0..self.n_legs())
            .map(|i| {
                dubins_shortest(self.configurations[i], self.configurations[(i + 1) % n], self.rho)
                    .map_err(RoutingError::from)
            })
            .collect()
    }

    /// Same cycle started at position `offset`; closed tours only.
    pub fn rotated(&self, offset: usize) -> Result<Tour, RoutingError> {
        let n = self.order.len();
        let order = (0..n).map(|i| self.order[(i + offset) % n]).collect();
        let configs = (0..n).map(|i| self.configurations[(i + offset) % n]).collect();
        Tour::new(order, configs, self.closed, self.rho)
    }
}

/// Recomputes the tour length from scratch: the sum of shortest Dubins
/// lengths between consecutive configurations, plus the closing leg when
/// the tour is closed.
pub fn tour_cost(tour: &Tour, rho: f64) -> Result<f64, RoutingError> {
    let n = tour.configurations.len();
    let legs = if tour.closed { n } else { n.saturating_sub(1) };
    let mut total = 0.0;
    for i in 0..legs {
        total += dubins_shortest(tour.configurations[i], tour.configurations[(i + 1) % n], rho)?
            .length();
    }
    Ok(total)
}

/// Rotates a cycle so that dropping its closing leg removes the most
/// expensive one; used to derive open tours from cyclic solutions.
pub(crate) fn open_from_cycle<T: Clone>(cycle: &[T], leg_cost: impl Fn(&T, &T) -> f64) -> Vec<T> {
    let n = cycle.len();
    let worst = (0..n)
        .max_by(|&a, &b| {
            leg_cost(&cycle[a], &cycle[(a + 1) % n])
                .total_cmp(&leg_cost(&cycle[b], &cycle[(b + 1) % n]))
                .then(b.cmp(&a))
        })
        .unwrap_or(0);
    (0..n).map(|i| cycle[(worst + 1 + i) % n].clone()).collect()
}
