//! Tour planners: coupled heading/order search and the decoupled baseline.

use crate::geometry::Configuration;

use super::cluster::{build_cluster_graph, gtsp_to_atsp};
use super::etsp::solve_etsp;
use super::refine::refine_cluster_tour;
use super::tour::open_from_cycle;
use super::{solve_atsp, AtspBudget, Field, RoutingError, Tour};

fn chord(field: &Field, a: usize, b: usize) -> f64 {
    let (p, q) = (field.targets()[a], field.targets()[b]);
    (q[1] - p[1]).atan2(q[0] - p[0])
}

fn check_permutation(order: &[usize], n: usize) -> Result<(), RoutingError> {
    if order.len() != n {
        return Err(RoutingError::InvalidOrder(format!(
            "order has {} entries for {n} targets",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(RoutingError::InvalidOrder(format!("index {i} repeated or out of range")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Assigns headings along a fixed visiting order so that the 1st, 3rd, 5th,
/// ... legs are straight segments; the remaining legs are Dubins curves
/// between the headings fixed by their neighbors.
///
/// With an odd number of targets the last target is not covered by a
/// straight leg. It takes the direction of the chord toward the first
/// target on a closed tour and the direction of its incoming chord on an
/// open one.
pub fn alternating_headings(order: &[usize], field: &Field, rho: f64, closed: bool) -> Result<Tour, RoutingError> {
    let n = field.len();
    check_permutation(order, n)?;
    let mut headings = vec![0.0; n];
    let mut pos = 0;
    while pos + 1 < n {
        let h = chord(field, order[pos], order[pos + 1]);
        headings[pos] = h;
        headings[pos + 1] = h;
        pos += 2;
    }
    if n % 2 == 1 {
        headings[n - 1] = if closed {
            chord(field, order[n - 1], order[0])
        } else {
            chord(field, order[n - 2], order[n - 1])
        };
    }
    let configs = order
        .iter()
        .zip(&headings)
        .map(|(&i, &h)| {
            let t = field.targets()[i];
            Configuration::new(t[0], t[1], h)
        })
        .collect();
    Tour::new(order.to_vec(), configs, closed, rho)
}

/// Jointly chooses visiting order and one of `k` candidate headings per
/// target by solving the clustered tour problem as an asymmetric TSP.
///
/// The ATSP solution is then polished by a local search over cluster order
/// and headings; for open tours that search treats the closing leg as free.
/// The number of polishing rounds is a tenth of the ATSP iteration budget.
pub fn solve_dtsp_coupled(
    field: &Field,
    k: usize,
    rho: f64,
    closed: bool,
    seed: u64,
    budget: &AtspBudget,
) -> Result<Tour, RoutingError> {
    let graph = build_cluster_graph(field, k, rho)?;
    let reduced = gtsp_to_atsp(&graph);
    let atsp_order = solve_atsp(&reduced.matrix, budget, seed)?;
    let nodes = reduced.map_tour(&atsp_order);
    if nodes.len() != field.len() {
        return Err(RoutingError::InvalidOrder(format!(
            "cycle visits {} of {} targets",
            nodes.len(),
            field.len()
        )));
    }
    let nodes = refine_cluster_tour(&graph, &nodes, !closed, budget.iterations / 10, seed);
    let order = nodes.iter().map(|&v| graph.cluster_of(v)).collect();
    let configs = nodes.iter().map(|&v| graph.node_config(v)).collect();
    Tour::new(order, configs, closed, rho)
}

/// Decoupled baseline: Euclidean visiting order, then alternating headings.
pub fn solve_dtsp_decoupled(
    field: &Field,
    rho: f64,
    closed: bool,
    seed: u64,
    budget: &AtspBudget,
) -> Result<Tour, RoutingError> {
    let order = euclidean_order(field, closed, seed, budget)?;
    alternating_headings(&order, field, rho, closed)
}

/// Euclidean visiting order; open orders drop the longest edge of the cycle.
pub fn euclidean_order(field: &Field, closed: bool, seed: u64, budget: &AtspBudget) -> Result<Vec<usize>, RoutingError> {
    let order = solve_etsp(field, seed, budget)?;
    Ok(if closed {
        order
    } else {
        open_from_cycle(&order, |&a, &b| field.distance(a, b))
    })
}
