//! Heading discretization of the targets and the reduction of the resulting
//! one-node-per-cluster tour problem to a plain asymmetric TSP.

use std::f64::consts::TAU;

use crate::geometry::{dubins_distance, Configuration};

use super::{CostMatrix, Field, RoutingError};

/// Targets expanded into clusters of `k` candidate headings each.
#[derive(Debug, Clone)]
pub struct ClusterGraph {
    n_targets: usize,
    k: usize,
    node_config: Vec<Configuration>,
    cost: CostMatrix,
}

/// Candidate heading `index` of `k`, evenly spaced from 0.
pub fn candidate_heading(index: usize, k: usize) -> f64 {
    index as f64 * TAU / k as f64
}

impl ClusterGraph {
    pub fn n_targets(&self) -> usize {
        self.n_targets
    }

    pub fn headings_per_target(&self) -> usize {
        self.k
    }

    pub fn n_nodes(&self) -> usize {
        self.node_config.len()
    }

    pub fn cluster_of(&self, node: usize) -> usize {
        node / self.k
    }

    pub fn node_config(&self, node: usize) -> Configuration {
        self.node_config[node]
    }

    /// Dubins length from node `i` to node `j`; infinite inside a cluster.
    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost.get(i, j)
    }

    pub fn cost_matrix(&self) -> &CostMatrix {
        &self.cost
    }

    /// Builds a cluster graph from an explicit cost matrix. Intended for
    /// tests and for callers with their own metric; node configurations
    /// are left at the origin.
    pub fn from_costs(n_targets: usize, k: usize, cost: CostMatrix) -> Result<Self, RoutingError> {
        if k == 0 {
            return Err(RoutingError::InvalidHeadingCount(k));
        }
        if n_targets < 2 {
            return Err(RoutingError::TooFewTargets(n_targets));
        }
        if cost.size() != n_targets * k {
            return Err(RoutingError::InvalidMatrix(format!(
                "expected {} nodes, matrix has {}",
                n_targets * k,
                cost.size()
            )));
        }
        let mut cost = cost;
        for i in 0..n_targets * k {
            for j in 0..n_targets * k {
                if i / k == j / k {
                    cost.set(i, j, f64::INFINITY);
                } else if !cost.get(i, j).is_finite() {
                    return Err(RoutingError::InvalidMatrix(format!(
                        "inter-cluster entry ({i}, {j}) is not finite"
                    )));
                }
            }
        }
        Ok(ClusterGraph {
            n_targets,
            k,
            node_config: vec![Configuration::new(0.0, 0.0, 0.0); n_targets * k],
            cost,
        })
    }
}

/// Expands every target into `k` headings `k'·2π/k` and fills the
/// inter-cluster Dubins distances.
pub fn build_cluster_graph(field: &Field, k: usize, rho: f64) -> Result<ClusterGraph, RoutingError> {
    if k == 0 {
        return Err(RoutingError::InvalidHeadingCount(k));
    }
    if field.len() < 2 {
        return Err(RoutingError::TooFewTargets(field.len()));
    }
    let node_config: Vec<Configuration> = field
        .targets()
        .iter()
        .flat_map(|t| (0..k).map(move |h| Configuration::new(t[0], t[1], candidate_heading(h, k))))
        .collect();
    let n = node_config.len();
    let mut cost = CostMatrix::filled(n, f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            if i / k != j / k {
                cost.set(i, j, dubins_distance(node_config[i], node_config[j], rho)?);
            }
        }
    }
    Ok(ClusterGraph {
        n_targets: field.len(),
        k,
        node_config,
        cost,
    })
}

/// Asymmetric TSP instance produced by the Noon–Bean reduction.
#[derive(Debug, Clone)]
pub struct NoonBean {
    pub matrix: CostMatrix,
    /// Constant added to every inter-cluster arc.
    pub offset: f64,
    n_clusters: usize,
    k: usize,
}

impl NoonBean {
    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    /// Maps an ATSP cycle back to one node per cluster, in visiting order.
    /// Each cluster contributes the node through which the tour enters it.
    pub fn map_tour(&self, atsp_order: &[usize]) -> Vec<usize> {
        let n = atsp_order.len();
        let k = self.k;
        let mut seen = vec![false; self.n_clusters];
        let mut selected = Vec::with_capacity(self.n_clusters);
        // start right after a cluster change so the first entry is seen whole
        let start = (0..n)
            .find(|&i| atsp_order[(i + n - 1) % n] / k != atsp_order[i] / k)
            .unwrap_or(0);
        for off in 0..n {
            let node = atsp_order[(start + off) % n];
            let cl = node / k;
            if !seen[cl] {
                seen[cl] = true;
                selected.push(node);
            }
        }
        selected
    }

    /// GTSP cost of an ATSP cycle that enters every cluster exactly once.
    pub fn gtsp_cost(&self, atsp_cost: f64) -> f64 {
        atsp_cost - self.n_clusters as f64 * self.offset
    }
}

/// Reduces the cluster graph to an ATSP whose optimal cycles enter each
/// cluster once, run its zero-cost internal cycle, and leave from the
/// entry node's cyclic predecessor with the entry node's outgoing cost.
pub fn gtsp_to_atsp(graph: &ClusterGraph) -> NoonBean {
    let k = graph.k;
    let n = graph.n_nodes();
    let offset = {
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let c = graph.cost(i, j);
                if c.is_finite() {
                    sum += c.abs();
                }
            }
        }
        sum + 1.0
    };
    let succ = |i: usize| (i / k) * k + (i % k + 1) % k;
    let mut matrix = CostMatrix::filled(n, f64::INFINITY);
    for i in 0..n {
        if k > 1 {
            matrix.set(i, succ(i), 0.0);
        }
        // arcs leaving i are charged as if leaving succ(i)
        let source = succ(i);
        for j in 0..n {
            if i / k != j / k {
                matrix.set(i, j, graph.cost(source, j) + offset);
            }
        }
    }
    NoonBean {
        matrix,
        offset,
        n_clusters: graph.n_targets,
        k,
    }
}
