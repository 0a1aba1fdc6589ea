//! Local search directly on the clustered tour: cluster order plus one
//! heading per cluster. Used to polish tours extracted from the ATSP stage.
//!
//! Open tours carry an extra zero-cost "depot" cluster with a single
//! heading; the two arcs touching it are free, so the cyclic search
//! optimizes the open path including the choice of its endpoints.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ClusterGraph;

const MAX_SEGMENT: usize = 3;

struct Refiner<'a> {
    graph: &'a ClusterGraph,
    k: usize,
    depot: Option<usize>,
    eps: f64,
}

#[derive(Clone)]
struct State {
    seq: Vec<usize>,
    hd: Vec<usize>,
}

impl<'a> Refiner<'a> {
    fn headings(&self, cluster: usize) -> usize {
        if Some(cluster) == self.depot {
            1
        } else {
            self.k
        }
    }

    #[inline]
    fn arc(&self, a: usize, ha: usize, b: usize, hb: usize) -> f64 {
        if Some(a) == self.depot || Some(b) == self.depot {
            0.0
        } else {
            self.graph.cost(a * self.k + ha, b * self.k + hb)
        }
    }

    fn cost(&self, s: &State) -> f64 {
        let n = s.seq.len();
        (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                self.arc(s.seq[i], s.hd[i], s.seq[j], s.hd[j])
            })
            .sum()
    }

    /// Exact heading choice for the current cluster order.
    fn optimize_headings(&self, s: &mut State) {
        let n = s.seq.len();
        // start at the cluster with the fewest headings
        let first = (0..n).min_by_key(|&i| self.headings(s.seq[i])).unwrap_or(0);
        let seq: Vec<usize> = (0..n).map(|i| s.seq[(first + i) % n]).collect();
        let mut best = (f64::INFINITY, Vec::new());
        let mut parent = vec![vec![0usize; self.k]; n];
        for h0 in 0..self.headings(seq[0]) {
            let mut dist = vec![f64::INFINITY; self.k];
            dist[h0] = 0.0;
            for i in 1..n {
                let mut next = vec![f64::INFINITY; self.k];
                for hb in 0..self.headings(seq[i]) {
                    for ha in 0..self.headings(seq[i - 1]) {
                        let c = dist[ha] + self.arc(seq[i - 1], ha, seq[i], hb);
                        if c < next[hb] {
                            next[hb] = c;
                            parent[i][hb] = ha;
                        }
                    }
                }
                dist = next;
            }
            for hl in 0..self.headings(seq[n - 1]) {
                let c = dist[hl] + self.arc(seq[n - 1], hl, seq[0], h0);
                if c < best.0 - self.eps {
                    let mut hd = vec![0; n];
                    hd[n - 1] = hl;
                    for i in (1..n).rev() {
                        hd[i - 1] = parent[i][hd[i]];
                    }
                    best = (c, hd);
                }
            }
        }
        if best.0 < self.cost(s) - self.eps {
            s.seq = seq;
            s.hd = best.1;
        }
    }

    /// Moves one segment of up to three clusters to a better position.
    /// Single clusters may also change heading when reinserted.
    fn or_opt_once(&self, s: &mut State) -> bool {
        let n = s.seq.len();
        if n < 4 {
            return false;
        }
        for len in 1..=MAX_SEGMENT.min(n - 2) {
            for start in 0..n {
                let at = |i: usize| (s.seq[i % n], s.hd[i % n]);
                let prev = at(start + n - 1);
                let first = at(start);
                let last = at(start + len - 1);
                let next = at(start + len);
                let removed = self.arc(prev.0, prev.1, first.0, first.1) + self.arc(last.0, last.1, next.0, next.1)
                    - self.arc(prev.0, prev.1, next.0, next.1);
                let mut best: Option<(f64, usize, usize)> = None;
                for gap in 0..n - len - 1 {
                    let u = at(start + len + gap);
                    let v = at(start + len + gap + 1);
                    let base = self.arc(u.0, u.1, v.0, v.1);
                    let choices = if len == 1 { self.headings(first.0) } else { 1 };
                    for h in 0..choices {
                        let hf = if len == 1 { h } else { first.1 };
                        let hl = if len == 1 { h } else { last.1 };
                        let ins = self.arc(u.0, u.1, first.0, hf) + self.arc(last.0, hl, v.0, v.1) - base;
                        if ins < removed - self.eps && best.is_none_or(|b| ins < b.0) {
                            best = Some((ins, gap, h));
                        }
                    }
                }
                if let Some((_, gap, h)) = best {
                    let idx: Vec<usize> = (0..len).map(|i| (start + i) % n).collect();
                    let seg_c: Vec<usize> = idx.iter().map(|&i| s.seq[i]).collect();
                    let mut seg_h: Vec<usize> = idx.iter().map(|&i| s.hd[i]).collect();
                    if len == 1 {
                        seg_h[0] = h;
                    }
                    let rest: Vec<usize> = (0..n - len).map(|i| (start + len + i) % n).collect();
                    let mut seq = Vec::with_capacity(n);
                    let mut hd = Vec::with_capacity(n);
                    for (pos, &i) in rest.iter().enumerate() {
                        seq.push(s.seq[i]);
                        hd.push(s.hd[i]);
                        if pos == gap {
                            seq.extend_from_slice(&seg_c);
                            hd.extend_from_slice(&seg_h);
                        }
                    }
                    s.seq = seq;
                    s.hd = hd;
                    return true;
                }
            }
        }
        false
    }

    fn descend(&self, s: &mut State) -> f64 {
        let mut cost = self.cost(s);
        loop {
            while self.or_opt_once(s) {}
            self.optimize_headings(s);
            let c = self.cost(s);
            if c >= cost - self.eps {
                return c;
            }
            cost = c;
        }
    }
}

/// Improves a one-node-per-cluster cycle given as graph nodes in visiting
/// order. With `open`, the closing arc is free and the result is rotated
/// so that it is the dropped leg. Never returns a worse tour.
pub(crate) fn refine_cluster_tour(
    graph: &ClusterGraph,
    nodes: &[usize],
    open: bool,
    rounds: usize,
    seed: u64,
) -> Vec<usize> {
    let k = graph.headings_per_target();
    let w = graph.n_targets();
    let scale = nodes.len() as f64
        * (0..nodes.len())
            .map(|i| graph.cost(nodes[i], nodes[(i + 1) % nodes.len()]))
            .fold(1.0f64, f64::max);
    let r = Refiner {
        graph,
        k,
        depot: open.then_some(w),
        eps: 1e-12 * scale,
    };
    let mut s = State {
        seq: nodes.iter().map(|&v| v / k).collect(),
        hd: nodes.iter().map(|&v| v % k).collect(),
    };
    if open {
        // place the depot on the most expensive arc
        let n = s.seq.len();
        let worst = (0..n)
            .max_by(|&a, &b| {
                let ca = graph.cost(nodes[a], nodes[(a + 1) % n]);
                let cb = graph.cost(nodes[b], nodes[(b + 1) % n]);
                ca.total_cmp(&cb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        s.seq.insert(worst + 1, w);
        s.hd.insert(worst + 1, 0);
    }
    let mut best_cost = r.descend(&mut s);
    let n = s.seq.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED_0F_C1A5);
    if n >= 8 {
        for _ in 0..rounds {
            let mut cuts = [rng.random_range(1..n), rng.random_range(1..n), rng.random_range(1..n)];
            cuts.sort_unstable();
            if cuts[0] == cuts[1] || cuts[1] == cuts[2] {
                continue;
            }
            let [i, j, l] = cuts;
            let splice = |v: &[usize]| -> Vec<usize> {
                let mut out = v[..i].to_vec();
                out.extend_from_slice(&v[j..l]);
                out.extend_from_slice(&v[i..j]);
                out.extend_from_slice(&v[l..]);
                out
            };
            let mut trial = State {
                seq: splice(&s.seq),
                hd: splice(&s.hd),
            };
            let c = r.descend(&mut trial);
            if c < best_cost - r.eps {
                best_cost = c;
                s = trial;
            }
        }
    }
    let n = s.seq.len();
    let offset = if open {
        s.seq.iter().position(|&c| c == w).map_or(0, |p| p + 1)
    } else {
        0
    };
    (0..n)
        .map(|i| (offset + i) % n)
        .filter(|&i| s.seq[i] != w || !open)
        .map(|i| s.seq[i] * k + s.hd[i])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::routing::CostMatrix;

    fn cycle(g: &ClusterGraph, nodes: &[usize]) -> f64 {
        (0..nodes.len()).map(|i| g.cost(nodes[i], nodes[(i + 1) % nodes.len()])).sum()
    }

    #[test]
    fn picks_cheap_headings_for_fixed_order() {
        // two headings per cluster; heading 1 everywhere is much cheaper
        let m = CostMatrix::from_fn(6, |i, j| if i % 2 == 1 && j % 2 == 1 { 1.0 } else { 10.0 });
        let g = ClusterGraph::from_costs(3, 2, m).unwrap();
        let out = refine_cluster_tour(&g, &[0, 2, 4], false, 10, 0);
        assert_eq!(cycle(&g, &out), 3.0);
    }

    #[test]
    fn open_tour_drops_most_expensive_arc() {
        let inf = f64::INFINITY;
        let rows = vec![
            vec![inf, 1.0, 5.0, 9.0],
            vec![9.0, inf, 1.0, 5.0],
            vec![5.0, 9.0, inf, 1.0],
            vec![50.0, 5.0, 9.0, inf],
        ];
        let g = ClusterGraph::from_costs(4, 1, CostMatrix::from_rows(&rows).unwrap()).unwrap();
        let out = refine_cluster_tour(&g, &[0, 1, 2, 3], true, 10, 0);
        assert_eq!(out, vec![0, 1, 2, 3]);
    }
}
