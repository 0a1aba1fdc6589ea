//! Heuristic solver for the asymmetric TSP.
//!
//! Greedy nearest-neighbor construction followed by iterated local search.
//! The local search uses orientation-preserving 3-opt moves (segment
//! exchange, which includes Or-opt segment insertion) restricted to
//! candidate neighbor lists, with don't-look bits. Perturbations are local
//! double-bridge kicks; a long run without improvement restarts from a
//! random tour and the best tour seen is kept. The run length is an iteration count so results are
//! reproducible; an optional wall-clock limit can cut it short.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CostMatrix, RoutingError};

/// Work limit for the local search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtspBudget {
    /// Number of perturbation + local search rounds after the first descent.
    pub iterations: usize,
    /// Optional wall-clock cap; results are only reproducible when it is not hit.
    pub max_time: Option<Duration>,
}

impl Default for AtspBudget {
    fn default() -> Self {
        AtspBudget {
            iterations: 2000,
            max_time: None,
        }
    }
}

impl AtspBudget {
    pub fn iterations(iterations: usize) -> Self {
        AtspBudget {
            iterations,
            max_time: None,
        }
    }
}

const NEIGHBORS: usize = 16;

/// Non-improving kicks after which the search restarts from a random tour.
const RESTART_AFTER: usize = 200;

struct Search<'a> {
    cost: &'a [f64],
    n: usize,
    out_nb: Vec<Vec<usize>>,
    in_nb: Vec<Vec<usize>>,
    eps: f64,
}

/// Tour with position index.
#[derive(Clone)]
struct Tour {
    order: Vec<usize>,
    pos: Vec<usize>,
}

impl Tour {
    fn new(order: Vec<usize>) -> Self {
        let mut pos = vec![0; order.len()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        Tour { order, pos }
    }

    #[inline]
    fn succ(&self, v: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[v] + 1) % n]
    }

    #[inline]
    fn pred(&self, v: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[v] + n - 1) % n]
    }

    /// Offset of `v` after `a` along the tour, in `0..n`.
    #[inline]
    fn rel(&self, a: usize, v: usize) -> usize {
        let n = self.order.len();
        (self.pos[v] + n - self.pos[a]) % n
    }

    /// Turns the blocks `B C D` following `a` into `D C B`, a move the
    /// segment exchange cannot undo in one step.
    fn swap_blocks(&mut self, a: usize, lens: [usize; 3]) {
        let n = self.order.len();
        let start = self.pos[a] + 1;
        let block: Vec<usize> = (0..lens.iter().sum()).map(|i| self.order[(start + i) % n]).collect();
        let (b, rest) = block.split_at(lens[0]);
        let (c, d) = rest.split_at(lens[1]);
        for (i, &v) in d.iter().chain(c).chain(b).enumerate() {
            let p = (start + i) % n;
            self.order[p] = v;
            self.pos[v] = p;
        }
    }

    /// Swaps the blocks `[a+1 ..= a+len1]` and `[a+len1+1 ..= a+len1+len2]`.
    fn exchange(&mut self, a: usize, len1: usize, len2: usize) {
        let n = self.order.len();
        let start = self.pos[a] + 1;
        let block: Vec<usize> = (0..len1 + len2).map(|i| self.order[(start + i) % n]).collect();
        let rotated = block[len1..].iter().chain(&block[..len1]);
        for (i, &v) in rotated.enumerate() {
            let p = (start + i) % n;
            self.order[p] = v;
            self.pos[v] = p;
        }
    }
}

impl<'a> Search<'a> {
    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.n + j]
    }

    fn tour_cost(&self, t: &Tour) -> f64 {
        (0..self.n)
            .map(|p| self.c(t.order[p], t.order[(p + 1) % self.n]))
            .sum()
    }

    /// One improving segment exchange anchored at `a`, applied in place.
    /// Returns the touched nodes.
    fn improve_from(&self, t: &mut Tour, a: usize) -> Option<[usize; 6]> {
        let n = self.n;
        let a1 = t.succ(a);
        let d_a = self.c(a, a1);
        for &b1 in &self.out_nb[a] {
            let g1 = d_a - self.c(a, b1);
            if g1 <= 0.0 {
                break;
            }
            let rb1 = t.rel(a, b1);
            if rb1 < 2 {
                continue;
            }
            let b = t.pred(b1);
            let g2 = g1 + self.c(b, b1);
            for &c in &self.in_nb[a1] {
                let rc = t.rel(a, c);
                if rc < rb1 || rc == 0 {
                    continue;
                }
                let c1 = t.succ(c);
                let gain = g2 + self.c(c, c1) - self.c(c, a1) - self.c(b, c1);
                if gain > self.eps {
                    let len1 = rb1 - 1;
                    let len2 = rc - rb1 + 1;
                    debug_assert!(len1 + len2 < n);
                    t.exchange(a, len1, len2);
                    return Some([a, a1, b, b1, c, c1]);
                }
            }
        }
        None
    }

    fn local_search(&self, t: &mut Tour, queue: &mut VecDeque<usize>, queued: &mut [bool]) {
        while let Some(a) = queue.pop_front() {
            queued[a] = false;
            while let Some(touched) = self.improve_from(t, a) {
                for v in touched {
                    if !queued[v] {
                        queued[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
    }
}

fn neighbor_lists(cost: &[f64], n: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let m = NEIGHBORS.min(n - 1);
    let mut out_nb = Vec::with_capacity(n);
    let mut in_nb = Vec::with_capacity(n);
    let mut buf: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        buf.clear();
        buf.extend((0..n).filter(|&j| j != i));
        let key = |j: usize| cost[i * n + j];
        buf.select_nth_unstable_by(m - 1, |&x, &y| key(x).total_cmp(&key(y)).then(x.cmp(&y)));
        let mut best = buf[..m].to_vec();
        best.sort_by(|&x, &y| key(x).total_cmp(&key(y)).then(x.cmp(&y)));
        out_nb.push(best);

        buf.clear();
        buf.extend((0..n).filter(|&j| j != i));
        let key = |j: usize| cost[j * n + i];
        buf.select_nth_unstable_by(m - 1, |&x, &y| key(x).total_cmp(&key(y)).then(x.cmp(&y)));
        let mut best = buf[..m].to_vec();
        best.sort_by(|&x, &y| key(x).total_cmp(&key(y)).then(x.cmp(&y)));
        in_nb.push(best);
    }
    (out_nb, in_nb)
}

fn nearest_neighbor(cost: &[f64], n: usize, start: usize) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut cur = start;
    visited[cur] = true;
    order.push(cur);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&x, &y| cost[cur * n + x].total_cmp(&cost[cur * n + y]).then(x.cmp(&y)))
            .expect("unvisited node remains");
        visited[next] = true;
        order.push(next);
        cur = next;
    }
    order
}

/// Checks the instance and returns an internal copy in which forbidden arcs
/// carry a finite penalty larger than any tour built from allowed arcs.
fn prepare(matrix: &CostMatrix) -> Result<Vec<f64>, RoutingError> {
    let n = matrix.size();
    if n < 2 {
        return Err(RoutingError::InvalidMatrix(format!("need at least 2 nodes, got {n}")));
    }
    let mut max_abs: f64 = 0.0;
    for i in 0..n {
        let mut any = false;
        for j in 0..n {
            let c = matrix.get(i, j);
            if i != j && c.is_finite() {
                any = true;
                max_abs = max_abs.max(c.abs());
            } else if c.is_nan() {
                return Err(RoutingError::InvalidMatrix(format!("entry ({i}, {j}) is NaN")));
            }
        }
        if !any {
            return Err(RoutingError::Infeasible(i));
        }
    }
    let penalty = (max_abs + 1.0) * (n as f64 + 1.0) * 2.0;
    let mut cost = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let c = matrix.get(i, j);
            cost.push(if i != j && c.is_finite() { c } else { penalty });
        }
    }
    Ok(cost)
}

/// Returns a Hamiltonian cycle as a node order. Deterministic for a fixed
/// seed and iteration budget.
pub fn solve_atsp(matrix: &CostMatrix, budget: &AtspBudget, seed: u64) -> Result<Vec<usize>, RoutingError> {
    let cost = prepare(matrix)?;
    let n = matrix.size();
    if n == 2 {
        return Ok(vec![0, 1]);
    }
    if n == 3 {
        let a = matrix.cycle_cost(&[0, 1, 2]);
        let b = matrix.cycle_cost(&[0, 2, 1]);
        return Ok(if b < a { vec![0, 2, 1] } else { vec![0, 1, 2] });
    }
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (out_nb, in_nb) = neighbor_lists(&cost, n);
    let scale = cost.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let search = Search {
        cost: &cost,
        n,
        out_nb,
        in_nb,
        eps: 64.0 * f64::EPSILON * scale.max(1.0),
    };

    let start = rng.random_range(0..n);
    let mut current = Tour::new(nearest_neighbor(&cost, n, start));
    let mut queued = vec![true; n];
    let mut queue: VecDeque<usize> = current.order.iter().copied().collect();
    search.local_search(&mut current, &mut queue, &mut queued);
    let mut current_cost = search.tour_cost(&current);

    let max_block = (n / 3).clamp(1, 50);
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut stale = 0;
    for _ in 0..budget.iterations {
        if budget.max_time.is_some_and(|t| started.elapsed() >= t) {
            break;
        }
        let mut trial = current.clone();
        let a = rng.random_range(0..n);
        let lens = [
            rng.random_range(1..=max_block),
            rng.random_range(1..=max_block),
            rng.random_range(1..=max_block),
        ];
        if lens.iter().sum::<usize>() >= n {
            continue;
        }
        let p = trial.pos[a];
        let mut touched = [a; 8];
        let mut at = p;
        for (i, len) in lens.iter().enumerate() {
            touched[2 * i + 1] = trial.order[(at + 1) % n];
            at += len;
            touched[2 * i + 2] = trial.order[at % n];
        }
        touched[7] = trial.order[(at + 1) % n];
        trial.swap_blocks(a, lens);
        for v in touched {
            if !queued[v] {
                queued[v] = true;
                queue.push_back(v);
            }
        }
        search.local_search(&mut trial, &mut queue, &mut queued);
        let trial_cost = search.tour_cost(&trial);
        if trial_cost < current_cost - search.eps {
            current = trial;
            current_cost = trial_cost;
            stale = 0;
        } else {
            stale += 1;
        }
        if current_cost < best_cost - search.eps {
            best = current.clone();
            best_cost = current_cost;
        }
        if stale >= RESTART_AFTER {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            current = Tour::new(order);
            queue.extend(current.order.iter().copied());
            queued.iter_mut().for_each(|q| *q = true);
            search.local_search(&mut current, &mut queue, &mut queued);
            current_cost = search.tour_cost(&current);
            stale = 0;
        }
    }
    Ok(best.order)
}
