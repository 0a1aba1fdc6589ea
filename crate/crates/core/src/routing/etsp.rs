//! Euclidean TSP: nearest-neighbor start, 2-opt and Or-opt descent, and
//! seeded double-bridge restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AtspBudget, Field, RoutingError};

/// Length of the closed Euclidean cycle through `order`.
pub fn euclidean_cycle_length(field: &Field, order: &[usize]) -> f64 {
    let n = order.len();
    (0..n).map(|i| field.distance(order[i], order[(i + 1) % n])).sum()
}

/// Length of the open Euclidean path through `order`.
pub fn euclidean_path_length(field: &Field, order: &[usize]) -> f64 {
    order.windows(2).map(|w| field.distance(w[0], w[1])).sum()
}

fn two_opt(field: &Field, order: &mut [usize]) -> bool {
    let n = order.len();
    let mut improved = false;
    loop {
        let mut found = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let d = |a: usize, b: usize| field.distance(order[a], order[b]);
                let delta = d(i, j) + d(i + 1, (j + 1) % n) - d(i, i + 1) - d(j, (j + 1) % n);
                if delta < -1e-12 {
                    order[i + 1..=j].reverse();
                    found = true;
                    improved = true;
                }
            }
        }
        if !found {
            return improved;
        }
    }
}

fn or_opt(field: &Field, order: &mut Vec<usize>) -> bool {
    let n = order.len();
    if n < 5 {
        return false;
    }
    let mut improved = false;
    'restart: loop {
        for len in 1..=3usize {
            for start in 0..n {
                let d = |a: usize, b: usize| field.distance(a, b);
                let seg: Vec<usize> = (0..len).map(|k| order[(start + k) % n]).collect();
                let prev = order[(start + n - 1) % n];
                let next = order[(start + len) % n];
                let removal = d(prev, seg[0]) + d(seg[len - 1], next) - d(prev, next);
                for gap in 0..n - len - 1 {
                    let p = order[(start + len + gap) % n];
                    let q = order[(start + len + gap + 1) % n];
                    let base = d(p, q);
                    let fwd = d(p, seg[0]) + d(seg[len - 1], q) - base;
                    let rev = d(p, seg[len - 1]) + d(seg[0], q) - base;
                    let (ins, reverse) = if rev < fwd { (rev, true) } else { (fwd, false) };
                    if ins < removal - 1e-12 {
                        let mut rest: Vec<usize> =
                            (0..n - len).map(|k| order[(start + len + k) % n]).collect();
                        let at = rest.iter().position(|&v| v == p).unwrap() + 1;
                        let mut moved = seg.clone();
                        if reverse {
                            moved.reverse();
                        }
                        rest.splice(at..at, moved);
                        *order = rest;
                        improved = true;
                        continue 'restart;
                    }
                }
            }
        }
        return improved;
    }
}

fn descend(field: &Field, order: &mut Vec<usize>) {
    loop {
        let a = two_opt(field, order);
        let b = or_opt(field, order);
        if !a && !b {
            break;
        }
    }
}

/// Heuristic shortest closed Euclidean tour through all targets.
pub fn solve_etsp(field: &Field, seed: u64, budget: &AtspBudget) -> Result<Vec<usize>, RoutingError> {
    let n = field.len();
    if n < 2 {
        return Err(RoutingError::TooFewTargets(n));
    }
    if n <= 3 {
        return Ok((0..n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..n);
    let mut visited = vec![false; n];
    let mut order = vec![start];
    visited[start] = true;
    for _ in 1..n {
        let cur = *order.last().unwrap();
        let next = (0..n)
            .filter(|&j| !visited[j])
            .min_by(|&a, &b| field.distance(cur, a).total_cmp(&field.distance(cur, b)))
            .unwrap();
        visited[next] = true;
        order.push(next);
    }
    descend(field, &mut order);
    let mut best_len = euclidean_cycle_length(field, &order);

    if n >= 8 {
        let started = std::time::Instant::now();
        // restarts are cheap relative to the Dubins stage; cap them by size
        let rounds = budget.iterations.min(20 * n);
        for _ in 0..rounds {
            if budget.max_time.is_some_and(|t| started.elapsed() >= t) {
                break;
            }
            let mut cuts = [
                rng.random_range(1..n),
                rng.random_range(1..n),
                rng.random_range(1..n),
            ];
            cuts.sort_unstable();
            if cuts[0] == cuts[1] || cuts[1] == cuts[2] {
                continue;
            }
            let [i, j, k] = cuts;
            let mut trial: Vec<usize> = order[..i].to_vec();
            trial.extend_from_slice(&order[j..k]);
            trial.extend_from_slice(&order[i..j]);
            trial.extend_from_slice(&order[k..]);
            descend(field, &mut trial);
            let len = euclidean_cycle_length(field, &trial);
            if len < best_len - 1e-12 {
                best_len = len;
                order = trial;
            }
        }
    }
    Ok(order)
}

/// Exact shortest closed Euclidean tour by dynamic programming over
/// subsets. Practical up to roughly 16 targets.
pub fn etsp_exact(field: &Field) -> Result<Vec<usize>, RoutingError> {
    let n = field.len();
    if n < 2 {
        return Err(RoutingError::TooFewTargets(n));
    }
    if n > 20 {
        return Err(RoutingError::InvalidOrder(format!(
            "exact Euclidean tour limited to 20 targets, got {n}"
        )));
    }
    let m = n - 1;
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    let mut parent = vec![u8::MAX; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = field.distance(0, j + 1);
    }
    for mask in 1..full {
        for j in 0..m {
            let cur = dp[mask * m + j];
            if mask & (1 << j) == 0 || !cur.is_finite() {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let nm = mask | (1 << k);
                let c = cur + field.distance(j + 1, k + 1);
                if c < dp[nm * m + k] {
                    dp[nm * m + k] = c;
                    parent[nm * m + k] = j as u8;
                }
            }
        }
    }
    let last = (0..m)
        .min_by(|&a, &b| {
            (dp[(full - 1) * m + a] + field.distance(a + 1, 0))
                .total_cmp(&(dp[(full - 1) * m + b] + field.distance(b + 1, 0)))
        })
        .unwrap();
    let mut order = Vec::with_capacity(n);
    let (mut mask, mut j) = (full - 1, last);
    loop {
        order.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if p == u8::MAX {
            break;
        }
        j = p as usize;
    }
    order.push(0);
    order.reverse();
    Ok(order)
}
