//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn wrap2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU - 1e-12 {
        0.0
    } else {
        r
    }
}

fn left_center(x: f64, y: f64, th: f64, rho: f64) -> (f64, f64) {
    (x - rho * th.sin(), y + rho * th.cos())
}

fn right_center(x: f64, y: f64, th: f64, rho: f64) -> (f64, f64) {
    (x + rho * th.sin(), y - rho * th.cos())
}

/// One candidate curve from the oracle: segment kinds ('L', 'S', 'R') and
/// arc lengths in meters.
#[derive(Debug, Clone, Copy)]
pub struct OracleCurve {
    pub kinds: [char; 3],
    pub lengths: [f64; 3],
}

impl OracleCurve {
    pub fn length(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Integrates the curve with many small Euler-free steps (exact per sub-arc).
    pub fn replay(&self, start: (f64, f64, f64), rho: f64) -> (f64, f64, f64) {
        let (mut x, mut y, mut th) = start;
        for (k, &len) in self.kinds.iter().zip(&self.lengths) {
            match k {
                'S' => {
                    x += len * th.cos();
                    y += len * th.sin();
                }
                'L' => {
                    let (cx, cy) = left_center(x, y, th, rho);
                    th += len / rho;
                    x = cx + rho * th.sin();
                    y = cy - rho * th.cos();
                }
                'R' => {
                    let (cx, cy) = right_center(x, y, th, rho);
                    th -= len / rho;
                    x = cx - rho * th.sin();
                    y = cy + rho * th.cos();
                }
                _ => unreachable!(),
            }
        }
        (x, y, th)
    }
}

/// Enumerates every three-segment candidate from explicit circle/tangent
/// geometry and returns all that exist.
pub fn dubins_candidates(q0: (f64, f64, f64), q1: (f64, f64, f64), rho: f64) -> Vec<OracleCurve> {
    let (x0, y0, t0) = q0;
    let (x1, y1, t1) = q1;
    let mut out = Vec::new();

    // outer tangents between equal-direction circles
    for &turn in &['L', 'R'] {
        let (c1, c2) = if turn == 'L' {
            (left_center(x0, y0, t0, rho), left_center(x1, y1, t1, rho))
        } else {
            (right_center(x0, y0, t0, rho), right_center(x1, y1, t1, rho))
        };
        let (vx, vy) = (c2.0 - c1.0, c2.1 - c1.1);
        let dist = vx.hypot(vy);
        let (a1, a3) = if dist < 1e-12 {
            let total = if turn == 'L' { wrap2pi(t1 - t0) } else { wrap2pi(t0 - t1) };
            (total, 0.0)
        } else {
            let psi = vy.atan2(vx);
            if turn == 'L' {
                (wrap2pi(psi - t0), wrap2pi(t1 - psi))
            } else {
                (wrap2pi(t0 - psi), wrap2pi(psi - t1))
            }
        };
        out.push(OracleCurve {
            kinds: [turn, 'S', turn],
            lengths: [a1 * rho, dist, a3 * rho],
        });
    }

    // inner tangents between opposite-direction circles
    for &(first, last) in &[('L', 'R'), ('R', 'L')] {
        let c1 = if first == 'L' {
            left_center(x0, y0, t0, rho)
        } else {
            right_center(x0, y0, t0, rho)
        };
        let c2 = if last == 'L' {
            left_center(x1, y1, t1, rho)
        } else {
            right_center(x1, y1, t1, rho)
        };
        let (vx, vy) = (c2.0 - c1.0, c2.1 - c1.1);
        let dist = vx.hypot(vy);
        if dist < 2.0 * rho {
            continue;
        }
        let line = (dist * dist - 4.0 * rho * rho).max(0.0).sqrt();
        let offset = (2.0 * rho).atan2(line);
        let psi = if first == 'L' {
            vy.atan2(vx) + offset
        } else {
            vy.atan2(vx) - offset
        };
        let a1 = if first == 'L' { wrap2pi(psi - t0) } else { wrap2pi(t0 - psi) };
        let a3 = if last == 'L' { wrap2pi(t1 - psi) } else { wrap2pi(psi - t1) };
        out.push(OracleCurve {
            kinds: [first, 'S', last],
            lengths: [a1 * rho, line, a3 * rho],
        });
    }

    // three tangent circles
    for &outer in &['L', 'R'] {
        let (c1, c3) = if outer == 'L' {
            (left_center(x0, y0, t0, rho), left_center(x1, y1, t1, rho))
        } else {
            (right_center(x0, y0, t0, rho), right_center(x1, y1, t1, rho))
        };
        let (vx, vy) = (c3.0 - c1.0, c3.1 - c1.1);
        let dist = vx.hypot(vy);
        if dist > 4.0 * rho {
            continue;
        }
        let phi = vy.atan2(vx);
        let gamma = (dist / (4.0 * rho)).clamp(-1.0, 1.0).acos();
        for sign in [-1.0, 1.0] {
            let ang = phi + sign * gamma;
            let c2 = (c1.0 + 2.0 * rho * ang.cos(), c1.1 + 2.0 * rho * ang.sin());
            let p12 = ((c1.0 + c2.0) / 2.0, (c1.1 + c2.1) / 2.0);
            let p23 = ((c2.0 + c3.0) / 2.0, (c2.1 + c3.1) / 2.0);
            let inner = if outer == 'L' { 'R' } else { 'L' };
            let (h1, h2, a1, a2, a3);
            if outer == 'L' {
                h1 = (p12.1 - c1.1).atan2(p12.0 - c1.0) + PI / 2.0;
                h2 = (p23.1 - c3.1).atan2(p23.0 - c3.0) + PI / 2.0;
                a1 = wrap2pi(h1 - t0);
                a2 = wrap2pi(h1 - h2);
                a3 = wrap2pi(t1 - h2);
            } else {
                h1 = (p12.1 - c1.1).atan2(p12.0 - c1.0) - PI / 2.0;
                h2 = (p23.1 - c3.1).atan2(p23.0 - c3.0) - PI / 2.0;
                a1 = wrap2pi(t0 - h1);
                a2 = wrap2pi(h2 - h1);
                a3 = wrap2pi(h2 - t1);
            }
            out.push(OracleCurve {
                kinds: [outer, inner, outer],
                lengths: [a1 * rho, a2 * rho, a3 * rho],
            });
        }
    }
    out
}

/// Shortest candidate that actually lands on `q1` when replayed.
pub fn dubins_oracle(q0: (f64, f64, f64), q1: (f64, f64, f64), rho: f64) -> OracleCurve {
    dubins_candidates(q0, q1, rho)
        .into_iter()
        .filter(|c| {
            let e = c.replay(q0, rho);
            let dth = (e.2 - q1.2).rem_euclid(TAU);
            (e.0 - q1.0).hypot(e.1 - q1.1) < 1e-7 && dth.min(TAU - dth) < 1e-7
        })
        .min_by(|a, b| a.length().total_cmp(&b.length()))
        .expect("at least one CSC candidate always exists")
}

pub fn oracle_distance(q0: (f64, f64, f64), q1: (f64, f64, f64), rho: f64) -> f64 {
    dubins_oracle(q0, q1, rho).length()
}

pub fn random_pose<R: Rng>(rng: &mut R, extent: f64) -> (f64, f64, f64) {
    (
        rng.random_range(-extent..extent),
        rng.random_range(-extent..extent),
        rng.random_range(-PI..PI),
    )
}

/// Closed-form unicycle motion under constant `(v, ω)` for `dt` seconds.
pub fn unicycle_arc(q: (f64, f64, f64), v: f64, omega: f64, dt: f64) -> (f64, f64, f64) {
    let (x, y, th) = q;
    if omega.abs() < 1e-12 {
        return (x + v * dt * th.cos(), y + v * dt * th.sin(), th);
    }
    let r = v / omega;
    (
        x + r * ((th + omega * dt).sin() - th.sin()),
        y - r * ((th + omega * dt).cos() - th.cos()),
        th + omega * dt,
    )
}

/// Exhaustive cycle search over all permutations starting at node 0.
/// Returns (cost, order).
pub fn brute_force_tsp(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    let mut rest: Vec<usize> = (1..n).collect();
    let mut best = (f64::INFINITY, Vec::new());
    permute(&mut rest, 0, &mut |perm| {
        let mut c = 0.0;
        let mut prev = 0;
        for &v in perm {
            c += cost[prev][v];
            prev = v;
        }
        c += cost[prev][0];
        if c < best.0 {
            let mut order = vec![0];
            order.extend_from_slice(perm);
            best = (c, order);
        }
    });
    best
}

fn permute(items: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Held-Karp dynamic program for the (possibly asymmetric) TSP.
/// Returns the optimal cycle cost and one optimal order starting at 0.
pub fn held_karp(cost: &[Vec<f64>]) -> (f64, Vec<usize>) {
    let n = cost.len();
    assert!(n >= 2 && n <= 20);
    let full = 1usize << (n - 1);
    // dp[mask][j]: cheapest path from 0 through `mask` (over nodes 1..n) ending at j+1
    let mut dp = vec![f64::INFINITY; full * (n - 1)];
    let mut parent = vec![usize::MAX; full * (n - 1)];
    for j in 0..n - 1 {
        dp[(1 << j) * (n - 1) + j] = cost[0][j + 1];
    }
    for mask in 1..full {
        for j in 0..n - 1 {
            if mask & (1 << j) == 0 {
                continue;
            }
            let cur = dp[mask * (n - 1) + j];
            if !cur.is_finite() {
                continue;
            }
            for k in 0..n - 1 {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let c = cur + cost[j + 1][k + 1];
                if c < dp[next * (n - 1) + k] {
                    dp[next * (n - 1) + k] = c;
                    parent[next * (n - 1) + k] = j;
                }
            }
        }
    }
    let last_mask = full - 1;
    let (mut best, mut last) = (f64::INFINITY, usize::MAX);
    for j in 0..n - 1 {
        let c = dp[last_mask * (n - 1) + j] + cost[j + 1][0];
        if c < best {
            best = c;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = last_mask;
    let mut j = last;
    while j != usize::MAX {
        order.push(j + 1);
        let p = parent[mask * (n - 1) + j];
        mask &= !(1 << j);
        j = p;
    }
    order.push(0);
    order.reverse();
    (best, order)
}

pub fn cycle_cost(cost: &[Vec<f64>], order: &[usize]) -> f64 {
    (0..order.len())
        .map(|i| cost[order[i]][order[(i + 1) % order.len()]])
        .sum()
}

/// Exhaustive one-node-per-cluster tour search. `cost[i][j]` is indexed by
/// node, node `i` belongs to cluster `i / k`.
pub fn brute_force_gtsp(cost: &[Vec<f64>], clusters: usize, k: usize) -> f64 {
    let mut best = f64::INFINITY;
    let mut rest: Vec<usize> = (1..clusters).collect();
    permute(&mut rest, 0, &mut |perm| {
        let mut seq = vec![0];
        seq.extend_from_slice(perm);
        let combos = k.pow(clusters as u32);
        for code in 0..combos {
            let mut c = code;
            let nodes: Vec<usize> = seq
                .iter()
                .map(|&cl| {
                    let h = c % k;
                    c /= k;
                    cl * k + h
                })
                .collect();
            let total = cycle_cost(cost, &nodes);
            if total < best {
                best = total;
            }
        }
    });
    best
}

pub fn euclid_matrix(points: &[(f64, f64)]) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| (a.0 - b.0).hypot(a.1 - b.1)).collect())
        .collect()
}
