//! Multiple-shooting transcription of the artificial-reference OCP.
//!
//! Decision vector `z = [x̄(1) … x̄(H), ū(0) … ū(H−1), s̄]`; `x̄(0)` is the
//! measured state and enters by substitution. Headings inside `z` are not
//! wrapped, so the shooting defects stay smooth across ±π.

use nalgebra::DMatrix;

use super::solver::{NlpProblem, SparseRows};
use super::{NmpcError, OcpParams};
use crate::geometry::{angle_diff, Configuration, ReferencePath};
use crate::vehicle::{rk4_raw, ControlInput};

/// One OCP instance: measured state, segment, previously applied input.
#[derive(Debug, Clone)]
pub struct OcpNlp<'a> {
    x0: [f64; 3],
    segment: &'a ReferencePath,
    prev: ControlInput,
    params: &'a OcpParams,
}

pub fn build_nlp<'a>(
    x0: Configuration,
    segment: &'a ReferencePath,
    prev_applied: ControlInput,
    params: &'a OcpParams,
) -> Result<OcpNlp<'a>, NmpcError> {
    if segment.is_empty() {
        return Err(NmpcError::EmptySegment);
    }
    if !x0.is_finite() || !prev_applied.v.is_finite() || !prev_applied.omega.is_finite() {
        return Err(NmpcError::NonFiniteState);
    }
    params.validate()?;
    Ok(OcpNlp {
        x0: [x0.x(), x0.y(), x0.theta()],
        segment,
        prev: prev_applied,
        params,
    })
}

/// First and second derivatives of the RK4 position update with respect
/// to `(θ, v, ω)`. Second derivatives are ordered θθ, θv, θω, vω, ωω
/// (`∂²/∂v²` vanishes).
struct Rk4Derivs {
    d1: [[f64; 3]; 2],
    d2: [[f64; 5]; 2],
}

fn rk4_derivs(theta: f64, v: f64, omega: f64, h: f64) -> Rk4Derivs {
    let a0 = theta;
    let a1 = theta + 0.5 * omega * h;
    let a2 = theta + omega * h;
    let (s0, c0) = a0.sin_cos();
    let (s1, c1) = a1.sin_cos();
    let (s2, c2) = a2.sin_cos();
    let cs = c0 + 4.0 * c1 + c2;
    let sn = s0 + 4.0 * s1 + s2;
    let c_w = 2.0 * h * c1 + h * c2;
    let s_w = 2.0 * h * s1 + h * s2;
    let c_ww = h * h * (c1 + c2);
    let s_ww = h * h * (s1 + s2);
    let k = v * h / 6.0;
    let g = h / 6.0;
    Rk4Derivs {
        d1: [[-k * sn, g * cs, -k * s_w], [k * cs, g * sn, k * c_w]],
        d2: [
            [-k * cs, -g * sn, -k * c_w, -g * s_w, -k * c_ww],
            [-k * sn, g * cs, -k * s_w, g * c_w, -k * s_ww],
        ],
    }
}

impl<'a> OcpNlp<'a> {
    pub fn params(&self) -> &OcpParams {
        self.params
    }

    pub fn segment(&self) -> &ReferencePath {
        self.segment
    }

    pub fn initial_state(&self) -> Configuration {
        Configuration::new(self.x0[0], self.x0[1], self.x0[2])
    }

    pub fn prev_applied(&self) -> ControlInput {
        self.prev
    }

    pub fn horizon(&self) -> usize {
        self.params.horizon
    }

    /// Index of `x̄(k)` for `k ≥ 1`.
    pub fn state_index(&self, k: usize) -> usize {
        debug_assert!(k >= 1 && k <= self.horizon());
        3 * (k - 1)
    }

    pub fn input_index(&self, k: usize) -> usize {
        3 * self.horizon() + 2 * k
    }

    pub fn s_index(&self) -> usize {
        5 * self.horizon()
    }

    fn state(&self, z: &[f64], k: usize) -> [f64; 3] {
        if k == 0 {
            self.x0
        } else {
            let i = self.state_index(k);
            [z[i], z[i + 1], z[i + 2]]
        }
    }

    fn input(&self, z: &[f64], k: usize) -> [f64; 2] {
        let i = self.input_index(k);
        [z[i], z[i + 1]]
    }

    /// `p(s)` and `p'(s)`, extended linearly outside `[0, 1]` so that
    /// intermediate iterates need not respect the bounds on `s̄`.
    pub fn reference(&self, s: f64) -> ([f64; 3], [f64; 3]) {
        let c = s.clamp(0.0, 1.0);
        let p = self.segment.eval(c);
        let d = self.segment.derivative(c);
        let off = s - c;
        (
            [p.x() + d[0] * off, p.y() + d[1] * off, p.theta() + d[2] * off],
            d,
        )
    }

    fn error(&self, x: &[f64; 3], p: &[f64; 3]) -> [f64; 3] {
        [x[0] - p[0], x[1] - p[1], angle_diff(x[2], p[2])]
    }

    /// Number of inequality rows per group, in order: input box, input
    /// rate, minimum turn, `s̄` bounds, obstacles, geofence.
    pub fn ineq_counts(&self) -> [usize; 6] {
        let h = self.horizon();
        let fence = if self.params.geofence.is_some() { 4 * h } else { 0 };
        [4 * h, 4 * h, 2 * h, 2, h * self.params.obstacles.len(), fence]
    }
}

fn mat_vec<const N: usize>(m: &[[f64; N]; N], v: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (0..N).map(|j| m[i][j] * v[j]).sum();
    }
    out
}

fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    (0..N).map(|i| a[i] * b[i]).sum()
}

impl NlpProblem for OcpNlp<'_> {
    fn n_vars(&self) -> usize {
        self.params.n_vars()
    }

    fn n_eq(&self) -> usize {
        3 * self.horizon() + 3
    }

    fn n_ineq(&self) -> usize {
        self.ineq_counts().iter().sum()
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let s = z[self.s_index()];
        let (p, _) = self.reference(s);
        let q = &self.params.q;
        let r = &self.params.r;
        let mut f = 0.0;
        for k in 0..self.horizon() {
            let e = self.error(&self.state(z, k), &p);
            let a = dot(&e, &mat_vec(q, &e));
            let u = self.input(z, k);
            let b = dot(&u, &mat_vec(r, &u));
            f += a * a + b * b;
        }
        f + self.params.q_s * (1.0 - s).powi(2)
    }

    fn gradient(&self, z: &[f64], g: &mut [f64]) {
        g.fill(0.0);
        let is = self.s_index();
        let s = z[is];
        let (p, dp) = self.reference(s);
        let q = &self.params.q;
        let r = &self.params.r;
        for k in 0..self.horizon() {
            let e = self.error(&self.state(z, k), &p);
            let qe = mat_vec(q, &e);
            let a = dot(&e, &qe);
            let ge = qe.map(|v| 4.0 * a * v);
            if k >= 1 {
                let ix = self.state_index(k);
                for i in 0..3 {
                    g[ix + i] += ge[i];
                }
            }
            g[is] -= dot(&ge, &dp);
            let u = self.input(z, k);
            let ru = mat_vec(r, &u);
            let b = dot(&u, &ru);
            let iu = self.input_index(k);
            g[iu] += 4.0 * b * ru[0];
            g[iu + 1] += 4.0 * b * ru[1];
        }
        g[is] -= 2.0 * self.params.q_s * (1.0 - s);
    }

    fn eq_values(&self, z: &[f64], out: &mut [f64]) {
        let h = self.horizon();
        for k in 0..h {
            let u = self.input(z, k);
            let f = rk4_raw(self.state(z, k), &ControlInput::new(u[0], u[1]), self.params.dt);
            let next = self.state(z, k + 1);
            for i in 0..3 {
                out[3 * k + i] = next[i] - f[i];
            }
        }
        let (p, _) = self.reference(z[self.s_index()]);
        let e = self.error(&self.state(z, h), &p);
        out[3 * h..3 * h + 3].copy_from_slice(&e);
    }

    fn eq_jacobian(&self, z: &[f64]) -> SparseRows {
        let h = self.horizon();
        let dt = self.params.dt;
        let mut rows = Vec::with_capacity(3 * h + 3);
        for k in 0..h {
            let x = self.state(z, k);
            let u = self.input(z, k);
            let d = rk4_derivs(x[2], u[0], u[1], dt);
            let inext = self.state_index(k + 1);
            let iu = self.input_index(k);
            for c in 0..2 {
                let mut row = vec![(inext + c, 1.0)];
                if k >= 1 {
                    let ix = self.state_index(k);
                    row.push((ix + c, -1.0));
                    row.push((ix + 2, -d.d1[c][0]));
                }
                row.push((iu, -d.d1[c][1]));
                row.push((iu + 1, -d.d1[c][2]));
                rows.push(row);
            }
            let mut row = vec![(inext + 2, 1.0)];
            if k >= 1 {
                row.push((self.state_index(k) + 2, -1.0));
            }
            row.push((iu + 1, -dt));
            rows.push(row);
        }
        let is = self.s_index();
        let (_, dp) = self.reference(z[is]);
        let ix = self.state_index(h);
        for i in 0..3 {
            rows.push(vec![(ix + i, 1.0), (is, -dp[i])]);
        }
        rows
    }

    fn ineq_values(&self, z: &[f64], out: &mut [f64]) {
        let h = self.horizon();
        let lim = &self.params.limits;
        let mut j = 0;
        let mut push = |v: f64| {
            out[j] = v;
            j += 1;
        };
        for k in 0..h {
            let [v, w] = self.input(z, k);
            push(v - lim.v_min);
            push(lim.v_max - v);
            push(w + lim.omega_max);
            push(lim.omega_max - w);
        }
        for k in 0..h {
            let [v, w] = self.input(z, k);
            let [pv, pw] = if k == 0 { [self.prev.v, self.prev.omega] } else { self.input(z, k - 1) };
            push(lim.dv_max - (v - pv));
            push(lim.dv_max + (v - pv));
            push(lim.domega_max - (w - pw));
            push(lim.domega_max + (w - pw));
        }
        for k in 0..h {
            let [v, w] = self.input(z, k);
            push(v - lim.r_min * w);
            push(v + lim.r_min * w);
        }
        let s = z[self.s_index()];
        push(s);
        push(1.0 - s);
        for o in &self.params.obstacles {
            let clear = o.radius + lim.footprint_radius;
            for k in 1..=h {
                let x = self.state(z, k);
                push((x[0] - o.x).powi(2) + (x[1] - o.y).powi(2) - clear * clear);
            }
        }
        if let Some(g) = &self.params.geofence {
            for k in 1..=h {
                let x = self.state(z, k);
                push(x[0] - g.min_x);
                push(g.max_x - x[0]);
                push(x[1] - g.min_y);
                push(g.max_y - x[1]);
            }
        }
    }

    fn ineq_jacobian(&self, z: &[f64]) -> SparseRows {
        let h = self.horizon();
        let r_min = self.params.limits.r_min;
        let mut rows: SparseRows = Vec::with_capacity(self.n_ineq());
        for k in 0..h {
            let iu = self.input_index(k);
            rows.push(vec![(iu, 1.0)]);
            rows.push(vec![(iu, -1.0)]);
            rows.push(vec![(iu + 1, 1.0)]);
            rows.push(vec![(iu + 1, -1.0)]);
        }
        for k in 0..h {
            let iu = self.input_index(k);
            for c in 0..2 {
                if k == 0 {
                    rows.push(vec![(iu + c, -1.0)]);
                    rows.push(vec![(iu + c, 1.0)]);
                } else {
                    let ip = self.input_index(k - 1);
                    rows.push(vec![(iu + c, -1.0), (ip + c, 1.0)]);
                    rows.push(vec![(iu + c, 1.0), (ip + c, -1.0)]);
                }
            }
        }
        for k in 0..h {
            let iu = self.input_index(k);
            rows.push(vec![(iu, 1.0), (iu + 1, -r_min)]);
            rows.push(vec![(iu, 1.0), (iu + 1, r_min)]);
        }
        let is = self.s_index();
        rows.push(vec![(is, 1.0)]);
        rows.push(vec![(is, -1.0)]);
        for o in &self.params.obstacles {
            for k in 1..=h {
                let x = self.state(z, k);
                let ix = self.state_index(k);
                rows.push(vec![(ix, 2.0 * (x[0] - o.x)), (ix + 1, 2.0 * (x[1] - o.y))]);
            }
        }
        if self.params.geofence.is_some() {
            for k in 1..=h {
                let ix = self.state_index(k);
                rows.push(vec![(ix, 1.0)]);
                rows.push(vec![(ix, -1.0)]);
                rows.push(vec![(ix + 1, 1.0)]);
                rows.push(vec![(ix + 1, -1.0)]);
            }
        }
        rows
    }

    fn add_hessian(&self, z: &[f64], sigma: f64, lambda: &[f64], w: &[f64], hm: &mut DMatrix<f64>) {
        let h = self.horizon();
        let is = self.s_index();
        let s = z[is];
        let (p, dp) = self.reference(s);
        let q = &self.params.q;
        let r = &self.params.r;
        for k in 0..h {
            let e = self.error(&self.state(z, k), &p);
            let qe = mat_vec(q, &e);
            let a = dot(&e, &qe);
            let mut g = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = sigma * (8.0 * qe[i] * qe[j] + 4.0 * a * q[i][j]);
                }
            }
            let gdp = mat_vec(&g, &dp);
            hm[(is, is)] += dot(&dp, &gdp);
            if k >= 1 {
                let ix = self.state_index(k);
                for i in 0..3 {
                    for j in 0..3 {
                        hm[(ix + i, ix + j)] += g[i][j];
                    }
                    hm[(ix + i, is)] -= gdp[i];
                    hm[(is, ix + i)] -= gdp[i];
                }
            }
            let u = self.input(z, k);
            let ru = mat_vec(r, &u);
            let b = dot(&u, &ru);
            let iu = self.input_index(k);
            for i in 0..2 {
                for j in 0..2 {
                    hm[(iu + i, iu + j)] += sigma * (8.0 * ru[i] * ru[j] + 4.0 * b * r[i][j]);
                }
            }
        }
        hm[(is, is)] += sigma * 2.0 * self.params.q_s;

        // shooting defects c = x̄(k+1) − F: −λ∇²c = λ∇²F
        let dt = self.params.dt;
        for k in 0..h {
            let x = self.state(z, k);
            let u = self.input(z, k);
            let d = rk4_derivs(x[2], u[0], u[1], dt);
            let iu = self.input_index(k);
            let mut m = [0.0; 5];
            for c in 0..2 {
                let l = lambda[3 * k + c];
                for (mi, di) in m.iter_mut().zip(d.d2[c]) {
                    *mi += l * di;
                }
            }
            let [tt, tv, tw, vw, ww] = m;
            hm[(iu, iu + 1)] += vw;
            hm[(iu + 1, iu)] += vw;
            hm[(iu + 1, iu + 1)] += ww;
            if k >= 1 {
                let it = self.state_index(k) + 2;
                hm[(it, it)] += tt;
                hm[(it, iu)] += tv;
                hm[(iu, it)] += tv;
                hm[(it, iu + 1)] += tw;
                hm[(iu + 1, it)] += tw;
            }
        }

        // obstacle rows are the only curved inequalities
        let [nb, nr, nt, ns, _, _] = self.ineq_counts();
        let mut j = nb + nr + nt + ns;
        for _ in &self.params.obstacles {
            for k in 1..=h {
                let ix = self.state_index(k);
                hm[(ix, ix)] -= 2.0 * w[j];
                hm[(ix + 1, ix + 1)] -= 2.0 * w[j];
                j += 1;
            }
        }
    }
}
