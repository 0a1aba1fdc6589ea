//! Primal-dual interior-point method for small dense nonlinear programs
//!
//! ```text
//! minimize f(z)  subject to  c_E(z) = 0,  c_I(z) >= 0
//! ```
//!
//! Inequalities get slack variables and a logarithmic barrier. Each
//! iteration solves the regularized primal-dual Newton system through a
//! Cholesky factorization of the condensed matrix
//! `W + J_Iᵀ Σ J_I + δ_w I + J_Eᵀ J_E / δ_c`; a successful factorization
//! also certifies the inertia of the regularized KKT matrix, and `δ_w` is
//! raised until it does. Steps are globalized with a backtracking filter
//! line search on (constraint violation, barrier objective) with one
//! second-order correction. When the line search breaks down, a
//! Levenberg–Marquardt feasibility phase takes over.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Rows of a sparse Jacobian as `(column, value)` pairs.
pub type SparseRows = Vec<Vec<(usize, f64)>>;

/// Smooth nonlinear program with analytic first and second derivatives.
pub trait NlpProblem {
    fn n_vars(&self) -> usize;
    fn n_eq(&self) -> usize;
    fn n_ineq(&self) -> usize;
    fn objective(&self, z: &[f64]) -> f64;
    fn gradient(&self, z: &[f64], grad: &mut [f64]);
    fn eq_values(&self, z: &[f64], out: &mut [f64]);
    /// Values of the inequality constraints, feasible when `>= 0`.
    fn ineq_values(&self, z: &[f64], out: &mut [f64]);
    fn eq_jacobian(&self, z: &[f64]) -> SparseRows;
    fn ineq_jacobian(&self, z: &[f64]) -> SparseRows;
    /// Adds `∇²(σ f − λᵀ c_E − wᵀ c_I)` to the dense symmetric `h`.
    fn add_hessian(&self, z: &[f64], sigma: f64, lambda: &[f64], w: &[f64], h: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolverStatus {
    Converged,
    MaxIterations,
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Scaled stationarity and complementarity tolerance.
    pub tol: f64,
    /// Constraint violation tolerance (unscaled).
    pub constr_tol: f64,
    pub max_iterations: usize,
    pub mu_init: f64,
    /// Violation the feasibility phase must get below, else infeasible.
    pub infeasibility_threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            constr_tol: 1e-6,
            max_iterations: 200,
            mu_init: 0.1,
            infeasibility_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NlpSolution {
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub w: Vec<f64>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub objective: f64,
    /// Scaled stationarity residual.
    pub stationarity: f64,
    /// Largest equality residual or inequality violation.
    pub violation: f64,
    /// Largest of the scaled stationarity, complementarity, and violation.
    pub kkt_residual: f64,
}

const DELTA_C: f64 = 1e-8;
const S_MAX: f64 = 100.0;
const KAPPA_EPS: f64 = 10.0;
const ETA: f64 = 1e-4;
const GAMMA_THETA: f64 = 1e-5;
const GAMMA_PHI: f64 = 1e-8;
const GAMMA_ALPHA: f64 = 0.05;
const DELTA: f64 = 1.0;
const S_THETA: f64 = 1.1;
const S_PHI: f64 = 2.3;
const MAX_RESTORATIONS: usize = 8;

struct Point {
    f: f64,
    grad: Vec<f64>,
    ce: Vec<f64>,
    ci: Vec<f64>,
    je: SparseRows,
    ji: SparseRows,
}

fn evaluate<P: NlpProblem + ?Sized>(p: &P, z: &[f64]) -> Point {
    let mut grad = vec![0.0; p.n_vars()];
    p.gradient(z, &mut grad);
    let mut ce = vec![0.0; p.n_eq()];
    p.eq_values(z, &mut ce);
    let mut ci = vec![0.0; p.n_ineq()];
    p.ineq_values(z, &mut ci);
    Point {
        f: p.objective(z),
        grad,
        ce,
        ci,
        je: p.eq_jacobian(z),
        ji: p.ineq_jacobian(z),
    }
}

fn values<P: NlpProblem + ?Sized>(p: &P, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let mut ce = vec![0.0; p.n_eq()];
    p.eq_values(z, &mut ce);
    let mut ci = vec![0.0; p.n_ineq()];
    p.ineq_values(z, &mut ci);
    (p.objective(z), ce, ci)
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// `out += Jᵀ v`
fn add_jt_v(j: &SparseRows, v: &[f64], out: &mut [f64]) {
    for (row, &vi) in j.iter().zip(v) {
        if vi != 0.0 {
            for &(c, a) in row {
                out[c] += a * vi;
            }
        }
    }
}

fn j_v(j: &SparseRows, v: &[f64]) -> Vec<f64> {
    j.iter().map(|row| row.iter().map(|&(c, a)| a * v[c]).sum()).collect()
}

/// `m += s · rowᵀ row`
fn add_outer(m: &mut DMatrix<f64>, row: &[(usize, f64)], s: f64) {
    for &(i, a) in row {
        for &(k, b) in row {
            m[(i, k)] += s * a * b;
        }
    }
}

fn violation(ce: &[f64], ci: &[f64]) -> f64 {
    ci.iter().fold(inf_norm(ce), |m, &c| m.max(-c))
}

struct Errors {
    stationarity: f64,
    primal: f64,
    complementarity: f64,
}

struct State {
    z: Vec<f64>,
    t: Vec<f64>,
    lambda: Vec<f64>,
    w: Vec<f64>,
}

struct Solver<'a, P: NlpProblem + ?Sized> {
    p: &'a P,
    opts: SolverOptions,
    sigma: f64,
    n: usize,
    me: usize,
    mi: usize,
}

impl<'a, P: NlpProblem + ?Sized> Solver<'a, P> {
    fn errors(&self, pt: &Point, st: &State, mu: f64) -> Errors {
        let mut rd: Vec<f64> = pt.grad.iter().map(|g| self.sigma * g).collect();
        let neg_l: Vec<f64> = st.lambda.iter().map(|l| -l).collect();
        let neg_w: Vec<f64> = st.w.iter().map(|w| -w).collect();
        add_jt_v(&pt.je, &neg_l, &mut rd);
        add_jt_v(&pt.ji, &neg_w, &mut rd);
        let m = (self.me + self.mi).max(1) as f64;
        let s_d = (S_MAX.max((one_norm(&st.lambda) + one_norm(&st.w)) / m)) / S_MAX;
        let s_c = (S_MAX.max(one_norm(&st.w) / self.mi.max(1) as f64)) / S_MAX;
        let slack_res = pt.ci.iter().zip(&st.t).fold(0.0f64, |acc, (c, t)| acc.max((c - t).abs()));
        let comp = st.t.iter().zip(&st.w).fold(0.0f64, |acc, (t, w)| acc.max((t * w - mu).abs()));
        Errors {
            stationarity: inf_norm(&rd) / s_d,
            primal: inf_norm(&pt.ce).max(slack_res),
            complementarity: comp / s_c,
        }
    }

    fn least_squares_multipliers(&self, pt: &Point, w: &[f64]) -> Vec<f64> {
        if self.me == 0 {
            return Vec::new();
        }
        let mut rhs_z: Vec<f64> = pt.grad.iter().map(|g| self.sigma * g).collect();
        let neg_w: Vec<f64> = w.iter().map(|x| -x).collect();
        add_jt_v(&pt.ji, &neg_w, &mut rhs_z);
        let mut a = DMatrix::<f64>::zeros(self.me, self.me);
        let mut dense = DMatrix::<f64>::zeros(self.me, self.n);
        for (i, row) in pt.je.iter().enumerate() {
            for &(c, v) in row {
                dense[(i, c)] += v;
            }
        }
        a.gemm(1.0, &dense, &dense.transpose(), 0.0);
        for i in 0..self.me {
            a[(i, i)] += 1e-10;
        }
        let b = DVector::from_vec(j_v(&pt.je, &rhs_z));
        match Cholesky::new(a) {
            Some(ch) => {
                let l = ch.solve(&b);
                if l.amax() > 1e3 {
                    vec![0.0; self.me]
                } else {
                    l.iter().copied().collect()
                }
            }
            None => vec![0.0; self.me],
        }
    }

    fn initial_slacks(&self, ci: &[f64], mu: f64) -> (Vec<f64>, Vec<f64>) {
        let floor = (10.0 * mu).clamp(1e-6, 1e-2);
        let t: Vec<f64> = ci.iter().map(|&c| c.max(floor)).collect();
        let w = t.iter().map(|&t| mu / t).collect();
        (t, w)
    }

    /// Feasibility phase: Levenberg–Marquardt on the squared violation.
    fn restore(&self, z: &[f64]) -> (Vec<f64>, f64) {
        let mut z = z.to_vec();
        let residual = |pt_ce: &[f64], pt_ci: &[f64]| -> Vec<f64> {
            pt_ce.iter().copied().chain(pt_ci.iter().map(|&c| c.min(0.0))).collect()
        };
        let (_, mut ce, mut ci) = values(self.p, &z);
        let mut r = residual(&ce, &ci);
        let mut phi = 0.5 * r.iter().map(|x| x * x).sum::<f64>();
        let mut damping = 1e-4;
        for _ in 0..100 {
            if violation(&ce, &ci) <= 0.1 * self.opts.constr_tol {
                break;
            }
            let je = self.p.eq_jacobian(&z);
            let ji = self.p.ineq_jacobian(&z);
            let rows: Vec<&Vec<(usize, f64)>> = je.iter().chain(ji.iter()).collect();
            let mut jtj = DMatrix::<f64>::zeros(self.n, self.n);
            let mut g = vec![0.0; self.n];
            for (k, row) in rows.iter().enumerate() {
                if r[k] == 0.0 && k >= self.me {
                    continue;
                }
                add_outer(&mut jtj, row, 1.0);
                for &(c, a) in row.iter() {
                    g[c] += a * r[k];
                }
            }
            let mut improved = false;
            while damping < 1e12 {
                let mut m = jtj.clone();
                for i in 0..self.n {
                    m[(i, i)] += damping * (1.0 + jtj[(i, i)]);
                }
                let Some(ch) = Cholesky::new(m) else {
                    damping *= 10.0;
                    continue;
                };
                let d = ch.solve(&DVector::from_iterator(self.n, g.iter().map(|x| -x)));
                let trial: Vec<f64> = z.iter().zip(d.iter()).map(|(a, b)| a + b).collect();
                let (_, tce, tci) = values(self.p, &trial);
                let tr = residual(&tce, &tci);
                let tphi = 0.5 * tr.iter().map(|x| x * x).sum::<f64>();
                if tphi < phi {
                    z = trial;
                    ce = tce;
                    ci = tci;
                    r = tr;
                    let rel = (phi - tphi) / phi.max(1e-300);
                    phi = tphi;
                    damping = (damping / 3.0).max(1e-12);
                    improved = rel > 1e-12;
                    break;
                }
                damping *= 10.0;
            }
            if !improved {
                break;
            }
        }
        let v = violation(&ce, &ci);
        (z, v)
    }

    fn theta(&self, ce: &[f64], ci: &[f64], t: &[f64]) -> f64 {
        one_norm(ce) + ci.iter().zip(t).map(|(c, t)| (c - t).abs()).sum::<f64>()
    }

    fn barrier(&self, f: f64, t: &[f64], mu: f64) -> f64 {
        self.sigma * f - mu * t.iter().map(|t| t.ln()).sum::<f64>()
    }

    fn run(&mut self, z0: &[f64], mu0: f64) -> NlpSolution {
        let p = self.p;
        let mut pt = evaluate(p, z0);
        let gmax = inf_norm(&pt.grad);
        self.sigma = if gmax > S_MAX { S_MAX / gmax } else { 1.0 };
        let mut mu = mu0;
        let mut tau = (1.0 - mu).max(0.99);
        let (t, w) = self.initial_slacks(&pt.ci, mu);
        let mut st = State {
            z: z0.to_vec(),
            t,
            lambda: Vec::new(),
            w,
        };
        st.lambda = self.least_squares_multipliers(&pt, &st.w);
        let theta0 = self.theta(&pt.ce, &pt.ci, &st.t).max(1.0);
        let theta_max = 1e4 * theta0;
        let theta_min = 1e-4 * theta0;
        let mut filter: Vec<(f64, f64)> = Vec::new();
        let mut delta_w_last: f64 = 0.0;
        let mut restorations = 0;
        let mut iterations = 0;
        let tol = self.opts.tol;

        let status = loop {
            let e0 = self.errors(&pt, &st, 0.0);
            if e0.stationarity <= tol
                && e0.complementarity <= tol
                && e0.primal <= self.opts.constr_tol
                && violation(&pt.ce, &pt.ci) <= self.opts.constr_tol
            {
                break SolverStatus::Converged;
            }
            if iterations >= self.opts.max_iterations {
                break SolverStatus::MaxIterations;
            }
            loop {
                let e = self.errors(&pt, &st, mu);
                let e_mu = e.stationarity.max(e.primal).max(e.complementarity);
                let next = (tol / 10.0).max((0.2 * mu).min(mu.powf(1.5)));
                if e_mu > KAPPA_EPS * mu || next >= mu {
                    break;
                }
                mu = next;
                tau = (1.0 - mu).max(0.99);
                filter.clear();
            }

            // condensed Newton matrix
            let sig: Vec<f64> = st.w.iter().zip(&st.t).map(|(w, t)| w / t).collect();
            let mut hmat = DMatrix::<f64>::zeros(self.n, self.n);
            p.add_hessian(&st.z, self.sigma, &st.lambda, &st.w, &mut hmat);
            for (row, &s) in pt.ji.iter().zip(&sig) {
                add_outer(&mut hmat, row, s);
            }
            let mut base = hmat.clone();
            for row in &pt.je {
                add_outer(&mut base, row, 1.0 / DELTA_C);
            }
            let mut delta_w: f64 = 0.0;
            let chol = loop {
                let mut m = base.clone();
                if delta_w > 0.0 {
                    for i in 0..self.n {
                        m[(i, i)] += delta_w;
                    }
                }
                if let Some(ch) = Cholesky::new(m) {
                    break Some(ch);
                }
                delta_w = if delta_w == 0.0 {
                    if delta_w_last == 0.0 {
                        1e-4
                    } else {
                        (delta_w_last / 3.0).max(1e-20)
                    }
                } else if delta_w_last == 0.0 {
                    delta_w * 100.0
                } else {
                    delta_w * 8.0
                };
                if delta_w > 1e40 {
                    break None;
                }
            };
            let Some(chol) = chol else {
                break SolverStatus::MaxIterations;
            };
            if delta_w > 0.0 {
                delta_w_last = delta_w;
            }

            let r_i: Vec<f64> = pt.ci.iter().zip(&st.t).map(|(c, t)| c - t).collect();
            let direction = |r_i: &[f64], r2: &[f64]| -> (Vec<f64>, Vec<f64>) {
                let mut r1: Vec<f64> = pt.grad.iter().map(|g| -self.sigma * g).collect();
                add_jt_v(&pt.je, &st.lambda, &mut r1);
                let inner: Vec<f64> = (0..self.mi).map(|j| mu / st.t[j] - sig[j] * r_i[j]).collect();
                add_jt_v(&pt.ji, &inner, &mut r1);
                self.solve_kkt(&chol, &hmat, delta_w, &pt.je, &r1, r2)
            };
            let slack_dir = |dz: &[f64], r_i: &[f64]| -> (Vec<f64>, Vec<f64>) {
                let jdz = j_v(&pt.ji, dz);
                let dt: Vec<f64> = (0..self.mi).map(|j| jdz[j] + r_i[j]).collect();
                let dw: Vec<f64> = (0..self.mi).map(|j| mu / st.t[j] - st.w[j] - sig[j] * dt[j]).collect();
                (dt, dw)
            };
            let max_step = |x: &[f64], dx: &[f64]| -> f64 {
                x.iter().zip(dx).fold(1.0f64, |a, (&v, &d)| if d < 0.0 { a.min(-tau * v / d) } else { a })
            };
            let r2: Vec<f64> = pt.ce.iter().map(|c| -c).collect();
            let (dz, dl) = direction(&r_i, &r2);
            let (dt, dw) = slack_dir(&dz, &r_i);
            let alpha_max = max_step(&st.t, &dt);
            let alpha_w = max_step(&st.w, &dw);

            // filter line search on (constraint violation, barrier objective)
            let theta = self.theta(&pt.ce, &pt.ci, &st.t);
            let phi = self.barrier(pt.f, &st.t, mu);
            let gphi: f64 = self.sigma * pt.grad.iter().zip(&dz).map(|(g, d)| g * d).sum::<f64>()
                - mu * dt.iter().zip(&st.t).map(|(d, t)| d / t).sum::<f64>();
            let switching = |alpha: f64| gphi < 0.0 && alpha * (-gphi).powf(S_PHI) > DELTA * theta.powf(S_THETA);
            let armijo_mode = |alpha: f64| switching(alpha) && theta <= theta_min;
            let acceptable = |alpha: f64, th: f64, ph: f64| -> bool {
                if !(th.is_finite() && ph.is_finite()) || th > theta_max {
                    return false;
                }
                let in_filter = filter.iter().any(|&(tf, pf)| th >= tf && ph >= pf);
                if in_filter {
                    return false;
                }
                if armijo_mode(alpha) {
                    ph <= phi + ETA * alpha * gphi
                } else {
                    th <= (1.0 - GAMMA_THETA) * theta || ph <= phi - GAMMA_PHI * theta
                }
            };
            let alpha_min = {
                let base = if gphi < 0.0 {
                    let mut m = GAMMA_THETA.min(GAMMA_PHI * theta / -gphi);
                    if theta <= theta_min {
                        m = m.min(DELTA * theta.powf(S_THETA) / (-gphi).powf(S_PHI));
                    }
                    m
                } else {
                    GAMMA_THETA
                };
                (GAMMA_ALPHA * base).max(1e-14)
            };
            let tiny = dz.iter().zip(&st.z).all(|(d, z)| d.abs() <= 10.0 * f64::EPSILON * (1.0 + z.abs()));

            let mut accepted: Option<(Vec<f64>, Vec<f64>, f64, Vec<f64>, Vec<f64>, f64)> = None;
            let mut accepted_alpha = 0.0;
            if tiny {
                accepted = Some((dz.clone(), dt.clone(), alpha_max, dl.clone(), dw.clone(), alpha_w));
                accepted_alpha = alpha_max;
            } else {
                let mut alpha = alpha_max;
                let mut first = true;
                while alpha >= alpha_min {
                    let zt: Vec<f64> = st.z.iter().zip(&dz).map(|(z, d)| z + alpha * d).collect();
                    let tt: Vec<f64> = st.t.iter().zip(&dt).map(|(t, d)| t + alpha * d).collect();
                    let (f, ce, ci) = values(p, &zt);
                    let th = self.theta(&ce, &ci, &tt);
                    let ph = self.barrier(f, &tt, mu);
                    if acceptable(alpha, th, ph) {
                        accepted = Some((dz.clone(), dt.clone(), alpha, dl.clone(), dw.clone(), alpha_w));
                        accepted_alpha = alpha;
                        break;
                    }
                    if first && th >= theta {
                        // second-order correction
                        let c_soc_e: Vec<f64> = (0..self.me).map(|i| alpha * pt.ce[i] + ce[i]).collect();
                        let c_soc_i: Vec<f64> = (0..self.mi).map(|j| alpha * r_i[j] + (ci[j] - tt[j])).collect();
                        let r2s: Vec<f64> = c_soc_e.iter().map(|c| -c).collect();
                        let (dzs, dls) = direction(&c_soc_i, &r2s);
                        let (dts, dws) = slack_dir(&dzs, &c_soc_i);
                        let a_s = max_step(&st.t, &dts);
                        let zs: Vec<f64> = st.z.iter().zip(&dzs).map(|(z, d)| z + a_s * d).collect();
                        let ts: Vec<f64> = st.t.iter().zip(&dts).map(|(t, d)| t + a_s * d).collect();
                        let (fs, ces, cis) = values(p, &zs);
                        if acceptable(alpha, self.theta(&ces, &cis, &ts), self.barrier(fs, &ts, mu)) {
                            let a_ws = max_step(&st.w, &dws);
                            accepted = Some((dzs, dts, a_s, dls, dws, a_ws));
                            accepted_alpha = alpha;
                            break;
                        }
                    }
                    first = false;
                    alpha *= 0.5;
                }
            }

            iterations += 1;
            match accepted {
                Some((dz, dt, alpha, dl, dw, alpha_w)) => {
                    if !tiny && !(armijo_mode(accepted_alpha)) {
                        filter.push(((1.0 - GAMMA_THETA) * theta, phi - GAMMA_PHI * theta));
                    }
                    for (z, d) in st.z.iter_mut().zip(&dz) {
                        *z += alpha * d;
                    }
                    for (t, d) in st.t.iter_mut().zip(&dt) {
                        *t += alpha * d;
                    }
                    for (l, d) in st.lambda.iter_mut().zip(&dl) {
                        *l += alpha * d;
                    }
                    for j in 0..self.mi {
                        let w = st.w[j] + alpha_w * dw[j];
                        let lo = mu / (1e10 * st.t[j]);
                        let hi = 1e10 * mu / st.t[j];
                        st.w[j] = w.clamp(lo, hi);
                    }
                    pt = evaluate(p, &st.z);
                }
                None => {
                    restorations += 1;
                    let (z, v) = self.restore(&st.z);
                    if v > self.opts.infeasibility_threshold {
                        st.z = z;
                        pt = evaluate(p, &st.z);
                        break SolverStatus::Infeasible;
                    }
                    if restorations > MAX_RESTORATIONS {
                        break SolverStatus::MaxIterations;
                    }
                    st.z = z;
                    pt = evaluate(p, &st.z);
                    let (t, w) = self.initial_slacks(&pt.ci, mu);
                    st.t = t;
                    st.w = w;
                    st.lambda = self.least_squares_multipliers(&pt, &st.w);
                    filter.clear();
                }
            }
        };

        let mut status = status;
        if status == SolverStatus::Converged {
            if let Some((polished, ppt)) = self.polish(&st, &pt) {
                st = polished;
                pt = ppt;
            }
        }
        if status == SolverStatus::MaxIterations
            && violation(&pt.ce, &pt.ci) > self.opts.infeasibility_threshold
        {
            let (z, v) = self.restore(&st.z);
            if v > self.opts.infeasibility_threshold {
                status = SolverStatus::Infeasible;
                st.z = z;
                pt = evaluate(p, &st.z);
            }
        }
        let e = self.errors(&pt, &st, 0.0);
        let viol = violation(&pt.ce, &pt.ci);
        NlpSolution {
            objective: pt.f,
            kkt_residual: e.stationarity.max(e.complementarity).max(e.primal).max(viol),
            stationarity: e.stationarity,
            violation: viol,
            z: st.z,
            lambda: st.lambda,
            w: st.w,
            status,
            iterations,
        }
    }

    /// Active-set refinement of a converged point: inequalities whose slack
    /// is below their multiplier are held as equalities and the reduced KKT
    /// conditions are solved by Newton's method with `μ = 0`. This removes
    /// the `O(μ)` offset the barrier leaves on active bounds. The result is
    /// kept only if it stays feasible, has non-negative multipliers, and
    /// does not worsen the KKT residual.
    fn polish(&self, st: &State, pt: &Point) -> Option<(State, Point)> {
        let score = |pt: &Point, st: &State| {
            let e = self.errors(pt, st, 0.0);
            e.stationarity.max(e.complementarity).max(violation(&pt.ce, &pt.ci))
        };
        let before = score(pt, st);
        let mut active: Vec<usize> = (0..self.mi).filter(|&i| st.t[i] < st.w[i]).collect();
        let mut z = st.z.clone();
        let mut lambda = st.lambda.clone();
        let mut w = st.w.clone();
        let mut cur = evaluate(self.p, &z);
        for _round in 0..3 {
            if self.me + active.len() > self.n {
                return None;
            }
            for i in 0..self.mi {
                if !active.contains(&i) {
                    w[i] = 0.0;
                }
            }
            cur = self.newton_on_active(&active, &mut z, &mut lambda, &mut w)?;
            let dropped: Vec<usize> = active.iter().copied().filter(|&i| w[i] < 0.0).collect();
            if dropped.is_empty() {
                break;
            }
            active.retain(|i| !dropped.contains(i));
        }
        if w.iter().any(|&w| w < 0.0) || cur.ci.iter().any(|&c| c < -0.1 * self.opts.constr_tol) {
            return None;
        }
        let out = State {
            z,
            t: cur.ci.iter().map(|&c| c.max(0.0)).collect(),
            lambda,
            w,
        };
        (score(&cur, &out) <= before).then_some((out, cur))
    }

    /// Newton's method on stationarity, the equalities, and the listed
    /// inequalities held at zero. Multipliers of the other inequalities
    /// must already be zero in `w`.
    fn newton_on_active(&self, active: &[usize], z: &mut [f64], lambda: &mut [f64], w: &mut [f64]) -> Option<Point> {
        let ma = active.len();
        let dim = self.n + self.me + ma;
        let mut cur = evaluate(self.p, z);
        for _ in 0..5 {
            let mut r1: Vec<f64> = cur.grad.iter().map(|g| self.sigma * g).collect();
            add_jt_v(&cur.je, &lambda.iter().map(|l| -l).collect::<Vec<_>>(), &mut r1);
            add_jt_v(&cur.ji, &w.iter().map(|w| -w).collect::<Vec<_>>(), &mut r1);
            let mut rhs = DVector::<f64>::zeros(dim);
            for i in 0..self.n {
                rhs[i] = -r1[i];
            }
            for i in 0..self.me {
                rhs[self.n + i] = -cur.ce[i];
            }
            for (k, &i) in active.iter().enumerate() {
                rhs[self.n + self.me + k] = -cur.ci[i];
            }
            if rhs.amax() <= 1e-13 {
                break;
            }
            let mut kkt = DMatrix::<f64>::zeros(dim, dim);
            let mut hess = DMatrix::<f64>::zeros(self.n, self.n);
            self.p.add_hessian(z, self.sigma, lambda, w, &mut hess);
            kkt.view_mut((0, 0), (self.n, self.n)).copy_from(&hess);
            let rows = cur.je.iter().chain(active.iter().map(|&i| &cur.ji[i]));
            for (r, row) in rows.enumerate() {
                for &(c, a) in row {
                    kkt[(self.n + r, c)] += a;
                    kkt[(c, self.n + r)] -= a;
                }
            }
            for i in self.n..dim {
                kkt[(i, i)] -= 1e-12;
            }
            let d = kkt.lu().solve(&rhs)?;
            if d.iter().any(|v| !v.is_finite()) {
                return None;
            }
            for i in 0..self.n {
                z[i] += d[i];
            }
            for i in 0..self.me {
                lambda[i] += d[self.n + i];
            }
            for (k, &i) in active.iter().enumerate() {
                w[i] += d[self.n + self.me + k];
            }
            cur = evaluate(self.p, z);
        }
        Some(cur)
    }

    /// Solves the primal-dual system
    /// `[H + δ_w I, −J_Eᵀ; J_E, 0] [dz; dλ] = [r1; r2]` using the
    /// factorization of the δ_c-regularized condensed matrix plus
    /// iterative refinement.
    fn solve_kkt(
        &self,
        chol: &Cholesky<f64, Dyn>,
        hmat: &DMatrix<f64>,
        delta_w: f64,
        je: &SparseRows,
        r1: &[f64],
        r2: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let solve_reg = |a: &[f64], b: &[f64]| -> (Vec<f64>, Vec<f64>) {
            let mut rhs = a.to_vec();
            let scaled: Vec<f64> = b.iter().map(|x| x / DELTA_C).collect();
            add_jt_v(je, &scaled, &mut rhs);
            let dz = chol.solve(&DVector::from_vec(rhs));
            let dz: Vec<f64> = dz.iter().copied().collect();
            let jdz = j_v(je, &dz);
            let dl = b.iter().zip(&jdz).map(|(b, j)| (b - j) / DELTA_C).collect();
            (dz, dl)
        };
        let (mut dz, mut dl) = solve_reg(r1, r2);
        if self.me == 0 {
            return (dz, dl);
        }
        let scale = inf_norm(r1).max(inf_norm(r2)).max(1e-300);
        for _ in 0..6 {
            let hdz = hmat * DVector::from_column_slice(&dz);
            let mut e1: Vec<f64> = (0..self.n).map(|i| r1[i] - hdz[i] - delta_w * dz[i]).collect();
            add_jt_v(je, &dl, &mut e1);
            let jdz = j_v(je, &dz);
            let e2: Vec<f64> = (0..self.me).map(|i| r2[i] - jdz[i]).collect();
            if inf_norm(&e1).max(inf_norm(&e2)) <= 1e-14 * scale {
                break;
            }
            let (cz, cl) = solve_reg(&e1, &e2);
            for (a, b) in dz.iter_mut().zip(&cz) {
                *a += b;
            }
            for (a, b) in dl.iter_mut().zip(&cl) {
                *a += b;
            }
        }
        (dz, dl)
    }
}

/// Solves `p` from `z0`. `mu0` overrides the initial barrier parameter,
/// which lets warm starts begin closer to the central path's end.
pub fn solve_nlp<P: NlpProblem + ?Sized>(p: &P, z0: &[f64], mu0: Option<f64>, opts: &SolverOptions) -> NlpSolution {
    let mut s = Solver {
        p,
        opts: *opts,
        sigma: 1.0,
        n: p.n_vars(),
        me: p.n_eq(),
        mi: p.n_ineq(),
    };
    s.run(z0, mu0.unwrap_or(opts.mu_init))
}
