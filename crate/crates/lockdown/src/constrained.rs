//! Constrained fallback: the lockdown problem with `z <= 1` as a covering SDP.
//!
//! With `u_i = q / (D1_ii z_i)` the stability constraint becomes
//! `diag(u) ⪰ Q` for the symmetric `Q = tauᵀ D2 diag(a) tau`, and `z <= 1`
//! becomes `u >= lb`. `Q - diag(u)` is Metzler and irreducible, so it is
//! negative semidefinite exactly when some positive `x` has
//! `(Q - diag(u)) x <= 0`. The solver therefore searches over `x = e^g` with
//! `u_i = max(lb_i, (Q x)_i / x_i)`, a point that is feasible by
//! construction, and minimizes the cost by Newton's method on a smoothed
//! max with a decreasing smoothing width. A final bisection on a uniform
//! scaling of `u` makes the eigenvalue constraint bind.

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::balancing::{decay_threshold, family_weights, DispatchCase, SolveMethod, SolveReport};
use crate::error::{Error, Result};
use crate::model::{lockdown_cost, CostKind, DiseaseParams, FlowFactors, Mat, Vector};
use crate::spectral::{lambda_max_blocks, pattern_of, strongly_connected};

/// `min sum_i c_i phi(lb_i / u_i)` subject to `diag(u) ⪰ Q`, `u >= lb`.
#[derive(Debug, Clone)]
pub struct CoveringInstance {
    /// Symmetric PSD matrix `tauᵀ D2 diag(a) tau`.
    pub q_mat: Mat,
    /// `q / D1_ii`; `u_i = lb_i` corresponds to `z_i = 1`.
    pub lb: Vector,
    /// Location costs `c_i` in the original variables.
    pub costs: Vector,
    /// Linear cost on `u`: `c'_i = c_i D1_ii`.
    pub c_prime: Vector,
    pub q: f64,
}

impl CoveringInstance {
    pub fn n(&self) -> usize {
        self.q_mat.nrows()
    }

    /// `z_i = lb_i / u_i`.
    pub fn z_from_u(&self, u: &Vector) -> Vector {
        self.lb.component_div(u)
    }

    /// `u_i = lb_i / z_i`.
    pub fn u_from_z(&self, z: &Vector) -> Vector {
        self.lb.component_div(z)
    }

    /// Largest eigenvalue of `Q - diag(u)`.
    pub fn constraint_value(&self, u: &Vector) -> Result<f64> {
        let mut m = self.q_mat.clone();
        for i in 0..self.n() {
            m[(i, i)] -= u[i];
        }
        abscissa(&m)
    }
}

/// Builds the covering form for the model at rate `params.alpha`.
pub fn to_covering(
    factors: &FlowFactors,
    params: &DiseaseParams,
    s0: &Vector,
    costs: &Vector,
) -> Result<CoveringInstance> {
    let n = factors.n();
    let weights = family_weights(params, s0, n)?;
    covering_weighted(factors, params, &weights, costs)
}

/// As [`to_covering`] with explicit susceptible weights.
pub fn covering_weighted(
    factors: &FlowFactors,
    params: &DiseaseParams,
    weights: &Vector,
    costs: &Vector,
) -> Result<CoveringInstance> {
    let n = factors.n();
    if costs.len() != n {
        return Err(Error::Dimension {
            what: "costs",
            expected: n,
            found: costs.len(),
        });
    }
    let q = decay_threshold(params, params.alpha)?;
    let tau = &factors.c;
    let mut wt = tau.clone();
    for k in 0..n {
        wt.row_mut(k).scale_mut(factors.d2[k] * weights[k]);
    }
    let mut q_mat = tau.transpose() * wt;
    // exact symmetry
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (q_mat[(i, j)] + q_mat[(j, i)]);
            q_mat[(i, j)] = v;
            q_mat[(j, i)] = v;
        }
    }
    // A positive diagonal of tau makes Q inherit tau's connectivity; with
    // zero entries the solver still only needs Q irreducible.
    if let Some(i) = (0..n).find(|&i| !(factors.c[(i, i)] > 0.0)) {
        if !strongly_connected(&pattern_of(&q_mat)) {
            return Err(Error::TauDiagonalZero(i));
        }
    }
    let lb = factors.d1.map(|d| q / d);
    let c_prime = costs.component_mul(&factors.d1);
    Ok(CoveringInstance {
        q_mat,
        lb,
        costs: costs.clone(),
        c_prime,
        q,
    })
}

/// Tuning for [`solve_constrained_with`].
#[derive(Debug, Clone)]
pub struct ConstrainedOptions {
    /// Starting log-scaling; zero when absent.
    pub start: Option<Vector>,
    /// Extra random restarts (used for nonconvex costs).
    pub restarts: usize,
    pub seed: u64,
    pub max_newton: usize,
}

impl Default for ConstrainedOptions {
    fn default() -> Self {
        Self {
            start: None,
            restarts: 0,
            seed: 0,
            max_newton: 200,
        }
    }
}

/// Solves the covering problem for the given cost form.
pub fn solve_constrained(inst: &CoveringInstance, kind: CostKind) -> Result<SolveReport> {
    let opts = ConstrainedOptions {
        restarts: if kind.is_convex() { 0 } else { 4 },
        ..Default::default()
    };
    solve_constrained_with(inst, kind, &opts)
}

pub fn solve_constrained_with(
    inst: &CoveringInstance,
    kind: CostKind,
    opts: &ConstrainedOptions,
) -> Result<SolveReport> {
    kind.validate()?;
    let n = inst.n();
    if inst.lb.iter().any(|v| !(*v > 0.0)) || inst.costs.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("covering instance", "bounds and costs must be positive"));
    }
    // work on a normalized copy so tolerances are scale free
    let scale = inst.q_mat.amax().max(inst.lb.amax());
    let q_mat = &inst.q_mat / scale;
    let lb = &inst.lb / scale;
    let problem = Problem {
        q: &q_mat,
        lb: &lb,
        c: &inst.costs,
        kind,
    };

    let mut starts = vec![opts.start.clone().unwrap_or_else(|| Vector::zeros(n))];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)));
    }
    let mut best: Option<(f64, Vector, usize, bool)> = None;
    for g0 in starts {
        let (g, iters, converged) = problem.minimize(g0, opts.max_newton);
        let u = problem.u_exact(&g);
        let cost = problem.cost_of_u(&u);
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, u, iters, converged));
        }
    }
    let (_, u, iterations, converged) = best.expect("at least one start");
    let (u, lam) = tighten(&q_mat, &lb, u)?;
    let mut z = lb.component_div(&u);
    let clamped = z.iter().any(|&v| v > 1.0);
    z.iter_mut().for_each(|v| *v = v.min(1.0));
    let cost = lockdown_cost(&z, &inst.costs, kind)?;
    Ok(SolveReport {
        z_star: z,
        cost,
        cost_kind: kind,
        lambda_achieved: lam,
        reduced_lambda: lam,
        method: SolveMethod::ConstrainedSdp,
        case: None::<DispatchCase>,
        high_spread_holds: false,
        unconstrained_exceeded_one: false,
        imbalance: f64::NAN,
        gradient_norm: f64::NAN,
        iterations,
        d_ratio: f64::NAN,
        clamped,
        nonconvex_objective: !kind.is_convex(),
        converged,
    })
}

fn lam_of(q: &Mat, u: &Vector) -> Result<f64> {
    let mut m = q.clone();
    for i in 0..q.nrows() {
        m[(i, i)] -= u[i];
    }
    abscissa(&m)
}

/// Spectral abscissa of a Metzler matrix; diagonal matrices short-circuit.
fn abscissa(m: &Mat) -> Result<f64> {
    let n = m.nrows();
    if (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == 0.0)) {
        return Ok(m.diagonal().max());
    }
    lambda_max_blocks(m)
}

/// Finds the smallest `t` with `max(lb, t u)` feasible and returns that point.
fn tighten(q: &Mat, lb: &Vector, u: Vector) -> Result<(Vector, f64)> {
    let at = |t: f64| u.zip_map(lb, |ui, li| (t * ui).max(li));
    let lam = |t: f64| lam_of(q, &at(t));
    let mut hi = 1.0;
    let mut l_hi = lam(hi)?;
    let mut k = 0;
    while l_hi > 0.0 {
        hi *= 1.0 + 1e-12 * 4f64.powi(k);
        l_hi = lam(hi)?;
        k += 1;
        if k > 40 {
            return Err(Error::NonConvergence {
                what: "covering feasibility restoration",
                iterations: k as usize,
                residual: l_hi,
            });
        }
    }
    // everything at its bound: z = 1 is already feasible
    let t_floor = lb.component_div(&u).max();
    let mut lo = hi;
    loop {
        let next = lo * 0.5;
        if next <= t_floor {
            lo = t_floor;
            break;
        }
        lo = next;
        if lam(lo)? > 0.0 {
            break;
        }
    }
    if lam(lo)? <= 0.0 {
        return Ok((at(lo), lam(lo)?));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let l = lam(mid)?;
        if l > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            l_hi = l;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok((at(hi), l_hi))
}

struct Problem<'a> {
    q: &'a Mat,
    lb: &'a Vector,
    c: &'a Vector,
    kind: CostKind,
}

fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Problem<'_> {
    fn n(&self) -> usize {
        self.q.nrows()
    }

    /// `w_i(g) = (Q e^g)_i / e^(g_i)` and the off-diagonal terms `E_ij`.
    fn rows(&self, g: &Vector) -> (Vector, Mat) {
        let n = self.n();
        let mut e = Mat::zeros(n, n);
        let mut w = Vector::zeros(n);
        for i in 0..n {
            let mut s = self.q[(i, i)];
            for j in 0..n {
                if j != i {
                    let v = self.q[(i, j)] * (g[j] - g[i]).exp();
                    e[(i, j)] = v;
                    s += v;
                }
            }
            w[i] = s;
        }
        (w, e)
    }

    fn u_exact(&self, g: &Vector) -> Vector {
        let (w, _) = self.rows(g);
        w.zip_map(self.lb, |wi, li| wi.max(li))
    }

    fn cost_of_u(&self, u: &Vector) -> f64 {
        (0..self.n())
            .map(|i| self.c[i] * self.kind.phi(self.lb[i] / u[i]))
            .sum()
    }

    /// Cost term as a function of `y = 1/z`, with first and second derivatives.
    fn psi(&self, y: f64, mu: f64) -> (f64, f64, f64) {
        match self.kind {
            CostKind::Inverse => (y - 1.0, 1.0, 0.0),
            CostKind::Power(k) => (y.powf(k) - 1.0, k * y.powf(k - 1.0), k * (k - 1.0) * y.powf(k - 2.0)),
            CostKind::Capped(cap) => {
                // smooth min(y, cap)
                let t = (cap - y) / (mu * cap);
                let s = sigmoid(t);
                (cap - mu * cap * softplus(t) - 1.0, s, -s * (1.0 - s) / (mu * cap))
            }
        }
    }

    /// Smoothed objective, gradient and Hessian in `g`.
    fn eval(&self, g: &Vector, mu: f64, want_hess: bool) -> (f64, Vector, Mat) {
        let n = self.n();
        let (w, e) = self.rows(g);
        let mut f = 0.0;
        let mut grad = Vector::zeros(n);
        let mut hess = Mat::zeros(if want_hess { n } else { 0 }, if want_hess { n } else { 0 });
        for i in 0..n {
            let lb = self.lb[i];
            let t = (w[i] - lb) / (mu * lb);
            let sg = sigmoid(t);
            let m = lb + mu * lb * softplus(t);
            let y = m / lb;
            let y_w = sg / lb;
            let y_ww = sg * (1.0 - sg) / (mu * lb * lb);
            let (psi, psi_y, psi_yy) = self.psi(y, mu);
            f += self.c[i] * psi;
            let phi_w = self.c[i] * psi_y * y_w;
            let phi_ww = self.c[i] * (psi_yy * y_w * y_w + psi_y * y_ww);
            let off: f64 = w[i] - self.q[(i, i)];
            // gradient of w_i: E_ik at k != i, -off at i
            for k in 0..n {
                let dk = if k == i { -off } else { e[(i, k)] };
                grad[k] += phi_w * dk;
            }
            if want_hess {
                if phi_ww != 0.0 {
                    for k in 0..n {
                        let dk = if k == i { -off } else { e[(i, k)] };
                        if dk == 0.0 {
                            continue;
                        }
                        for l in 0..n {
                            let dl = if l == i { -off } else { e[(i, l)] };
                            hess[(k, l)] += phi_ww * dk * dl;
                        }
                    }
                }
                for k in 0..n {
                    if k == i {
                        hess[(i, i)] += phi_w * off;
                    } else {
                        let v = e[(i, k)];
                        hess[(k, k)] += phi_w * v;
                        hess[(i, k)] -= phi_w * v;
                        hess[(k, i)] -= phi_w * v;
                    }
                }
            }
        }
        (f, grad, hess)
    }

    /// Newton with continuation in the smoothing width; `g[0]` stays fixed.
    fn minimize(&self, mut g: Vector, max_newton: usize) -> (Vector, usize, bool) {
        let n = self.n();
        if n == 1 {
            return (g, 0, true);
        }
        let shift = g[0];
        g.iter_mut().for_each(|v| *v -= shift);
        let mut total = 0;
        let mut converged = true;
        let mut mu = 1e-1;
        while mu >= 1e-11 {
            let mut level_ok = false;
            for _ in 0..max_newton {
                total += 1;
                let (f, grad, hess) = self.eval(&g, mu, true);
                let gr = grad.rows(1, n - 1).into_owned();
                let gnorm = gr.amax();
                if gnorm <= 1e-14 * f.abs().max(1.0) {
                    level_ok = true;
                    break;
                }
                let h = hess.view((1, 1), (n - 1, n - 1)).into_owned();
                let step = newton_direction(&h, &gr);
                let slope = gr.dot(&step);
                let mut t = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let mut cand = g.clone();
                    for k in 1..n {
                        cand[k] += t * step[k - 1];
                    }
                    let (fc, _, _) = self.eval(&cand, mu, false);
                    if fc <= f + 1e-4 * t * slope {
                        g = cand;
                        accepted = true;
                        break;
                    }
                    t *= 0.5;
                }
                if !accepted || (-slope) <= 1e-24 * f.abs().max(1.0) {
                    level_ok = true;
                    break;
                }
            }
            converged &= level_ok;
            mu *= 0.1;
        }
        (g, total, converged)
    }
}

/// Solves `H p = -grad`, regularizing `H` until it is positive definite.
fn newton_direction(h: &Mat, grad: &Vector) -> Vector {
    let m = h.nrows();
    let base = h.diagonal().amax().max(1e-300);
    let mut reg = 0.0;
    for _ in 0..40 {
        let hh = h + Mat::identity(m, m) * reg;
        if let Some(ch) = hh.cholesky() {
            let p = ch.solve(&(-grad));
            if p.iter().all(|v| v.is_finite()) {
                return p;
            }
        }
        reg = if reg == 0.0 { 1e-12 * base } else { reg * 10.0 };
    }
    -grad / base
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balancing::{solve_unconstrained, to_stability_scaling};
    use crate::model::{build_flow_matrix, NetworkData, TravelMatrix};
    use crate::spectral::calibrate_beta;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn diag_instance(qd: &[f64], lb: &[f64]) -> CoveringInstance {
        let n = qd.len();
        CoveringInstance {
            q_mat: Mat::from_diagonal(&Vector::from_row_slice(qd)),
            lb: Vector::from_row_slice(lb),
            costs: Vector::from_element(n, 1.0),
            c_prime: Vector::from_element(n, 1.0),
            q: 1.0,
        }
    }

    fn u_of(inst: &CoveringInstance, r: &SolveReport) -> Vector {
        inst.u_from_z(&r.z_star)
    }

    #[test]
    fn diagonal_q_binds_componentwise() {
        let inst = diag_instance(&[2.0, 3.0, 5.0], &[1.0, 1.0, 1.0]);
        let r = solve_constrained(&inst, CostKind::Inverse).unwrap();
        let u = u_of(&inst, &r);
        for (a, b) in u.iter().zip([2.0, 3.0, 5.0]) {
            assert_relative_eq!(*a, b, max_relative = 1e-9);
        }
    }

    #[test]
    fn diagonal_q_bounds_bind() {
        let inst = diag_instance(&[2.0, 3.0], &[4.0, 4.0]);
        let r = solve_constrained(&inst, CostKind::Inverse).unwrap();
        assert_eq!(r.z_star, Vector::from_element(2, 1.0));
        assert_eq!(r.cost, 0.0);
    }

    fn random_network(n: usize, seed: u64) -> (FlowFactors, Vector, Vector) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = Mat::from_fn(n, n, |i, j| {
            if i == j {
                rng.random_range(50.0..100.0)
            } else if rng.random::<f64>() < 0.7 {
                rng.random_range(0.0..30.0)
            } else {
                0.0
            }
        });
        let h: Vec<f64> = (0..n).map(|_| rng.random_range(700.0..900.0)).collect();
        let pops = Vector::from_fn(n, |_, _| rng.random_range(1e3..1e5));
        let emp = Vector::from_fn(n, |_, _| rng.random_range(1e2..1e4));
        let s0 = Vector::from_fn(n, |_, _| rng.random_range(0.8..0.99));
        let net = NetworkData::new(pops, emp, TravelMatrix::from_trips(&k, &h).unwrap(), Vector::from_vec(h)).unwrap();
        (build_flow_matrix(&net).unwrap(), net.cost_coeffs().clone(), s0)
    }

    fn net_from_tau(tau: Mat) -> NetworkData {
        let n = tau.nrows();
        let travel = TravelMatrix::new(tau).unwrap();
        let h = travel.implied_home_dwell();
        let pops = Vector::from_fn(n, |i, _| 1000.0 * (i + 1) as f64);
        NetworkData::new(pops.clone(), pops, travel, h).unwrap()
    }

    #[test]
    fn zero_diagonal_with_irreducible_q_solves() {
        let tau = Mat::from_row_slice(3, 3, &[0.0, 0.2, 0.1, 0.1, 0.2, 0.0, 0.05, 0.1, 0.15]);
        let net = net_from_tau(tau);
        let f = build_flow_matrix(&net).unwrap();
        let s0 = Vector::from_element(3, 0.9);
        let p = calibrate_beta(&f, &DiseaseParams::covid(0.0, 0.6754, 0.32, 0.2, 0.2, 0.04), &s0, 0.3).unwrap();
        let cov = to_covering(&f, &p, &s0, net.cost_coeffs()).unwrap();
        let r = solve_constrained(&cov, CostKind::Inverse).unwrap();
        let lam = cov.constraint_value(&u_of(&cov, &r)).unwrap();
        assert!((-1e-6..=1e-9).contains(&lam), "{lam}");
        let m = crate::model::assemble_linearization(&f, &r.z_star, &p, &s0).unwrap();
        assert!(lambda_max_blocks(&m).unwrap() <= -p.alpha + 1e-6);
    }

    #[test]
    fn zero_diagonal_splitting_q_is_rejected() {
        // each location only visits the other: Q is diagonal
        let net = net_from_tau(Mat::from_row_slice(2, 2, &[0.0, 0.3, 0.4, 0.0]));
        let f = build_flow_matrix(&net).unwrap();
        let s0 = Vector::from_element(2, 0.9);
        let p = DiseaseParams::sis(1.0, 0.2, 0.05);
        assert!(matches!(to_covering(&f, &p, &s0, net.cost_coeffs()), Err(Error::TauDiagonalZero(0))));
    }

    #[test]
    fn covering_matches_scalar_closed_form() {
        let tau = TravelMatrix::new(Mat::from_element(1, 1, 0.4)).unwrap();
        let net = NetworkData::new(
            Vector::from_element(1, 500.0),
            Vector::from_element(1, 1.0),
            tau,
            Vector::from_element(1, 864.0),
        )
        .unwrap();
        let f = build_flow_matrix(&net).unwrap();
        let p = DiseaseParams::sis(0.9, 0.2, 0.05);
        let cov = to_covering(&f, &p, &Vector::from_element(1, 1.0), net.cost_coeffs()).unwrap();
        assert_relative_eq!(cov.q_mat[(0, 0)], 0.16 * 500.0, max_relative = 1e-14);
        assert_relative_eq!(cov.lb[0], (0.15 / 0.9) * 0.4 * 500.0, max_relative = 1e-14);
        let r = solve_constrained(&cov, CostKind::Inverse).unwrap();
        // scalar: z p = q with p = tau
        assert_relative_eq!(r.z_star[0], ((0.15 / 0.9) / 0.4f64).min(1.0), max_relative = 1e-9);
    }

    #[test]
    fn covering_feasibility_matches_linearization_stability() {
        for seed in 0..10 {
            let (f, c, s0) = random_network(4, seed);
            let t = DiseaseParams::covid(0.0, 0.6754, 0.32, 0.2, 0.2, 0.03);
            let p = calibrate_beta(&f, &t, &s0, 0.2).unwrap();
            let cov = to_covering(&f, &p, &s0, &c).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let z = Vector::from_fn(4, |_, _| rng.random_range(0.05..1.0));
                let feasible = cov.constraint_value(&cov.u_from_z(&z)).unwrap() <= 0.0;
                let m = crate::model::assemble_linearization(&f, &z, &p, &s0).unwrap();
                let stable = crate::spectral::lambda_max(&m).unwrap() <= -p.alpha;
                assert_eq!(feasible, stable);
            }
        }
    }

    #[test]
    fn symmetric_two_node_q_matches_oracle() {
        let k = Mat::from_row_slice(2, 2, &[100.0, 20.0, 20.0, 100.0]);
        let tau = TravelMatrix::from_trips(&k, &[800.0, 800.0]).unwrap();
        let pops = Vector::from_element(2, 1000.0);
        let net = NetworkData::new(pops.clone(), pops, tau, Vector::from_element(2, 800.0)).unwrap();
        let f = build_flow_matrix(&net).unwrap();
        let cov = to_covering(&f, &DiseaseParams::sis(1.0, 0.3, 0.0), &Vector::from_element(2, 1.0), net.cost_coeffs())
            .unwrap();
        let eig = cov.q_mat.clone().symmetric_eigenvalues();
        let (a, b) = (cov.q_mat[(0, 0)], cov.q_mat[(0, 1)]);
        let mut got: Vec<f64> = eig.iter().cloned().collect();
        got.sort_by(f64::total_cmp);
        assert_relative_eq!(got[0], a - b, max_relative = 1e-12);
        assert_relative_eq!(got[1], a + b, max_relative = 1e-12);
    }

    #[test]
    fn agrees_with_balancing_under_high_spread() {
        for seed in 0..8 {
            let (f, c, s0) = random_network(5, 100 + seed);
            let p = DiseaseParams::sis(1.0, 0.2, 0.04);
            let p = calibrate_beta(&f, &p, &s0, 0.4).unwrap();
            let hs = crate::balancing::check_high_spread(&f, &p, &s0).unwrap();
            if !hs.holds {
                continue;
            }
            let inst = to_stability_scaling(&f, &p, &s0, &c).unwrap();
            let a = solve_unconstrained(&inst).unwrap();
            let b = solve_constrained(&to_covering(&f, &p, &s0, &c).unwrap(), CostKind::Inverse).unwrap();
            assert!((&a.z_star - &b.z_star).amax() < 1e-4);
        }
    }

    #[test]
    fn certificate_and_bounds() {
        for seed in 0..10 {
            let (f, c, s0) = random_network(6, 200 + seed);
            let t = DiseaseParams::covid(0.0, 0.6754, 0.32, 0.2, 0.2, 0.04);
            let p = calibrate_beta(&f, &t, &s0, 0.15).unwrap();
            let cov = to_covering(&f, &p, &s0, &c).unwrap();
            let r = solve_constrained(&cov, CostKind::Inverse).unwrap();
            assert!(r.reduced_lambda <= 1e-9 && r.reduced_lambda >= -1e-6, "{}", r.reduced_lambda);
            assert!(r.z_star.iter().all(|&z| z > 0.0 && z <= 1.0));
            assert!(!r.clamped);
        }
    }

    #[test]
    fn convex_costs_agree_across_restarts() {
        let (f, c, s0) = random_network(5, 7);
        let t = DiseaseParams::covid(0.0, 0.6754, 0.32, 0.2, 0.2, 0.04);
        let p = calibrate_beta(&f, &t, &s0, 0.2).unwrap();
        let cov = to_covering(&f, &p, &s0, &c).unwrap();
        for kind in [CostKind::Inverse, CostKind::Power(1.5), CostKind::Power(2.0), CostKind::Power(3.0)] {
            let base = solve_constrained(&cov, kind).unwrap().cost;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            for _ in 0..5 {
                let start = Vector::from_fn(5, |_, _| rng.random_range(-2.0..2.0));
                let opts = ConstrainedOptions {
                    start: Some(start),
                    ..Default::default()
                };
                let r = solve_constrained_with(&cov, kind, &opts).unwrap();
                assert!((r.cost - base).abs() <= 5e-3 * base, "{kind}: {} vs {base}", r.cost);
            }
        }
    }

    #[test]
    fn capped_cost_reports_nonconvexity() {
        let (f, c, s0) = random_network(4, 9);
        let t = DiseaseParams::covid(0.0, 0.6754, 0.32, 0.2, 0.2, 0.04);
        let p = calibrate_beta(&f, &t, &s0, 0.2).unwrap();
        let cov = to_covering(&f, &p, &s0, &c).unwrap();
        let r = solve_constrained(&cov, CostKind::Capped(10.0)).unwrap();
        assert!(r.nonconvex_objective);
        assert!(r.reduced_lambda <= 1e-9);
        let inv = solve_constrained(&cov, CostKind::Inverse).unwrap();
        let capped_at_inv = lockdown_cost(&inv.z_star, &c, CostKind::Capped(10.0)).unwrap();
        assert!(r.cost <= capped_at_inv * (1.0 + 1e-6));
    }

    #[test]
    fn cost_is_monotone_in_alpha() {
        let (f, c, s0) = random_network(5, 21);
        let t = DiseaseParams::covid(0.0, 0.6754, 0.32, 0.2, 0.2, 0.0);
        let p = calibrate_beta(&f, &t, &s0, 0.2).unwrap();
        let mut last = -1.0;
        for alpha in [0.0, 0.02, 0.05, 0.1, 0.15] {
            let cov = to_covering(&f, &p.with_alpha(alpha), &s0, &c).unwrap();
            let cost = solve_constrained(&cov, CostKind::Inverse).unwrap().cost;
            assert!(cost >= last - 1e-9);
            last = cost;
        }
    }
}
