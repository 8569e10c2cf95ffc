//! Matrix balancing and the reduction from optimal lockdown to balancing.
//!
//! The minimum-cost stabilizing lockdown asks for `z > 0` minimizing
//! `sum c_i / z_i` while `diag(z) P - diag(D)` is stable. With `c'_i = c_i / D_i`
//! this becomes "subtract the cheapest diagonal from `P`", whose optimum is
//! read off a balancing of `diag(c') P`.

use crate::constrained::{solve_constrained, to_covering};
use crate::error::{Error, Result};
use crate::model::{
    assemble_linearization, lockdown_cost, CostKind, DiseaseParams, FlowFactors, Mat, ModelFamily,
    Vector,
};
use crate::spectral::{lambda_max, lambda_max_blocks, pattern_of, strongly_connected};

/// Default relative imbalance tolerance.
pub const BALANCE_TOL: f64 = 1e-10;
/// Tolerance used inside the lockdown solver.
const SOLVER_BALANCE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 500_000;

/// Diagonal scaling `d` (with `d[0] = 1`) such that `diag(d) X diag(d)^-1`
/// has equal off-diagonal row and column sums at every index.
#[derive(Debug, Clone)]
pub struct BalancingResult {
    pub d: Vector,
    pub imbalance: f64,
    pub iterations: usize,
}

impl BalancingResult {
    /// `diag(d) X diag(d)^-1`.
    pub fn balanced(&self, x: &Mat) -> Mat {
        Mat::from_fn(x.nrows(), x.ncols(), |i, j| self.d[i] * x[(i, j)] / self.d[j])
    }
}

/// Max over `i` of `|row_i - col_i| / (row_i + col_i)`, diagonal excluded.
pub fn relative_imbalance(x: &Mat) -> f64 {
    let n = x.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut r = 0.0;
        let mut c = 0.0;
        for j in 0..n {
            if j != i {
                r += x[(i, j)];
                c += x[(j, i)];
            }
        }
        if r + c > 0.0 {
            worst = worst.max((r - c).abs() / (r + c));
        }
    }
    worst
}

/// Osborne balancing by cyclic sweeps of `d_i <- sqrt(col_i / row_i)`.
pub fn balance(x: &Mat, tol: f64) -> Result<BalancingResult> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::Dimension {
            what: "balancing matrix",
            expected: n,
            found: x.ncols(),
        });
    }
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::invalid("balancing matrix", format!("entries must be finite and >= 0, got {v}")));
    }
    if n == 1 {
        return Ok(BalancingResult {
            d: Vector::from_element(1, 1.0),
            imbalance: 0.0,
            iterations: 0,
        });
    }
    if !strongly_connected(&pattern_of(x)) {
        return Err(Error::NotStronglyConnected);
    }
    // off-diagonal entries in row-major and column-major order
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            let v = x[(i, j)];
            if i != j && v > 0.0 {
                rows[i].push((j, v));
                cols[j].push((i, v));
            }
        }
    }
    let mut d = vec![1.0f64; n];
    let mut inv = vec![1.0f64; n];
    let imbalance_of = |d: &[f64], inv: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for i in 0..n {
            let r: f64 = rows[i].iter().map(|&(j, v)| v * inv[j]).sum::<f64>() * d[i];
            let c: f64 = cols[i].iter().map(|&(j, v)| v * d[j]).sum::<f64>() * inv[i];
            worst = worst.max((r - c).abs() / (r + c));
        }
        worst
    };
    let mut imbalance = imbalance_of(&d, &inv);
    let mut sweeps = 0;
    while imbalance > tol {
        if sweeps >= MAX_SWEEPS {
            return Err(Error::NonConvergence {
                what: "osborne balancing",
                iterations: sweeps,
                residual: imbalance,
            });
        }
        for i in 0..n {
            let r: f64 = rows[i].iter().map(|&(j, v)| v * inv[j]).sum();
            let c: f64 = cols[i].iter().map(|&(j, v)| v * d[j]).sum();
            d[i] = (c / r).sqrt();
            inv[i] = 1.0 / d[i];
        }
        let d0 = d[0];
        for i in 0..n {
            d[i] /= d0;
            inv[i] = 1.0 / d[i];
        }
        sweeps += 1;
        imbalance = imbalance_of(&d, &inv);
    }
    Ok(BalancingResult {
        d: Vector::from_vec(d),
        imbalance,
        iterations: sweeps,
    })
}

/// Gradient of `f(g) = sum_ij X_ij exp(g_j - g_i)`.
///
/// Component `k` is `sum_i X_ik e^(g_k - g_i) - sum_j X_kj e^(g_j - g_k)`:
/// column sum minus row sum of `diag(e^-g) X diag(e^g)`. It vanishes at
/// `g = -ln d` for a balancing `d`.
pub fn balancing_gradient(x: &Mat, g: &Vector) -> Vector {
    let n = x.nrows();
    Vector::from_fn(n, |k, _| {
        let mut col = 0.0;
        let mut row = 0.0;
        for i in 0..n {
            if i != k {
                col += x[(i, k)] * (g[k] - g[i]).exp();
                row += x[(k, i)] * (g[i] - g[k]).exp();
            }
        }
        col - row
    })
}

/// Per-location high-spread test.
#[derive(Debug, Clone)]
pub struct HighSpread {
    pub per_location: Vec<bool>,
    pub holds: bool,
}

/// SIS: `zeta diag(BᵀC) >= gamma`. COVID: `zeta (beta_a + beta_s eps / r_s)
/// diag(Bᵀ S C) >= eps + r_a`. SIR: `zeta beta_a diag(Bᵀ S C) >= r_a`.
pub fn check_high_spread(factors: &FlowFactors, params: &DiseaseParams, s0: &Vector) -> Result<HighSpread> {
    let n = factors.n();
    let weights = family_weights(params, s0, n)?;
    let diag = weighted_diag(factors, &weights);
    let (coef, rhs) = match params.family {
        ModelFamily::Sis => (params.zeta, params.gamma),
        ModelFamily::Sir => (params.zeta * params.beta_a, params.r_a),
        ModelFamily::Covid => {
            if params.r_s == 0.0 {
                return Err(Error::DegenerateRates("r_s = 0"));
            }
            (
                params.zeta * (params.beta_a + params.beta_s * params.epsilon / params.r_s),
                params.epsilon + params.r_a,
            )
        }
    };
    let per_location: Vec<bool> = diag.iter().map(|&v| coef * v >= rhs).collect();
    let holds = per_location.iter().all(|&b| b);
    Ok(HighSpread { per_location, holds })
}

/// `diag(Bᵀ diag(a) C)` without forming the product.
fn weighted_diag(factors: &FlowFactors, a: &Vector) -> Vector {
    let n = factors.n();
    Vector::from_fn(n, |l, _| (0..n).map(|k| factors.bt[(l, k)] * a[k] * factors.c[(k, l)]).sum())
}

/// Susceptible weights entering `P`: ones for SIS, `s0` otherwise.
pub(crate) fn family_weights(params: &DiseaseParams, s0: &Vector, n: usize) -> Result<Vector> {
    if params.family == ModelFamily::Sis {
        return Ok(Vector::from_element(n, 1.0));
    }
    if s0.len() != n {
        return Err(Error::Dimension {
            what: "initial susceptible fractions",
            expected: n,
            found: s0.len(),
        });
    }
    if let Some(i) = s0.iter().position(|&s| !(s > 0.0 && s <= 1.0)) {
        return Err(Error::invalid(format!("s0[{i}]"), "must lie in (0, 1]"));
    }
    Ok(s0.clone())
}

/// Scalar `q` with `diag(z) Bᵀ diag(a) C - q I` stable iff the model decays at rate alpha.
pub(crate) fn decay_threshold(params: &DiseaseParams, alpha: f64) -> Result<f64> {
    params.validate()?;
    params.check_alpha(alpha)?;
    if !(params.zeta > 0.0) {
        return Err(Error::invalid("zeta", "must be positive"));
    }
    match params.family {
        ModelFamily::Sis => Ok((params.gamma - alpha) / params.zeta),
        _ => {
            let b1 = params.b1(alpha)?;
            if !(b1 > 0.0) {
                return Err(Error::DegenerateRates("b1 must be positive (no transmission)"));
            }
            Ok(1.0 / (params.zeta * b1))
        }
    }
}

/// `min sum c_i / z_i` subject to `diag(z) P - diag(D)` stable.
#[derive(Debug, Clone)]
pub struct StabilityScalingInstance {
    pub p: Mat,
    pub d: Vector,
    pub c: Vector,
}

impl StabilityScalingInstance {
    pub fn new(p: Mat, d: Vector, c: Vector) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n || d.len() != n || c.len() != n {
            return Err(Error::Dimension {
                what: "stability scaling instance",
                expected: n,
                found: if d.len() != n { d.len() } else { c.len() },
            });
        }
        if p.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("P", "entries must be nonnegative"));
        }
        if d.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("D", "entries must be positive"));
        }
        if c.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::invalid("c", "costs must be positive"));
        }
        if n > 1 && !strongly_connected(&pattern_of(&p)) {
            return Err(Error::NotStronglyConnected);
        }
        Ok(Self { p, d, c })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// `diag(z) P - diag(D)`.
    pub fn stabilized(&self, z: &Vector) -> Mat {
        let mut m = self.p.clone();
        for i in 0..self.n() {
            m.row_mut(i).scale_mut(z[i]);
            m[(i, i)] -= self.d[i];
        }
        m
    }
}

/// Stability scaling form of the lockdown problem at rate `params.alpha`.
///
/// SIS: `P = zeta BᵀC`, `D = gamma - alpha`. COVID and SIR:
/// `P = Bᵀ diag(s0) C`, `D = 1 / (zeta b1(alpha))`.
pub fn to_stability_scaling(
    factors: &FlowFactors,
    params: &DiseaseParams,
    s0: &Vector,
    costs: &Vector,
) -> Result<StabilityScalingInstance> {
    let n = factors.n();
    let weights = family_weights(params, s0, n)?;
    stability_scaling_weighted(factors, params, &weights, costs)
}

/// As [`to_stability_scaling`] with explicit susceptible weights `a` in `Bᵀ diag(a) C`.
pub fn stability_scaling_weighted(
    factors: &FlowFactors,
    params: &DiseaseParams,
    weights: &Vector,
    costs: &Vector,
) -> Result<StabilityScalingInstance> {
    let n = factors.n();
    let q = decay_threshold(params, params.alpha)?;
    let mut sc = factors.c.clone();
    for k in 0..n {
        sc.row_mut(k).scale_mut(weights[k]);
    }
    let p = &factors.bt * sc;
    let (p, d) = match params.family {
        ModelFamily::Sis => (p * params.zeta, Vector::from_element(n, q * params.zeta)),
        _ => (p, Vector::from_element(n, q)),
    };
    StabilityScalingInstance::new(p, d, costs.clone())
}

/// Which solver produced the answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Balancing,
    ConstrainedSdp,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveMethod::Balancing => "balancing",
            SolveMethod::ConstrainedSdp => "constrained",
        })
    }
}

/// Which dispatch branch fired in [`solve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DispatchCase {
    /// High spread holds, balancing answer is guaranteed within bounds.
    HighSpread,
    /// High spread fails but the balancing answer happens to lie in (0, 1].
    WithinBounds,
    /// Balancing answer exceeds one somewhere; constrained fallback.
    Constrained,
    /// Non-inverse cost; only the constrained solver applies.
    CostForm,
}

impl std::fmt::Display for DispatchCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DispatchCase::HighSpread => "high_spread",
            DispatchCase::WithinBounds => "within_bounds",
            DispatchCase::Constrained => "constrained",
            DispatchCase::CostForm => "cost_form",
        })
    }
}

/// Output of a lockdown solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub z_star: Vector,
    pub cost: f64,
    pub cost_kind: CostKind,
    /// Spectral abscissa of the model linearization at `z_star` (filled by
    /// [`solve`]); for bare instance solves, that of the reduced form.
    pub lambda_achieved: f64,
    /// Spectral abscissa of the reduced form (`diag(z)P - D`, or
    /// normalized `Q - diag(u)`), zero when the constraint binds.
    pub reduced_lambda: f64,
    pub method: SolveMethod,
    pub case: Option<DispatchCase>,
    pub high_spread_holds: bool,
    pub unconstrained_exceeded_one: bool,
    pub imbalance: f64,
    /// Relative infinity norm of the balancing gradient.
    pub gradient_norm: f64,
    pub iterations: usize,
    /// `max d / min d` of the balancing (diagnostic only).
    pub d_ratio: f64,
    pub clamped: bool,
    pub nonconvex_objective: bool,
    pub converged: bool,
}

/// Balancing route: optimal `z` for inverse cost, no upper bound on `z`.
pub fn solve_unconstrained(inst: &StabilityScalingInstance) -> Result<SolveReport> {
    let n = inst.n();
    let cp = inst.c.component_div(&inst.d);
    let mut x = inst.p.clone();
    for i in 0..n {
        x.row_mut(i).scale_mut(cp[i]);
    }
    let bal = balance(&x, SOLVER_BALANCE_TOL)?;
    // positive vector with (P v)_i / v_i equal to the optimal subtraction
    let v = bal.d.map(|d| 1.0 / d);
    let pv = &inst.p * &v;
    let z = Vector::from_fn(n, |i, _| inst.d[i] * v[i] / pv[i]);

    let g = v.map(f64::ln);
    let grad = balancing_gradient(&x, &g);
    let scale = (&x * &v).component_div(&v).amax().max(f64::MIN_POSITIVE);
    let gradient_norm = grad.amax() / scale;

    let reduced = inst.stabilized(&z);
    let lam = if n == 1 { reduced[(0, 0)] } else { lambda_max(&reduced)? };
    let lam_scale = inst.d.amax();
    if lam.abs() > 1e-6 * lam_scale.max(1.0) {
        return Err(Error::NonConvergence {
            what: "balancing reduction (binding check)",
            iterations: bal.iterations,
            residual: lam,
        });
    }
    let cost = lockdown_cost(&z, &inst.c, CostKind::Inverse)?;
    let d_ratio = bal.d.max() / bal.d.min();
    Ok(SolveReport {
        unconstrained_exceeded_one: z.iter().any(|&v| v > 1.0),
        z_star: z,
        cost,
        cost_kind: CostKind::Inverse,
        lambda_achieved: lam,
        reduced_lambda: lam,
        method: SolveMethod::Balancing,
        case: None,
        high_spread_holds: false,
        imbalance: bal.imbalance,
        gradient_norm,
        iterations: bal.iterations,
        d_ratio,
        clamped: false,
        nonconvex_objective: false,
        converged: true,
    })
}

/// Uniform `z` at which `diag(z) P - D` is exactly marginally stable.
pub fn decay_matched_uniform(inst: &StabilityScalingInstance) -> Result<f64> {
    let n = inst.n();
    let lam = |t: f64| -> Result<f64> {
        let m = inst.stabilized(&Vector::from_element(n, t));
        if n == 1 {
            Ok(m[(0, 0)])
        } else {
            lambda_max(&m)
        }
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while lam(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Infeasible("no uniform lockdown reaches the boundary".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if lam(mid)? <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Full pipeline: high-spread check, balancing, constrained fallback.
pub fn solve(
    factors: &FlowFactors,
    params: &DiseaseParams,
    s0: &Vector,
    costs: &Vector,
    cost_kind: CostKind,
) -> Result<SolveReport> {
    cost_kind.validate()?;
    let n = factors.n();
    let high = check_high_spread(factors, params, s0)?;
    let mut report = if cost_kind == CostKind::Inverse {
        let inst = to_stability_scaling(factors, params, s0, costs)?;
        let unc = solve_unconstrained(&inst)?;
        if high.holds || !unc.unconstrained_exceeded_one {
            let mut r = unc;
            r.case = Some(if high.holds {
                DispatchCase::HighSpread
            } else {
                DispatchCase::WithinBounds
            });
            r
        } else {
            let cov = to_covering(factors, params, s0, costs)?;
            let mut r = solve_constrained(&cov, cost_kind)?;
            r.case = Some(DispatchCase::Constrained);
            r.unconstrained_exceeded_one = true;
            r.imbalance = unc.imbalance;
            r.d_ratio = unc.d_ratio;
            r
        }
    } else {
        let cov = to_covering(factors, params, s0, costs)?;
        let mut r = solve_constrained(&cov, cost_kind)?;
        r.case = Some(DispatchCase::CostForm);
        r
    };
    report.high_spread_holds = high.holds;
    report.cost = lockdown_cost(&report.z_star, costs, cost_kind)?;
    report.cost_kind = cost_kind;
    let m = assemble_linearization(factors, &report.z_star, params, s0)?;
    report.lambda_achieved = if m.nrows() == 1 { m[(0, 0)] } else { lambda_max_blocks(&m)? };
    debug_assert_eq!(report.z_star.len(), n);
    Ok(report)
}
