//! Perron eigenpairs of Metzler matrices, stability checks and calibration.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{
    linearization_from_flow, DiseaseParams, FlowFactors, Mat, ModelFamily, Vector,
};

/// Eigenvalue of maximal real part with its positive eigenvector (unit 1-norm).
#[derive(Debug, Clone)]
pub struct PerronPair {
    pub value: f64,
    pub vector: Vector,
    pub residual: f64,
    pub iterations: usize,
}

/// True iff the directed graph with an edge `j -> i` for every nonzero
/// off-diagonal `pattern[(i, j)]` is strongly connected.
///
/// Reversing every edge does not change strong connectivity, so the
/// orientation convention only matters for documentation.
pub fn strongly_connected(pattern: &DMatrix<bool>) -> bool {
    let n = pattern.nrows();
    if n == 0 || pattern.ncols() != n {
        return false;
    }
    reaches_all(n, |i, j| pattern[(i, j)]) && reaches_all(n, |i, j| pattern[(j, i)])
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for j in 0..n {
            if !seen[j] && j != i && edge(i, j) {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == n
}

/// Off-diagonal nonzero pattern.
pub fn pattern_of(m: &Mat) -> DMatrix<bool> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| i != j && m[(i, j)] != 0.0)
}

fn check_metzler(p: &Mat) -> Result<()> {
    if p.nrows() != p.ncols() {
        return Err(Error::Dimension {
            what: "square matrix",
            expected: p.nrows(),
            found: p.ncols(),
        });
    }
    for ((i, j), v) in p.iter().enumerate().map(|(k, v)| ((k % p.nrows(), k / p.nrows()), v)) {
        if !v.is_finite() {
            return Err(Error::invalid(format!("matrix[{i}][{j}]"), "non-finite entry"));
        }
        if i != j && *v < 0.0 {
            return Err(Error::invalid(
                format!("matrix[{i}][{j}]"),
                "negative off-diagonal entry (matrix is not Metzler)",
            ));
        }
    }
    Ok(())
}

/// Right Perron pair of a strongly connected Metzler matrix.
///
/// Power iteration on `P + sigma I` with `sigma = max|P_ii| + 1`. When the
/// spectral gap is small the iteration hands over to a shift-invert
/// refinement with the Collatz-Wielandt upper bound as shift, which keeps
/// iterates positive and converges superlinearly.
pub fn perron(p: &Mat) -> Result<PerronPair> {
    perron_from(p, None)
}

/// Left Perron pair (`wᵀ P = λ wᵀ`).
pub fn perron_left(p: &Mat) -> Result<PerronPair> {
    perron(&p.transpose())
}

/// [`perron`] with an optional positive starting vector.
pub fn perron_from(p: &Mat, start: Option<&Vector>) -> Result<PerronPair> {
    check_metzler(p)?;
    let n = p.nrows();
    if n == 1 {
        return Ok(PerronPair {
            value: p[(0, 0)],
            vector: Vector::from_element(1, 1.0),
            residual: 0.0,
            iterations: 0,
        });
    }
    if !strongly_connected(&pattern_of(p)) {
        return Err(Error::NotStronglyConnected);
    }
    let sigma = p.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    let b = p + Mat::identity(n, n) * sigma;
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * scale.max(1.0);

    let mut x = match start {
        Some(s) if s.len() == n && s.iter().all(|&v| v > 0.0) => s / s.sum(),
        _ => Vector::from_element(n, 1.0 / n as f64),
    };
    let cap = (10.0 * n as f64 * (1.0 / 1e-12f64).ln()).ceil() as usize;
    let mut iterations = 0;

    let finish = |x: Vector, iterations: usize| -> PerronPair {
        let bx = &b * &x;
        let lam = bx.sum() / x.sum();
        let residual = (&bx - &x * lam).amax() / x.amax();
        PerronPair {
            value: lam - sigma,
            vector: x,
            residual,
            iterations,
        }
    };

    let bounds = |x: &Vector, bx: &Vector| -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..x.len() {
            let r = bx[i] / x[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    };

    // plain power phase
    let warmup = 50.min(cap);
    while iterations < warmup {
        let bx = &b * &x;
        iterations += 1;
        let (lo, hi) = bounds(&x, &bx);
        let next = &bx / bx.sum();
        if hi - lo <= tol {
            return Ok(finish(next, iterations));
        }
        x = next;
    }

    // shift-invert refinement
    let mut best = finish(x.clone(), iterations);
    for _ in 0..100 {
        let bx = &b * &x;
        let (lo, hi) = bounds(&x, &bx);
        if hi - lo <= tol {
            return Ok(finish(x, iterations));
        }
        let mu = hi + 1e-15 * hi.abs().max(1.0);
        let shifted = Mat::identity(n, n) * mu - &b;
        iterations += 1;
        let Some(y) = shifted.lu().solve(&x) else {
            return Ok(finish(x, iterations));
        };
        if y.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            break;
        }
        x = &y / y.sum();
        let cand = finish(x.clone(), iterations);
        if cand.residual < best.residual {
            best = cand;
        }
    }

    // fall back to power iteration from the best point
    x = best.vector.clone();
    while iterations < cap {
        let bx = &b * &x;
        iterations += 1;
        let (lo, hi) = bounds(&x, &bx);
        x = &bx / bx.sum();
        if hi - lo <= tol {
            return Ok(finish(x, iterations));
        }
    }
    let last = finish(x, iterations);
    if last.residual <= 1e-10 * scale.max(1.0) {
        return Ok(last);
    }
    Err(Error::NonConvergence {
        what: "perron power iteration",
        iterations,
        residual: last.residual,
    })
}

/// Spectral abscissa of a strongly connected Metzler matrix.
pub fn lambda_max(m: &Mat) -> Result<f64> {
    Ok(perron(m)?.value)
}

/// Strongly connected components of the off-diagonal pattern.
pub fn components(pattern: &DMatrix<bool>) -> Vec<Vec<usize>> {
    let n = pattern.nrows();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            seen[s] = true;
            let mut queue = VecDeque::from([s]);
            while let Some(i) = queue.pop_front() {
                for j in 0..n {
                    if !seen[j] && pattern[(j, i)] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
            seen
        })
        .collect();
    let mut assigned = vec![false; n];
    let mut out = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j] && reach[j][i]).collect();
        for &j in &comp {
            assigned[j] = true;
        }
        out.push(comp);
    }
    out
}

/// Spectral abscissa of any Metzler matrix, by strongly connected blocks.
///
/// The all-zero matrix has no edges at all and is rejected as degenerate.
pub fn lambda_max_blocks(m: &Mat) -> Result<f64> {
    check_metzler(m)?;
    let pattern = pattern_of(m);
    if m.iter().all(|&v| v == 0.0) {
        return Err(Error::NotStronglyConnected);
    }
    let mut best = f64::NEG_INFINITY;
    for comp in components(&pattern) {
        let sub = Mat::from_fn(comp.len(), comp.len(), |a, b| m[(comp[a], comp[b])]);
        best = best.max(perron(&sub)?.value);
    }
    Ok(best)
}

/// Stability at rate `alpha`, with margin `-alpha - lambda_max(M)`.
#[derive(Debug, Clone, Copy)]
pub struct StabilityCheck {
    pub stable: bool,
    pub lambda: f64,
    pub margin: f64,
}

///
/// Reducible matrices are handled block by block: the spectral abscissa is
/// the largest Perron value over strongly connected components.
pub fn is_stabilizing(m: &Mat, alpha: f64) -> Result<StabilityCheck> {
    let lambda = lambda_max_blocks(m)?;
    Ok(StabilityCheck {
        stable: lambda <= -alpha + 1e-9,
        lambda,
        margin: -alpha - lambda,
    })
}

/// Growth rate of the linearization at `z = 1` for the given parameters.
fn growth_rate(a: &Mat, params: &DiseaseParams, s0: &Vector) -> Result<f64> {
    if params.family == ModelFamily::Covid && params.beta_s == 0.0 && params.beta_a == 0.0 {
        // reducible at zero transmission; closed form
        return Ok((-(params.epsilon + params.r_a)).max(-params.r_s));
    }
    lambda_max(&linearization_from_flow(&(a * params.zeta), params, s0)?)
}

/// Sets transmission so the no-lockdown growth rate equals `target_growth`.
///
/// COVID: bisection on `beta_s` with `beta_a = alpha_hat beta_s`, bracket
/// `[0, 1]` doubled until the target is bracketed (cap `2^40`).
/// SIS and SIR: closed-form scalar `zeta`.
pub fn calibrate_beta(
    factors: &FlowFactors,
    template: &DiseaseParams,
    s0: &Vector,
    target_growth: f64,
) -> Result<DiseaseParams> {
    template.validate()?;
    let a = factors.flow_matrix();
    let n = a.nrows();
    let mut p = *template;
    match p.family {
        ModelFamily::Sis => {
            let rho = lambda_max(&a)?;
            let zeta = (target_growth + p.gamma) / rho;
            if !(zeta > 0.0) {
                return Err(Error::CalibrationRange { target: target_growth });
            }
            p.zeta = zeta;
            Ok(p)
        }
        ModelFamily::Sir => {
            if !(p.beta_a > 0.0) {
                p.beta_a = 1.0;
            }
            let mut sa = a.clone();
            for i in 0..n {
                sa.row_mut(i).scale_mut(s0[i]);
            }
            let rho = lambda_max(&sa)?;
            let zeta = (target_growth + p.r_a) / (p.beta_a * rho);
            if !(zeta > 0.0) {
                return Err(Error::CalibrationRange { target: target_growth });
            }
            p.zeta = zeta;
            Ok(p)
        }
        ModelFamily::Covid => {
            let set = |beta_s: f64| {
                let mut q = p;
                q.beta_s = beta_s;
                q.beta_a = p.alpha_hat * beta_s;
                q
            };
            let floor = growth_rate(&a, &set(0.0), s0)?;
            if target_growth <= floor {
                return Err(Error::CalibrationRange { target: target_growth });
            }
            let mut lo = 0.0;
            let mut hi = 1.0;
            let mut g_hi = growth_rate(&a, &set(hi), s0)?;
            while g_hi < target_growth {
                lo = hi;
                hi *= 2.0;
                if hi > 2f64.powi(40) {
                    return Err(Error::CalibrationRange { target: target_growth });
                }
                g_hi = growth_rate(&a, &set(hi), s0)?;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let g = growth_rate(&a, &set(mid), s0)?;
                if g < target_growth {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (g - target_growth).abs() <= 1e-12 {
                    return Ok(set(mid));
                }
            }
            let beta = if (growth_rate(&a, &set(lo), s0)? - target_growth).abs()
                < (growth_rate(&a, &set(hi), s0)? - target_growth).abs()
            {
                lo
            } else {
                hi
            };
            Ok(set(beta))
        }
    }
}

/// `R(t0) = rho(diag(s0) zeta A(z)) * b1(0)`.
pub fn reproduction_number(
    factors: &FlowFactors,
    z: &Vector,
    params: &DiseaseParams,
    s0: &Vector,
) -> Result<f64> {
    match params.family {
        ModelFamily::Sis => return Err(Error::FamilyMismatch("reproduction number needs SIR or COVID")),
        ModelFamily::Covid if params.r_s == 0.0 => return Err(Error::DegenerateRates("r_s = 0")),
        _ => {}
    }
    if params.epsilon + params.r_a == 0.0 {
        return Err(Error::DegenerateRates("epsilon + r_a = 0"));
    }
    let mut sa = crate::model::apply_lockdown(factors, z)? * params.zeta;
    for i in 0..sa.nrows() {
        sa.row_mut(i).scale_mut(s0[i]);
    }
    Ok(lambda_max(&sa)? * params.b1(0.0)?)
}

/// Reproduction-number threshold equivalent to decay rate `alpha`:
/// `r = b1(0) / b1(alpha)`.
pub fn alpha_to_r(params: &DiseaseParams, alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::invalid("alpha", "must be >= 0"));
    }
    let p = transmission_shape(params);
    Ok(p.b1(0.0)? / p.b1(alpha)?)
}

/// The ratio `b1(0) / b1(a)` is scale-free in transmission; uncalibrated
/// templates get `beta_s = 1`, `beta_a = alpha_hat`.
fn transmission_shape(params: &DiseaseParams) -> DiseaseParams {
    let mut p = *params;
    if p.beta_s == 0.0 && p.beta_a == 0.0 {
        p.beta_s = 1.0;
        p.beta_a = p.alpha_hat;
    }
    p
}

/// Inverse of [`alpha_to_r`] on `r in (0, 1]`.
pub fn r_to_alpha(params: &DiseaseParams, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::invalid("r", format!("{r} is outside (0, 1]")));
    }
    if r == 1.0 {
        return Ok(0.0);
    }
    let params = &transmission_shape(params);
    let b0 = params.b1(0.0)?;
    let want = b0 / r;
    let mut lo = 0.0;
    let mut hi = params.alpha_bound();
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if params.b1(mid)? < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
