//! Network data, the infection-flow matrix and its lockdown factorization.
//!
//! Visitors from location `i` spend a fraction `tau[i][l]` of their day at
//! location `l`. The flow matrix
//!
//! ```text
//! a_ij = sum_l tau_il * tau_jl * N_j / sum_k N_k tau_kl
//! ```
//!
//! factors as `A = C Bᵀ` with `C = tau` and `Bᵀ = D1 tauᵀ D2`, so a lockdown
//! vector `z` (activity multiplier per location) enters as `A(z) = C diag(z) Bᵀ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Minutes in a day; home-dwell times are given in minutes.
pub const MINUTES_PER_DAY: f64 = 1440.0;

const ROW_SUM_TOL: f64 = 1e-9;

/// Daily travel rates `tau[i][j]`: fraction of a day residents of `i` spend at `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelMatrix {
    tau: Mat,
}

impl TravelMatrix {
    /// Validates a raw rate matrix: square, finite, nonnegative, row sums at most one.
    pub fn new(tau: Mat) -> Result<Self> {
        if tau.nrows() != tau.ncols() {
            return Err(Error::Dimension {
                what: "travel matrix columns",
                expected: tau.nrows(),
                found: tau.ncols(),
            });
        }
        if tau.nrows() == 0 {
            return Err(Error::invalid("tau", "empty matrix"));
        }
        for i in 0..tau.nrows() {
            let mut sum = 0.0;
            for j in 0..tau.ncols() {
                let v = tau[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(
                        format!("tau[{i}][{j}]"),
                        format!("entry must be finite and >= 0, got {v}"),
                    ));
                }
                sum += v;
            }
            if sum > 1.0 + ROW_SUM_TOL {
                return Err(Error::invalid(
                    format!("tau row {i}"),
                    format!("row sum {sum} exceeds one day"),
                ));
            }
        }
        Ok(Self { tau })
    }

    /// Builds rates from trip counts: `tau_ij = (1 - h_i/1440) k_ij / sum_a k_ia`.
    pub fn from_trips(trips: &Mat, home_dwell: &[f64]) -> Result<Self> {
        let n = trips.nrows();
        if trips.ncols() != n {
            return Err(Error::Dimension {
                what: "trip matrix columns",
                expected: n,
                found: trips.ncols(),
            });
        }
        if home_dwell.len() != n {
            return Err(Error::Dimension {
                what: "home dwell",
                expected: n,
                found: home_dwell.len(),
            });
        }
        let mut tau = Mat::zeros(n, n);
        for i in 0..n {
            let h = home_dwell[i];
            if !(0.0..=MINUTES_PER_DAY).contains(&h) {
                return Err(Error::invalid(
                    format!("home_dwell[{i}]"),
                    format!("{h} is outside [0, 1440] minutes"),
                ));
            }
            let row_total: f64 = trips.row(i).iter().sum();
            if row_total <= 0.0 || !row_total.is_finite() {
                return Err(Error::invalid(
                    format!("trips row {i}"),
                    "location has no recorded trips",
                ));
            }
            let away = 1.0 - h / MINUTES_PER_DAY;
            for j in 0..n {
                let k = trips[(i, j)];
                if k < 0.0 {
                    return Err(Error::invalid(format!("trips[{i}][{j}]"), "negative count"));
                }
                tau[(i, j)] = away * k / row_total;
            }
        }
        Self::new(tau)
    }

    pub fn tau(&self) -> &Mat {
        &self.tau
    }

    pub fn n(&self) -> usize {
        self.tau.nrows()
    }

    pub fn row_sums(&self) -> Vector {
        Vector::from_iterator(self.n(), self.tau.row_iter().map(|r| r.sum()))
    }

    pub fn has_positive_diagonal(&self) -> bool {
        (0..self.n()).all(|i| self.tau[(i, i)] > 0.0)
    }

    /// Home-dwell minutes implied by the row sums.
    pub fn implied_home_dwell(&self) -> Vector {
        self.row_sums().map(|s| MINUTES_PER_DAY * (1.0 - s))
    }

    pub fn into_inner(self) -> Mat {
        self.tau
    }
}

/// Everything the epidemic runs on: populations, costs, travel.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkData {
    populations: Vector,
    employment: Vector,
    cost_coeffs: Vector,
    travel: TravelMatrix,
    home_dwell: Vector,
    warnings: Vec<String>,
}

impl NetworkData {
    /// Builds network data with costs `c_i = e_i / e_max`.
    ///
    /// Rows of `tau` whose sums disagree with `1 - h_i/1440` by more than
    /// `1e-9` are rescaled to match and a warning is recorded.
    pub fn new(
        populations: Vector,
        employment: Vector,
        travel: TravelMatrix,
        home_dwell: Vector,
    ) -> Result<Self> {
        let e_max = employment.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !(e_max > 0.0) {
            return Err(Error::invalid("employment", "all employment counts are zero"));
        }
        let costs = employment.map(|e| e / e_max);
        Self::from_parts(populations, employment, costs, travel, home_dwell)
    }

    /// Builds network data with explicitly given cost coefficients.
    pub fn from_parts(
        populations: Vector,
        employment: Vector,
        cost_coeffs: Vector,
        travel: TravelMatrix,
        home_dwell: Vector,
    ) -> Result<Self> {
        let n = travel.n();
        for (what, len) in [
            ("populations", populations.len()),
            ("employment", employment.len()),
            ("cost coefficients", cost_coeffs.len()),
            ("home dwell", home_dwell.len()),
        ] {
            if len != n {
                return Err(Error::Dimension {
                    what,
                    expected: n,
                    found: len,
                });
            }
        }
        for i in 0..n {
            if !(populations[i] > 0.0) || !populations[i].is_finite() {
                return Err(Error::invalid(
                    format!("population[{i}]"),
                    format!("must be positive, got {}", populations[i]),
                ));
            }
            if !(employment[i] >= 0.0) {
                return Err(Error::invalid(
                    format!("employment[{i}]"),
                    format!("must be nonnegative, got {}", employment[i]),
                ));
            }
            if !(cost_coeffs[i] > 0.0) || !cost_coeffs[i].is_finite() {
                return Err(Error::invalid(
                    format!("cost_coeff[{i}]"),
                    format!("must be positive, got {} (zero-cost locations are rejected)", cost_coeffs[i]),
                ));
            }
        }
        let mut warnings = Vec::new();
        let mut tau = travel.into_inner();
        for i in 0..n {
            let target = 1.0 - home_dwell[i] / MINUTES_PER_DAY;
            let sum: f64 = tau.row(i).sum();
            if (sum - target).abs() > ROW_SUM_TOL {
                if sum <= 0.0 {
                    return Err(Error::invalid(format!("tau row {i}"), "row is all zero"));
                }
                warnings.push(format!(
                    "tau row {i} sums to {sum}, expected {target} from home dwell; rescaled"
                ));
                let scale = target / sum;
                tau.row_mut(i).iter_mut().for_each(|v| *v *= scale);
            }
        }
        Ok(Self {
            populations,
            employment,
            cost_coeffs,
            travel: TravelMatrix::new(tau)?,
            home_dwell,
            warnings,
        })
    }

    pub fn n(&self) -> usize {
        self.travel.n()
    }
    pub fn populations(&self) -> &Vector {
        &self.populations
    }
    pub fn employment(&self) -> &Vector {
        &self.employment
    }
    pub fn cost_coeffs(&self) -> &Vector {
        &self.cost_coeffs
    }
    pub fn travel(&self) -> &TravelMatrix {
        &self.travel
    }
    pub fn tau(&self) -> &Mat {
        self.travel.tau()
    }
    pub fn home_dwell(&self) -> &Vector {
        &self.home_dwell
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Same network with a replaced travel matrix; home dwell follows the new row sums.
    pub fn with_travel(&self, travel: TravelMatrix) -> Result<Self> {
        let h = travel.implied_home_dwell();
        Self::from_parts(
            self.populations.clone(),
            self.employment.clone(),
            self.cost_coeffs.clone(),
            travel,
            h,
        )
    }

    /// Same network with replaced cost coefficients.
    pub fn with_costs(&self, cost_coeffs: Vector) -> Result<Self> {
        Self::from_parts(
            self.populations.clone(),
            self.employment.clone(),
            cost_coeffs,
            self.travel.clone(),
            self.home_dwell.clone(),
        )
    }

    /// Same network with replaced populations.
    pub fn with_populations(&self, populations: Vector) -> Result<Self> {
        Self::from_parts(
            populations,
            self.employment.clone(),
            self.cost_coeffs.clone(),
            self.travel.clone(),
            self.home_dwell.clone(),
        )
    }
}

/// Factors of the flow matrix, `A(z) = C diag(z) Bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowFactors {
    /// `C = tau`.
    pub c: Mat,
    /// `Bᵀ = D1 tauᵀ D2`.
    pub bt: Mat,
    /// Diagonal of `D1`: `1 / sum_k N_k tau_kl`.
    pub d1: Vector,
    /// Diagonal of `D2`: populations.
    pub d2: Vector,
}

impl FlowFactors {
    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    /// `A(1) = C Bᵀ`.
    pub fn flow_matrix(&self) -> Mat {
        &self.c * &self.bt
    }
}

/// Computes `C` and `B` for the network.
pub fn build_flow_matrix(net: &NetworkData) -> Result<FlowFactors> {
    let tau = net.tau();
    let n = net.n();
    let pops = net.populations();
    let mut d1 = Vector::zeros(n);
    for l in 0..n {
        let visitors: f64 = (0..n).map(|k| pops[k] * tau[(k, l)]).sum();
        if !(visitors > 0.0) {
            return Err(Error::DegenerateLocation(l));
        }
        d1[l] = 1.0 / visitors;
    }
    let mut bt = tau.transpose();
    for l in 0..n {
        for j in 0..n {
            bt[(l, j)] *= d1[l] * pops[j];
        }
    }
    Ok(FlowFactors {
        c: tau.clone(),
        bt,
        d1,
        d2: pops.clone(),
    })
}

/// Post-lockdown flow matrix `C diag(z) Bᵀ`.
pub fn apply_lockdown(factors: &FlowFactors, z: &Vector) -> Result<Mat> {
    let n = factors.n();
    if z.len() != n {
        return Err(Error::Dimension {
            what: "lockdown vector",
            expected: n,
            found: z.len(),
        });
    }
    if let Some(i) = z.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(format!("z[{i}]"), "lockdown rates must be positive"));
    }
    let mut scaled = factors.c.clone();
    for l in 0..n {
        scaled.column_mut(l).scale_mut(z[l]);
    }
    Ok(scaled * &factors.bt)
}

/// Cost functional applied to a lockdown vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "param", rename_all = "snake_case")]
pub enum CostKind {
    /// `sum c_i (1/z_i - 1)`
    Inverse,
    /// `sum c_i (z_i^-k - 1)`
    Power(f64),
    /// `sum c_i (min(1/z_i, C) - 1)`
    Capped(f64),
}

impl CostKind {
    /// Per-location cost `phi(z)` (before multiplying by `c_i`).
    pub fn phi(&self, z: f64) -> f64 {
        match *self {
            CostKind::Inverse => 1.0 / z - 1.0,
            CostKind::Power(k) => z.powf(-k) - 1.0,
            CostKind::Capped(cap) => (1.0 / z).min(cap) - 1.0,
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self, CostKind::Capped(_))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CostKind::Inverse => Ok(()),
            CostKind::Power(k) if k >= 1.0 && k.is_finite() => Ok(()),
            CostKind::Power(k) => Err(Error::invalid("cost", format!("power exponent {k} must be >= 1"))),
            CostKind::Capped(c) if c > 1.0 && c.is_finite() => Ok(()),
            CostKind::Capped(c) => Err(Error::invalid("cost", format!("cap {c} must exceed 1"))),
        }
    }
}

impl std::fmt::Display for CostKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CostKind::Inverse => write!(f, "inverse"),
            CostKind::Power(k) => write!(f, "power:{k}"),
            CostKind::Capped(c) => write!(f, "capped:{c}"),
        }
    }
}

impl std::str::FromStr for CostKind {
    type Err = Error;

    /// Parses `inverse`, `power:k` or `capped:C`.
    fn from_str(s: &str) -> Result<Self> {
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::invalid("cost", format!("bad number `{v}`")))
        };
        let kind = match s.split_once(':') {
            None if s == "inverse" => CostKind::Inverse,
            Some(("power", v)) => CostKind::Power(parse(v)?),
            Some(("capped", v)) => CostKind::Capped(parse(v)?),
            _ => return Err(Error::invalid("cost", format!("unknown cost `{s}`"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Evaluates the lockdown cost `sum_i c_i phi(z_i)`.
pub fn lockdown_cost(z: &Vector, c: &Vector, kind: CostKind) -> Result<f64> {
    if z.len() != c.len() {
        return Err(Error::Dimension {
            what: "cost coefficients",
            expected: z.len(),
            found: c.len(),
        });
    }
    if let Some(i) = z.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::invalid(format!("z[{i}]"), "lockdown rates must be positive"));
    }
    Ok(z.iter().zip(c.iter()).map(|(&zi, &ci)| ci * kind.phi(zi)).sum())
}

/// A lockdown vector together with the cost it was evaluated under.
#[derive(Debug, Clone, PartialEq)]
pub struct LockdownPolicy {
    pub z: Vector,
    pub cost_kind: CostKind,
    pub cost_value: f64,
    /// Some entry exceeds one (only possible for unconstrained solutions).
    pub exceeds_one: bool,
}

impl LockdownPolicy {
    pub fn new(z: Vector, c: &Vector, cost_kind: CostKind) -> Result<Self> {
        let cost_value = lockdown_cost(&z, c, cost_kind)?;
        let exceeds_one = z.iter().any(|&v| v > 1.0);
        Ok(Self {
            z,
            cost_kind,
            cost_value,
            exceeds_one,
        })
    }
}

/// Epidemic model family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Sis,
    Sir,
    Covid,
}

impl std::str::FromStr for ModelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sis" => Ok(ModelFamily::Sis),
            "sir" => Ok(ModelFamily::Sir),
            "covid" => Ok(ModelFamily::Covid),
            _ => Err(Error::invalid("model", format!("unknown family `{s}`"))),
        }
    }
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelFamily::Sis => "sis",
            ModelFamily::Sir => "sir",
            ModelFamily::Covid => "covid",
        })
    }
}

/// Rates of the epidemic model, all per day.
///
/// Every family sees the flow matrix through the global multiplier `zeta`
/// (`zeta * A`). SIS is `x' = (1-x) zeta A x - gamma x`; SIR is the COVID
/// model with `beta_s = epsilon = r_s = 0` and recovery `r_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiseaseParams {
    pub family: ModelFamily,
    pub beta_s: f64,
    pub beta_a: f64,
    pub epsilon: f64,
    pub r_a: f64,
    pub r_s: f64,
    pub gamma: f64,
    /// `beta_a / beta_s`, used by calibration.
    pub alpha_hat: f64,
    /// Target decay rate.
    pub alpha: f64,
    #[serde(default = "one")]
    pub zeta: f64,
}

fn one() -> f64 {
    1.0
}

impl DiseaseParams {
    pub fn sis(zeta: f64, gamma: f64, alpha: f64) -> Self {
        Self {
            family: ModelFamily::Sis,
            beta_s: 0.0,
            beta_a: 0.0,
            epsilon: 0.0,
            r_a: 0.0,
            r_s: 0.0,
            gamma,
            alpha_hat: 0.0,
            alpha,
            zeta,
        }
    }

    pub fn sir(beta: f64, gamma: f64, alpha: f64) -> Self {
        Self {
            family: ModelFamily::Sir,
            beta_s: 0.0,
            beta_a: beta,
            epsilon: 0.0,
            r_a: gamma,
            r_s: 0.0,
            gamma,
            alpha_hat: 0.0,
            alpha,
            zeta: 1.0,
        }
    }

    /// COVID rates with `beta_a = alpha_hat * beta_s`.
    pub fn covid(beta_s: f64, alpha_hat: f64, epsilon: f64, r_a: f64, r_s: f64, alpha: f64) -> Self {
        Self {
            family: ModelFamily::Covid,
            beta_s,
            beta_a: alpha_hat * beta_s,
            epsilon,
            r_a,
            r_s,
            gamma: r_a,
            alpha_hat,
            alpha,
            zeta: 1.0,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Rejects negative or non-finite rates.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta_s", self.beta_s),
            ("beta_a", self.beta_a),
            ("epsilon", self.epsilon),
            ("r_a", self.r_a),
            ("r_s", self.r_s),
            ("gamma", self.gamma),
            ("alpha_hat", self.alpha_hat),
            ("zeta", self.zeta),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(name, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        if !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be finite"));
        }
        Ok(())
    }

    /// Supremum of admissible decay rates.
    pub fn alpha_bound(&self) -> f64 {
        match self.family {
            ModelFamily::Sis => self.gamma,
            ModelFamily::Sir => self.r_a,
            ModelFamily::Covid => self.r_s.min(self.epsilon + self.r_a),
        }
    }

    pub fn check_alpha(&self, alpha: f64) -> Result<()> {
        let bound = self.alpha_bound();
        if alpha < bound {
            Ok(())
        } else {
            Err(Error::InfeasibleAlpha { alpha, bound })
        }
    }

    /// `b1(a) = (beta_s eps + beta_a (r_s - a)) / ((eps + r_a - a)(r_s - a))`.
    ///
    /// For SIR this reduces to `beta_a / (r_a - a)`. Undefined for SIS.
    pub fn b1(&self, a: f64) -> Result<f64> {
        match self.family {
            ModelFamily::Sis => Err(Error::FamilyMismatch("b1 is defined for SIR and COVID only")),
            ModelFamily::Sir => {
                self.check_alpha(a)?;
                Ok(self.beta_a / (self.r_a - a))
            }
            ModelFamily::Covid => {
                self.check_alpha(a)?;
                let num = self.beta_s * self.epsilon + self.beta_a * (self.r_s - a);
                Ok(num / ((self.epsilon + self.r_a - a) * (self.r_s - a)))
            }
        }
    }

    /// Size of the linearization: `2n` for COVID, `n` otherwise.
    pub fn state_blocks(&self) -> usize {
        match self.family {
            ModelFamily::Covid => 2,
            _ => 1,
        }
    }
}

/// Linearization of the infected dynamics at the disease-free direction.
///
/// COVID: `[[beta_a S A - (eps + r_a) I, beta_s S A], [eps I, -r_s I]]` with
/// `S = diag(s0)` and `A = zeta A(z)`. SIR: the top-left block (the
/// symptomatic row is identically zero and decoupled). SIS: `zeta A(z) - gamma I`.
pub fn assemble_linearization(
    factors: &FlowFactors,
    z: &Vector,
    params: &DiseaseParams,
    s0: &Vector,
) -> Result<Mat> {
    let a = apply_lockdown(factors, z)? * params.zeta;
    linearization_from_flow(&a, params, s0)
}

/// As [`assemble_linearization`], from an already locked-down flow matrix.
pub fn linearization_from_flow(a: &Mat, params: &DiseaseParams, s0: &Vector) -> Result<Mat> {
    let n = a.nrows();
    if params.family == ModelFamily::Sis {
        return Ok(a - Mat::identity(n, n) * params.gamma);
    }
    if s0.len() != n {
        return Err(Error::Dimension {
            what: "initial susceptible fractions",
            expected: n,
            found: s0.len(),
        });
    }
    if let Some(i) = s0.iter().position(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(Error::invalid(format!("s0[{i}]"), "must lie in [0, 1]"));
    }
    let mut sa = a.clone();
    for i in 0..n {
        sa.row_mut(i).scale_mut(s0[i]);
    }
    let top_left = &sa * params.beta_a - Mat::identity(n, n) * (params.epsilon + params.r_a);
    if params.family == ModelFamily::Sir {
        return Ok(top_left);
    }
    let mut m = Mat::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&top_left);
    m.view_mut((0, n), (n, n)).copy_from(&(&sa * params.beta_s));
    for i in 0..n {
        m[(n + i, i)] = params.epsilon;
        m[(n + i, n + i)] = -params.r_s;
    }
    Ok(m)
}
