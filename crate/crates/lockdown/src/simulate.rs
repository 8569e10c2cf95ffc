//! Integration of the epidemic ODEs under a fixed lockdown, and the
//! benchmark policies the optimal lockdown is compared against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::balancing::to_stability_scaling;
use crate::error::{Error, Result};
use crate::model::{apply_lockdown, assemble_linearization, lockdown_cost, CostKind, DiseaseParams, FlowFactors, Mat, ModelFamily, Vector};
use crate::spectral::lambda_max_blocks;

/// Largest clamp (distance outside `[0, 1]`) tolerated before a step is rejected.
pub const CLAMP_TOL: f64 = 1e-8;
pub const DEFAULT_DT: f64 = 0.1;

/// Per-location state. For SIS the infected fraction lives in `x_a`,
/// `x_s` is zero and `s = 1 - x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    pub t: f64,
    pub s: Vector,
    pub x_a: Vector,
    pub x_s: Vector,
    /// Cumulative fraction ever infected, including the initial infections.
    pub cum: Vector,
}

impl EpidemicState {
    /// COVID/SIR state; everyone not in `s`, `x_a`, `x_s` counts as recovered.
    pub fn new(s: Vector, x_a: Vector, x_s: Vector) -> Result<Self> {
        let n = s.len();
        for (what, v) in [("x_a", &x_a), ("x_s", &x_s)] {
            if v.len() != n {
                return Err(Error::Dimension { what, expected: n, found: v.len() });
            }
        }
        for i in 0..n {
            for (name, v) in [("s", s[i]), ("x_a", x_a[i]), ("x_s", x_s[i])] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid(format!("{name}[{i}]"), format!("must lie in [0, 1], got {v}")));
                }
            }
            if s[i] + x_a[i] + x_s[i] > 1.0 + 1e-9 {
                return Err(Error::invalid(format!("state[{i}]"), "compartments sum above 1"));
            }
        }
        let cum = s.map(|v| 1.0 - v);
        Ok(Self { t: 0.0, s, x_a, x_s, cum })
    }

    pub fn sis(x: Vector) -> Result<Self> {
        if let Some(i) = x.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid(format!("x[{i}]"), "must lie in [0, 1]"));
        }
        let n = x.len();
        Ok(Self {
            t: 0.0,
            s: x.map(|v| 1.0 - v),
            cum: x.clone(),
            x_a: x,
            x_s: Vector::zeros(n),
        })
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn infected(&self) -> Vector {
        &self.x_a + &self.x_s
    }

    pub fn recovered(&self) -> Vector {
        Vector::from_fn(self.n(), |i, _| 1.0 - self.s[i] - self.x_a[i] - self.x_s[i])
    }

    fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(4 * self.n());
        for v in [&self.s, &self.x_a, &self.x_s, &self.cum] {
            y.extend(v.iter());
        }
        y
    }

    fn unpack(t: f64, y: &[f64], n: usize) -> Self {
        let part = |k: usize| Vector::from_column_slice(&y[k * n..(k + 1) * n]);
        Self {
            t,
            s: part(0),
            x_a: part(1),
            x_s: part(2),
            cum: part(3),
        }
    }
}

/// Right-hand side on the packed state `[s, x_a, x_s, cum]`.
struct Rhs<'a> {
    a: &'a Mat,
    params: &'a DiseaseParams,
    n: usize,
}

impl Rhs<'_> {
    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let p = self.params;
        let (s, rest) = y.split_at(n);
        let (xa, rest) = rest.split_at(n);
        let xs = &rest[..n];
        if p.family == ModelFamily::Sis {
            for i in 0..n {
                let mut ax = 0.0;
                for j in 0..n {
                    ax += self.a[(i, j)] * xa[j];
                }
                let inc = (1.0 - xa[i]) * p.zeta * ax;
                let dx = inc - p.gamma * xa[i];
                out[i] = -dx;
                out[n + i] = dx;
                out[2 * n + i] = 0.0;
                out[3 * n + i] = inc;
            }
            return;
        }
        for i in 0..n {
            let mut force = 0.0;
            for j in 0..n {
                force += self.a[(i, j)] * (p.beta_a * xa[j] + p.beta_s * xs[j]);
            }
            let f = s[i] * p.zeta * force;
            out[i] = -f;
            out[n + i] = f - (p.epsilon + p.r_a) * xa[i];
            out[2 * n + i] = p.epsilon * xa[i] - p.r_s * xs[i];
            out[3 * n + i] = f;
        }
    }
}

fn rk4(rhs: &Rhs, y: &[f64], h: f64) -> Vec<f64> {
    let m = y.len();
    let mut k1 = vec![0.0; m];
    let mut k2 = vec![0.0; m];
    let mut k3 = vec![0.0; m];
    let mut k4 = vec![0.0; m];
    let mut tmp = vec![0.0; m];
    rhs.eval(y, &mut k1);
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    rhs.eval(&tmp, &mut k2);
    for i in 0..m {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    rhs.eval(&tmp, &mut k3);
    for i in 0..m {
        tmp[i] = y[i] + h * k3[i];
    }
    rhs.eval(&tmp, &mut k4);
    (0..m)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Clamps the compartments into `[0, 1]`, returning the largest correction.
fn clamp(y: &mut [f64], n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for v in y[..3 * n].iter_mut() {
        let c = v.clamp(0.0, 1.0);
        worst = worst.max((c - *v).abs());
        *v = c;
    }
    worst
}

/// Result of [`step_rk4`].
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: EpidemicState,
    pub max_clamp: f64,
    /// Number of rejected attempts (each halving the step).
    pub rejections: usize,
}

/// Advances by `dt` with classical RK4 on the locked-down flow matrix `a_z`.
///
/// `a_z` is `A(z)` without `zeta`, which is applied here. A step whose
/// result leaves `[0, 1]` by more than [`CLAMP_TOL`] is rejected and retried
/// as two half steps.
pub fn step_rk4(state: &EpidemicState, a_z: &Mat, params: &DiseaseParams, dt: f64) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let n = state.n();
    if a_z.nrows() != n || a_z.ncols() != n {
        return Err(Error::Dimension { what: "flow matrix", expected: n, found: a_z.nrows() });
    }
    let rhs = Rhs { a: a_z, params, n };
    let mut y = state.pack();
    let mut t = state.t;
    let end = state.t + dt;
    let mut h = dt;
    let mut max_clamp: f64 = 0.0;
    let mut rejections = 0;
    while end - t > 1e-12 * dt {
        let step = h.min(end - t);
        let mut next = rk4(&rhs, &y, step);
        let c = clamp(&mut next, n);
        if c > CLAMP_TOL {
            rejections += 1;
            h *= 0.5;
            if h < 1e-10 * dt.max(1.0) {
                return Err(Error::StepRejectionCascade { t });
            }
            continue;
        }
        max_clamp = max_clamp.max(c);
        y = next;
        t += step;
    }
    Ok(StepOutcome {
        state: EpidemicState::unpack(end, &y, n),
        max_clamp,
        rejections,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub horizon: f64,
    pub sample_every: f64,
    pub dt: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon: 300.0,
            sample_every: 1.0,
            dt: DEFAULT_DT,
        }
    }
}

impl SimConfig {
    pub fn days(horizon: f64) -> Self {
        Self { horizon, ..Default::default() }
    }
}

/// Sampled solution with population-weighted aggregates.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<EpidemicState>,
    /// `sum_i N_i (x_a + x_s)_i`.
    pub active: Vec<f64>,
    /// `sum_i N_i cum_i`; for COVID/SIR this is `sum_i N_i (1 - s_i)`.
    pub cumulative: Vec<f64>,
    pub max_clamp: f64,
    pub rejections: usize,
}

impl Trajectory {
    pub fn final_cumulative(&self) -> f64 {
        *self.cumulative.last().expect("trajectory has the initial sample")
    }

    /// Cumulative cases as they would be reported at the given reporting rate.
    pub fn reported_cumulative(&self, reporting_rate: f64) -> Vec<f64> {
        self.cumulative.iter().map(|c| c * reporting_rate).collect()
    }
}

fn weighted_sum(pop: &Vector, v: &Vector) -> f64 {
    pop.dot(v)
}

/// Fixed-step RK4 from `state0` under the lockdown `z`.
pub fn simulate(
    state0: &EpidemicState,
    factors: &FlowFactors,
    z: &Vector,
    params: &DiseaseParams,
    populations: &Vector,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    let a_z = apply_lockdown(factors, z)?;
    simulate_flow(state0, &a_z, params, populations, cfg)
}

/// As [`simulate`] with the locked-down flow matrix given directly.
pub fn simulate_flow(
    state0: &EpidemicState,
    a_z: &Mat,
    params: &DiseaseParams,
    populations: &Vector,
    cfg: &SimConfig,
) -> Result<Trajectory> {
    params.validate()?;
    let n = state0.n();
    if populations.len() != n {
        return Err(Error::Dimension { what: "populations", expected: n, found: populations.len() });
    }
    if !(cfg.horizon >= 0.0) || !(cfg.dt > 0.0) || !(cfg.sample_every > 0.0) {
        return Err(Error::invalid("simulation config", "horizon >= 0, dt > 0 and sample_every > 0 required"));
    }
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let every = ((cfg.sample_every / cfg.dt).round() as usize).max(1);
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        active: Vec::new(),
        cumulative: Vec::new(),
        max_clamp: 0.0,
        rejections: 0,
    };
    let record = |traj: &mut Trajectory, st: &EpidemicState| {
        traj.times.push(st.t);
        traj.active.push(weighted_sum(populations, &st.infected()));
        traj.cumulative.push(weighted_sum(populations, &st.cum));
        traj.states.push(st.clone());
    };
    let mut st = state0.clone();
    let t0 = st.t;
    record(&mut traj, &st);
    for k in 1..=steps {
        let out = step_rk4(&st, a_z, params, cfg.dt)?;
        traj.max_clamp = traj.max_clamp.max(out.max_clamp);
        traj.rejections += out.rejections;
        st = out.state;
        // avoid drift from repeated addition
        st.t = t0 + k as f64 * cfg.dt;
        if k % every == 0 || k == steps {
            record(&mut traj, &st);
        }
    }
    Ok(traj)
}

/// Uniform `z` with `sum_i c_i (1/z - 1) = target_cost`.
pub fn match_cost_uniform(target_cost: f64, c: &Vector) -> Result<f64> {
    if !(target_cost >= 0.0) || !target_cost.is_finite() {
        return Err(Error::invalid("target_cost", "must be finite and >= 0"));
    }
    let total = c.sum();
    if !(total > 0.0) {
        return Err(Error::invalid("costs", "must have a positive sum"));
    }
    Ok(1.0 / (1.0 + target_cost / total))
}

/// `E[1/z]` for `z ~ U[a, b]`.
pub fn expected_inverse(a: f64, b: f64) -> f64 {
    if b - a <= 1e-12 * b {
        // series around the midpoint
        let m = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        return (1.0 + h * h / (3.0 * m * m)) / m;
    }
    (b.ln() - a.ln()) / (b - a)
}

/// Random lockdown `z_i ~ U[a, b]` with `b = min(1, a + width)`.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    pub a: f64,
    pub b: f64,
    pub width: f64,
    pub seed: u64,
    pub z: Vector,
    pub expected_cost: f64,
    pub realized_cost: f64,
}

fn random_bounds(a: f64, width: f64) -> (f64, f64) {
    (a, (a + width).min(1.0))
}

fn expected_random_cost(a: f64, width: f64, total: f64) -> f64 {
    let (a, b) = random_bounds(a, width);
    total * (expected_inverse(a, b) - 1.0)
}

fn bisect_decreasing(lo: f64, hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f decreasing on [lo, hi]; returns x with f(x) ~ target
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Picks `a` so the expected cost equals `target_cost`, then samples `z`.
pub fn match_cost_random(target_cost: f64, c: &Vector, width: f64, seed: u64) -> Result<RandomPolicy> {
    if !(width > 0.0 && width < 1.0) {
        return Err(Error::invalid("width", "must lie in (0, 1)"));
    }
    match_cost_uniform(target_cost, c)?;
    let total = c.sum();
    let floor = 1e-12;
    if expected_random_cost(floor, width, total) < target_cost {
        return Err(Error::WidthInfeasible { width, target: target_cost });
    }
    let a = bisect_decreasing(floor, 1.0, target_cost, |a| expected_random_cost(a, width, total));
    let (a, b) = random_bounds(a, width);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Vector::from_fn(c.len(), |_, _| a + (b - a) * rng.random::<f64>());
    let realized_cost = lockdown_cost(&z, c, CostKind::Inverse)?;
    Ok(RandomPolicy {
        a,
        b,
        width,
        seed,
        z,
        expected_cost: expected_random_cost(a, width, total),
        realized_cost,
    })
}

impl RandomPolicy {
    /// Shifts the sampled draws (same uniforms, same width) so the realized
    /// cost equals `target_cost` exactly.
    pub fn rematched(&self, target_cost: f64, c: &Vector) -> Result<RandomPolicy> {
        let span = self.b - self.a;
        let u = self.z.map(|z| if span > 0.0 { (z - self.a) / span } else { 0.0 });
        let draw = |a: f64| {
            let (a, b) = random_bounds(a, self.width);
            u.map(|ui| a + (b - a) * ui)
        };
        let cost = |a: f64| lockdown_cost(&draw(a), c, CostKind::Inverse).unwrap_or(f64::INFINITY);
        if cost(1e-12) < target_cost {
            return Err(Error::WidthInfeasible { width: self.width, target: target_cost });
        }
        let a = bisect_decreasing(1e-12, 1.0, target_cost, cost);
        let z = draw(a);
        let (a, b) = random_bounds(a, self.width);
        Ok(RandomPolicy {
            a,
            b,
            realized_cost: lockdown_cost(&z, c, CostKind::Inverse)?,
            expected_cost: expected_random_cost(a, self.width, c.sum()),
            z,
            ..self.clone()
        })
    }
}

/// Policy in which every location's own outflow decays at rate `alpha_prime`.
#[derive(Debug, Clone)]
pub struct BoundedDecline {
    pub z: Vector,
    pub alpha_prime: f64,
    pub cost: f64,
}

/// `z_l = min(1, D_l(a') / [P 1]_l)`, so every row of `diag(z) P - D(a')`
/// sums to at most zero; `a'` is bisected to hit `target_cost`.
pub fn match_cost_bounded_decline(
    target_cost: f64,
    factors: &FlowFactors,
    params: &DiseaseParams,
    s0: &Vector,
    c: &Vector,
) -> Result<BoundedDecline> {
    match_cost_uniform(target_cost, c)?;
    let z_at = |a: f64| -> Result<Vector> {
        let inst = to_stability_scaling(factors, &params.with_alpha(a), s0, c)?;
        let rows = inst.p.column_sum();
        Ok(Vector::from_fn(inst.n(), |i, _| (inst.d[i] / rows[i]).min(1.0)))
    };
    let cost_at = |a: f64| -> f64 {
        z_at(a)
            .and_then(|z| lockdown_cost(&z, c, CostKind::Inverse))
            .unwrap_or(f64::INFINITY)
    };
    let bound = params.alpha_bound();
    let mut lo = bound.min(0.0) - 1.0;
    let mut k = 0;
    while cost_at(lo) > target_cost {
        lo = bound - 2.0 * (bound - lo);
        k += 1;
        if k > 60 {
            return Err(Error::Infeasible("bounded-decline cost cannot be lowered to the target".into()));
        }
    }
    let mut hi = bound;
    let mut step = (bound - lo) * 1e-3;
    while !(cost_at(hi) >= target_cost) || !cost_at(hi).is_finite() {
        hi = bound - step;
        step *= 0.5;
        if cost_at(hi) >= target_cost && cost_at(hi).is_finite() {
            break;
        }
        if step < 1e-15 {
            return Err(Error::Infeasible("bounded-decline cost cannot reach the target".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cost_at(mid) < target_cost {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * (1.0 + hi.abs()) {
            break;
        }
    }
    // pick the endpoint closer in cost
    let a = if (cost_at(lo) - target_cost).abs() <= (cost_at(hi) - target_cost).abs() { lo } else { hi };
    let z = z_at(a)?;
    let cost = lockdown_cost(&z, c, CostKind::Inverse)?;
    Ok(BoundedDecline { z, alpha_prime: a, cost })
}

/// Everything needed to evaluate a policy by simulation.
#[derive(Debug, Clone)]
pub struct PolicyContext {
    pub factors: FlowFactors,
    pub params: DiseaseParams,
    pub state0: EpidemicState,
    pub populations: Vector,
    pub costs: Vector,
    pub sim: SimConfig,
}

impl PolicyContext {
    pub fn simulate(&self, z: &Vector) -> Result<Trajectory> {
        simulate(&self.state0, &self.factors, z, &self.params, &self.populations, &self.sim)
    }

    pub fn final_cumulative(&self, z: &Vector) -> Result<f64> {
        Ok(self.simulate(z)?.final_cumulative())
    }

    /// Spectral abscissa of the linearization at the initial state.
    pub fn lambda(&self, z: &Vector) -> Result<f64> {
        lambda_max_blocks(&assemble_linearization(&self.factors, z, &self.params, &self.state0.s)?)
    }

    pub fn cost(&self, z: &Vector) -> Result<f64> {
        lockdown_cost(z, &self.costs, CostKind::Inverse)
    }
}

/// Ordering imposed between the two lockdown levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintOrder {
    /// `z_inside < z_outside`.
    InsideStricter,
    /// `z_inside > z_outside`.
    OutsideStricter,
    Free,
}

impl ConstraintOrder {
    fn admits(self, z_in: f64, z_out: f64) -> bool {
        match self {
            Self::InsideStricter => z_in < z_out,
            Self::OutsideStricter => z_in > z_out,
            Self::Free => true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum TwoParamMode {
    /// Minimize final cumulative cases with cost at most `budget`.
    CostCapped { budget: f64 },
    /// Minimize cost with `lambda_max(M) <= -rate`.
    RateConstrained { rate: f64 },
}

#[derive(Debug, Clone)]
pub struct TwoParamResult {
    pub z_inside: f64,
    pub z_outside: f64,
    pub z: Vector,
    pub cost: f64,
    /// Final cumulative cases (cost-capped) or cost (rate-constrained).
    pub metric: f64,
    pub evaluated: usize,
}

fn two_level(inside: &[bool], z_in: f64, z_out: f64) -> Vector {
    Vector::from_iterator(inside.len(), inside.iter().map(|&b| if b { z_in } else { z_out }))
}

/// Best lockdown taking one value inside the partition and one outside.
///
/// `z_inside` runs over a grid of step 0.01, refined once at 0.001 around
/// the best point. For each `z_inside`, the outside level is the best
/// admissible one: the smallest `z_outside` within budget (cases grow
/// with activity), or the largest `z_outside` meeting the rate (cost falls
/// with activity), found in closed form or by bisection.
pub fn grid_search_two_param(
    inside: &[bool],
    order: ConstraintOrder,
    mode: TwoParamMode,
    ctx: &PolicyContext,
) -> Result<TwoParamResult> {
    let n = ctx.factors.n();
    if inside.len() != n {
        return Err(Error::Dimension { what: "partition", expected: n, found: inside.len() });
    }
    let c_in: f64 = (0..n).filter(|&i| inside[i]).map(|i| ctx.costs[i]).sum();
    let c_out: f64 = (0..n).filter(|&i| !inside[i]).map(|i| ctx.costs[i]).sum();
    let has_in = inside.iter().any(|&b| b);
    let has_out = inside.iter().any(|&b| !b);
    if !has_in {
        return Err(Error::invalid("partition", "inside group is empty; put the single group inside"));
    }
    let mut evaluated = 0usize;

    let mut eval = |z_in: f64| -> Result<Option<TwoParamResult>> {
        let z_out = if !has_out {
            z_in
        } else {
            match mode {
                TwoParamMode::CostCapped { budget } => {
                    let rem = budget - c_in * (1.0 / z_in - 1.0);
                    if rem < -1e-12 * budget.max(1.0) {
                        return Ok(None);
                    }
                    1.0 / (1.0 + rem.max(0.0) / c_out)
                }
                TwoParamMode::RateConstrained { rate } => {
                    let ok = |z_out: f64| -> Result<bool> { Ok(ctx.lambda(&two_level(inside, z_in, z_out))? <= -rate) };
                    if !ok(1e-9)? {
                        return Ok(None);
                    }
                    if ok(1.0)? {
                        1.0
                    } else {
                        let (mut lo, mut hi) = (1e-9, 1.0);
                        for _ in 0..60 {
                            let mid = 0.5 * (lo + hi);
                            if ok(mid)? {
                                lo = mid;
                            } else {
                                hi = mid;
                            }
                        }
                        lo
                    }
                }
            }
        };
        if has_out && !order.admits(z_in, z_out) {
            return Ok(None);
        }
        let z = two_level(inside, z_in, z_out);
        let cost = ctx.cost(&z)?;
        let metric = match mode {
            TwoParamMode::CostCapped { budget } => {
                if cost > budget * (1.0 + 1e-9) + 1e-12 {
                    return Ok(None);
                }
                evaluated += 1;
                ctx.final_cumulative(&z)?
            }
            TwoParamMode::RateConstrained { rate } => {
                if ctx.lambda(&z)? > -rate {
                    return Ok(None);
                }
                evaluated += 1;
                cost
            }
        };
        Ok(Some(TwoParamResult { z_inside: z_in, z_outside: z_out, z, cost, metric, evaluated: 0 }))
    };

    let mut best: Option<TwoParamResult> = None;
    let consider = |r: Option<TwoParamResult>, best: &mut Option<TwoParamResult>| {
        if let Some(r) = r {
            if best.as_ref().map_or(true, |b| r.metric < b.metric) {
                *best = Some(r);
            }
        }
    };
    for k in 1..=100 {
        let z_in = k as f64 * 0.01;
        let r = eval(z_in)?;
        consider(r, &mut best);
    }
    let coarse = best.as_ref().map(|b| b.z_inside).ok_or_else(|| Error::Infeasible("two-parameter grid has no feasible point".into()))?;
    for k in -9..=9 {
        let z_in = coarse + k as f64 * 0.001;
        if z_in <= 0.0 || z_in > 1.0 || k == 0 {
            continue;
        }
        let r = eval(z_in)?;
        consider(r, &mut best);
    }
    let mut best = best.expect("coarse grid produced a point");
    best.evaluated = evaluated;
    Ok(best)
}

/// `cost(ours) / cost(uniform)`; `None` when the uniform cost is zero.
pub fn efficiency(cost_ours: f64, cost_uniform: f64) -> Option<f64> {
    if cost_uniform == 0.0 || !cost_uniform.is_finite() {
        None
    } else {
        Some(cost_ours / cost_uniform)
    }
}
