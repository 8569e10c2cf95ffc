//! Synthetic networks and the perturbations used in robustness studies.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::balancing::{solve, SolveReport};
use crate::error::{Error, Result};
use crate::ingest::{build_scenario, initial_state_from_s0, InitialStateConstants, RawCountyTables, Scenario, TripRecord};
use crate::model::{build_flow_matrix, CostKind, DiseaseParams, FlowFactors, Mat, ModelFamily, NetworkData, TravelMatrix, Vector};
use crate::simulate::EpidemicState;
use crate::spectral::{calibrate_beta, pattern_of, strongly_connected};

/// Regeneration attempts before a disconnected graph is reported.
pub const MAX_ATTEMPTS: u64 = 100;

/// Independent 64-bit seed for sub-stream `k` of `seed` (splitmix64).
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A constant or a uniform range, sampled per node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueSpec {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
}

impl ValueSpec {
    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            ValueSpec::Constant(v) => v,
            ValueSpec::Uniform { lo, hi } => {
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    /// Points in the unit square joined within the radius giving `mean_degree`.
    Geometric { mean_degree: f64 },
    /// Preferential attachment, `m` edges per new node.
    BarabasiAlbert { m: usize },
    /// Edge `{i, j}` present with probability `max(p_i, p_j)`.
    CustomProb { p: Vec<f64> },
    /// Two-node city and suburb, cases 1 to 3.
    CitySuburb { case: u8 },
    ThreeNode,
    /// 62 locations around a five-location city core.
    MetroRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HotspotSpec {
    pub count: usize,
    #[serde(default = "hotspot_probability")]
    pub probability: f64,
}

fn hotspot_probability() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub graph: GraphKind,
    #[serde(default)]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_population")]
    pub population: ValueSpec,
    /// Home-stay rate `h'` in `(0, 1)`.
    #[serde(default = "default_home_stay")]
    pub home_stay: ValueSpec,
    #[serde(default = "default_s0")]
    pub s0: ValueSpec,
    #[serde(default)]
    pub hotspots: Option<HotspotSpec>,
}

fn default_population() -> ValueSpec {
    ValueSpec::Constant(4000.0)
}
fn default_home_stay() -> ValueSpec {
    ValueSpec::Constant(0.8)
}
fn default_s0() -> ValueSpec {
    ValueSpec::Uniform { lo: 0.8, hi: 0.9 }
}

impl SynthConfig {
    pub fn new(graph: GraphKind, n: usize, seed: u64) -> Self {
        Self {
            graph,
            n,
            seed,
            population: default_population(),
            home_stay: default_home_stay(),
            s0: default_s0(),
            hotspots: None,
        }
    }
}

/// A generated instance with the structure it was built from.
#[derive(Debug, Clone)]
pub struct SyntheticNetwork {
    pub scenario: Scenario,
    /// Undirected adjacency, for graph-based kinds.
    pub adjacency: Option<DMatrix<bool>>,
    pub hotspots: Vec<usize>,
    /// Raw tables, for kinds that model county data.
    pub raw: Option<RawCountyTables>,
}

impl SyntheticNetwork {
    pub fn degrees(&self) -> Option<Vec<usize>> {
        self.adjacency
            .as_ref()
            .map(|a| (0..a.nrows()).map(|i| (0..a.ncols()).filter(|&j| j != i && a[(i, j)]).count()).collect())
    }
}

pub fn generate(config: &SynthConfig) -> Result<SyntheticNetwork> {
    match &config.graph {
        GraphKind::CitySuburb { case } => city_suburb(*case),
        GraphKind::ThreeNode => three_node_network(),
        GraphKind::MetroRegion => metro_region(config.seed),
        _ => graph_network(config),
    }
}

fn ids(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("n{i:0width$}")).collect()
}

fn scenario_from(name: &str, net: NetworkData, state0: EpidemicState, group: Vec<bool>) -> Scenario {
    let n = net.n();
    Scenario {
        name: name.to_string(),
        as_of: String::new(),
        ids: ids(n),
        warnings: net.warnings().to_vec(),
        net,
        state0,
        densities: None,
        group,
        constants: InitialStateConstants::default(),
    }
}

/// Travel from an undirected graph: `tau_ii = 0.2 h'_i` and the remaining
/// `0.8 (1 - h'_i)` split evenly over neighbours.
pub fn tau_from_graph(adj: &DMatrix<bool>, home_stay: &[f64]) -> Result<TravelMatrix> {
    let n = adj.nrows();
    let mut tau = Mat::zeros(n, n);
    for i in 0..n {
        let deg = (0..n).filter(|&j| j != i && adj[(i, j)]).count();
        if deg == 0 {
            return Err(Error::NotStronglyConnected);
        }
        for j in 0..n {
            if j != i && adj[(i, j)] {
                tau[(i, j)] = 0.8 * (1.0 - home_stay[i]) / deg as f64;
            }
        }
        tau[(i, i)] = 0.2 * home_stay[i];
    }
    TravelMatrix::new(tau)
}

fn geometric(n: usize, mean_degree: f64, rng: &mut impl Rng) -> DMatrix<bool> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let r = (mean_degree / ((n.max(2) - 1) as f64 * std::f64::consts::PI)).sqrt();
    DMatrix::from_fn(n, n, |i, j| {
        let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
        i != j && dx * dx + dy * dy <= r * r
    })
}

fn barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> DMatrix<bool> {
    let mut adj = DMatrix::from_element(n, n, false);
    let core = (m + 1).min(n);
    let mut ends: Vec<usize> = Vec::new();
    for i in 0..core {
        for j in 0..i {
            adj[(i, j)] = true;
            adj[(j, i)] = true;
            ends.push(i);
            ends.push(j);
        }
    }
    for v in core..n {
        let mut chosen = Vec::with_capacity(m);
        while chosen.len() < m.min(v) {
            let u = ends[rng.random_range(0..ends.len())];
            if !chosen.contains(&u) {
                chosen.push(u);
            }
        }
        for u in chosen {
            adj[(u, v)] = true;
            adj[(v, u)] = true;
            ends.push(u);
            ends.push(v);
        }
    }
    adj
}

fn custom_prob(p: &[f64], rng: &mut impl Rng) -> DMatrix<bool> {
    let n = p.len();
    let mut adj = DMatrix::from_element(n, n, false);
    for i in 0..n {
        for j in 0..i {
            if rng.random::<f64>() < p[i].max(p[j]) {
                adj[(i, j)] = true;
                adj[(j, i)] = true;
            }
        }
    }
    adj
}

fn graph_network(cfg: &SynthConfig) -> Result<SyntheticNetwork> {
    let n = match &cfg.graph {
        GraphKind::CustomProb { p } => p.len(),
        _ => cfg.n,
    };
    if n < 2 {
        return Err(Error::invalid("n", "graph generators need at least two nodes"));
    }
    if let GraphKind::CustomProb { p } = &cfg.graph {
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("p", "edge probabilities must lie in [0, 1]"));
        }
    }
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, attempt));
        let mut adj = match &cfg.graph {
            GraphKind::Geometric { mean_degree } => geometric(n, *mean_degree, &mut rng),
            GraphKind::BarabasiAlbert { m } => {
                if *m == 0 || *m >= n {
                    return Err(Error::invalid("m", "must satisfy 0 < m < n"));
                }
                barabasi_albert(n, *m, &mut rng)
            }
            GraphKind::CustomProb { p } => custom_prob(p, &mut rng),
            _ => unreachable!("handled in generate"),
        };
        let mut hotspots = Vec::new();
        if let Some(h) = cfg.hotspots {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            hotspots = order[..h.count.min(n)].to_vec();
            hotspots.sort_unstable();
            for &hs in &hotspots {
                for j in 0..n {
                    if j != hs && rng.random::<f64>() < h.probability {
                        adj[(hs, j)] = true;
                        adj[(j, hs)] = true;
                    }
                }
            }
        }
        let pattern = DMatrix::from_fn(n, n, |i, j| i == j || adj[(i, j)]);
        if !strongly_connected(&pattern) {
            continue;
        }
        let hs: Vec<f64> = (0..n).map(|_| cfg.home_stay.sample(&mut rng)).collect();
        if hs.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::invalid("home_stay", "must lie in (0, 1)"));
        }
        let pops = Vector::from_fn(n, |_, _| cfg.population.sample(&mut rng));
        let s0 = Vector::from_fn(n, |_, _| cfg.s0.sample(&mut rng));
        let travel = tau_from_graph(&adj, &hs)?;
        let h = travel.implied_home_dwell();
        let net = NetworkData::new(pops.clone(), pops, travel, h)?;
        let state0 = initial_state_from_s0(&s0, &InitialStateConstants::default())?;
        let group = (0..n).map(|i| hotspots.contains(&i)).collect();
        return Ok(SyntheticNetwork {
            scenario: scenario_from("synthetic", net, state0, group),
            adjacency: Some(adj),
            hotspots,
            raw: None,
        });
    }
    Err(Error::Infeasible(format!("no strongly connected graph in {MAX_ATTEMPTS} attempts")))
}

/// Populations and initial susceptible fractions of the three cases.
pub fn city_suburb_case(case: u8) -> Result<([f64; 2], [f64; 2])> {
    match case {
        1 => Ok(([20_000.0, 2000.0], [0.7, 0.95])),
        2 => Ok(([200_000.0, 2000.0], [0.7, 0.95])),
        3 => Ok(([200_000.0, 2000.0], [0.95, 0.95])),
        _ => Err(Error::invalid("case", "city-suburb case must be 1, 2 or 3")),
    }
}

fn trips_network(k: &Mat, h: &[f64], pops: &[f64]) -> Result<NetworkData> {
    let travel = TravelMatrix::from_trips(k, h)?;
    let pops = Vector::from_row_slice(pops);
    NetworkData::new(pops.clone(), pops, travel, Vector::from_row_slice(h))
}

fn city_suburb(case: u8) -> Result<SyntheticNetwork> {
    let (pops, s0) = city_suburb_case(case)?;
    let k = Mat::from_row_slice(2, 2, &[8000.0, 200.0, 20.0, 850.0]);
    let net = trips_network(&k, &[800.0, 800.0], &pops)?;
    let state0 = initial_state_from_s0(&Vector::from_row_slice(&s0), &InitialStateConstants::default())?;
    let mut sc = scenario_from(&format!("city-suburb-{case}"), net, state0, vec![true, false]);
    sc.ids = vec!["city".into(), "suburb".into()];
    Ok(SyntheticNetwork { scenario: sc, adjacency: None, hotspots: Vec::new(), raw: None })
}

fn three_node_network() -> Result<SyntheticNetwork> {
    let k = Mat::from_row_slice(3, 3, &[8000.0, 1000.0, 2000.0, 2000.0, 8500.0, 0.0, 1500.0, 0.0, 8000.0]);
    let net = trips_network(&k, &[800.0; 3], &[200_000.0, 2000.0, 4000.0])?;
    let state0 = EpidemicState::new(
        Vector::from_row_slice(&[0.90, 0.92, 0.95]),
        Vector::from_row_slice(&[0.0825, 0.0660, 0.0412]),
        Vector::from_row_slice(&[0.0134, 0.0107, 0.0067]),
    )?;
    let mut sc = scenario_from("three-node", net, state0, vec![true, false, false]);
    sc.ids = vec!["A".into(), "B".into(), "C".into()];
    Ok(SyntheticNetwork { scenario: sc, adjacency: None, hotspots: Vec::new(), raw: None })
}

/// Number of locations in the metro-region fixture and its city core.
pub const METRO_N: usize = 62;
pub const METRO_CITY: usize = 5;
const METRO_RING: usize = 12;

/// Raw tables for a 62-location region: a dense five-location city,
/// a ring of twelve commuter locations and a rural remainder. Trips follow
/// a gravity law with distance cutoffs; infections are concentrated in the
/// city.
pub fn metro_region_tables(seed: u64) -> Result<RawCountyTables> {
    let n = METRO_N;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lognormal = Normal::new((60_000f64).ln(), 0.9).expect("valid normal");
    let mut pop: Vec<f64> = (0..n).map(|_| lognormal.sample(&mut rng).exp().clamp(5000.0, 900_000.0)).collect();
    pop[..METRO_CITY].copy_from_slice(&[1.42e6, 2.5e6, 1.6e6, 2.2e6, 0.47e6]);
    for p in pop.iter_mut() {
        *p = p.round();
    }
    let tier = |i: usize| if i < METRO_CITY { 0 } else if i < METRO_CITY + METRO_RING { 1 } else { 2 };
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let ang = rng.random_range(0.0..std::f64::consts::TAU);
            let rad = match tier(i) {
                0 => 0.02,
                1 => rng.random_range(0.05..0.15),
                _ => rng.random_range(0.15..0.6),
            };
            (rad * ang.cos(), rad * ang.sin())
        })
        .collect();
    let dist = |i: usize, j: usize| ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt();
    let (city_out, sub_out) = (0.15, 0.1);
    let mut k = Mat::zeros(n, n);
    for i in 0..n {
        let mut w: Vec<f64> = (0..n)
            .map(|j| if j == i { 0.0 } else { pop[j] / (0.03 + dist(i, j)).powi(2) })
            .collect();
        for j in 0..n {
            if j != i && dist(i, j) > 0.3 && rng.random::<f64>() < 0.7 {
                w[j] = 0.0;
            }
        }
        let mut row = vec![0.0; n];
        if i < METRO_CITY {
            let wc: f64 = (0..METRO_CITY).map(|j| w[j]).sum();
            let wo: f64 = (METRO_CITY..n).map(|j| w[j]).sum();
            for j in 0..n {
                row[j] = if j < METRO_CITY { 0.1 * w[j] / wc } else { city_out * w[j] / wo };
            }
        } else {
            let ws: f64 = w.iter().sum();
            for j in 0..n {
                row[j] = sub_out * w[j] / ws;
            }
        }
        row[i] = 1.0;
        for j in 0..n {
            k[(i, j)] = (row[j] * pop[i]).round();
        }
    }
    let h: Vec<f64> = (0..n).map(|_| (rng.random_range(760.0..860.0) * 10.0f64).round() / 10.0).collect();
    let emp: Vec<f64> = (0..n).map(|i| (pop[i] * rng.random_range(0.4..0.5)).round()).collect();
    let frac: Vec<f64> = (0..n)
        .map(|i| match tier(i) {
            0 => rng.random_range(0.006..0.012),
            1 => rng.random_range(0.002..0.005),
            _ => rng.random_range(0.0002..0.002),
        })
        .collect();
    let area: Vec<f64> = (0..n)
        .map(|i| if tier(i) == 0 { rng.random_range(20.0..110.0) } else { rng.random_range(300.0..2000.0) })
        .collect();
    let ids = metro_ids();
    let mut raw = RawCountyTables { ids: ids.clone(), ..Default::default() };
    let mut density = HashMap::new();
    for i in 0..n {
        let id = &ids[i];
        let cases = (pop[i] * frac[i]).round();
        raw.population.insert(id.clone(), pop[i]);
        raw.employment.insert(id.clone(), emp[i]);
        raw.home_dwell.insert(id.clone(), h[i]);
        raw.cases.insert(id.clone(), cases);
        raw.deaths.insert(id.clone(), (0.03 * cases).floor());
        density.insert(id.clone(), (pop[i] / area[i]).round());
        for j in 0..n {
            if k[(i, j)] > 0.0 {
                raw.trips.push(TripRecord { origin: id.clone(), dest: ids[j].clone(), count: k[(i, j)] });
            }
        }
    }
    raw.density = Some(density);
    Ok(raw)
}

/// Location ids of the metro-region fixture; the first five are the city.
pub fn metro_ids() -> Vec<String> {
    (0..METRO_N)
        .map(|i| if i < METRO_CITY { format!("city{}", i + 1) } else { format!("county{:02}", i - METRO_CITY + 1) })
        .collect()
}

pub fn metro_city_ids() -> Vec<String> {
    metro_ids()[..METRO_CITY].to_vec()
}

fn metro_region(seed: u64) -> Result<SyntheticNetwork> {
    let raw = metro_region_tables(seed)?;
    let sc = build_scenario("metro-region", "2020-04-01", &raw, &metro_city_ids(), &InitialStateConstants::default())?;
    if !strongly_connected(&pattern_of(sc.net.tau())) {
        return Err(Error::NotStronglyConnected);
    }
    Ok(SyntheticNetwork { scenario: sc, adjacency: None, hotspots: Vec::new(), raw: Some(raw) })
}

/// Seed of the bundled metro-region fixture.
pub const METRO_SEED: u64 = 7;

/// Multiplicative Gaussian noise on every entry of `tau`, rows rescaled to
/// their original sums.
pub fn perturb_noise(net: &NetworkData, theta: f64, seed: u64) -> Result<NetworkData> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::invalid("theta", "must be finite and >= 0"));
    }
    if theta == 0.0 {
        return Ok(net.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tau = net.tau();
    let n = tau.nrows();
    let sd = theta.sqrt();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let t = tau[(i, j)];
            if t > 0.0 {
                let g: f64 = rng.sample(rand_distr::StandardNormal);
                out[(i, j)] = (t + sd * t * g).max(0.0);
            }
        }
    }
    rescale_rows(net, out)
}

fn rescale_rows(net: &NetworkData, mut out: Mat) -> Result<NetworkData> {
    let tau = net.tau();
    for i in 0..tau.nrows() {
        let target: f64 = tau.row(i).sum();
        let sum: f64 = out.row(i).sum();
        if !(sum > 0.0) {
            return Err(Error::RowCollapse(i));
        }
        out.row_mut(i).iter_mut().for_each(|v| *v *= target / sum);
    }
    net.with_travel(TravelMatrix::new(out)?)
}

/// Zeroes `round(p m_i)` of the `m_i` positive off-diagonal entries of each
/// row, keeping the diagonal, and rescales rows to their original sums.
pub fn perturb_dropout(net: &NetworkData, p: f64, seed: u64) -> Result<NetworkData> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid("p", "must lie in [0, 1)"));
    }
    if p == 0.0 {
        return Ok(net.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = net.tau().clone();
    let n = out.nrows();
    for i in 0..n {
        let mut cols: Vec<usize> = (0..n).filter(|&j| j != i && out[(i, j)] > 0.0).collect();
        let drop = (p * cols.len() as f64).round() as usize;
        cols.shuffle(&mut rng);
        for &j in &cols[..drop] {
            out[(i, j)] = 0.0;
        }
    }
    rescale_rows(net, out)
}

/// Per-location transmission scaled by `(density / max density)^h`.
#[derive(Debug, Clone)]
pub struct DensityScaled {
    /// `s0 * (p / p_max)^h`; replaces `s0` in the linearization and the solvers.
    pub weights: Vector,
    pub params: DiseaseParams,
    pub beta_s: Vector,
    pub beta_a: Vector,
}

/// Calibrates `beta_l = k p_l^h` so the initial growth rate equals `target`.
///
/// The factor `p_l^h` enters exactly like `s0` (as `diag(p^h) diag(s0) A`),
/// so it is folded into the susceptible weights after normalizing by its
/// maximum; the constant goes into `k`.
pub fn density_scaled_beta(
    factors: &FlowFactors,
    densities: &Vector,
    h: f64,
    template: &DiseaseParams,
    s0: &Vector,
    target: f64,
) -> Result<DensityScaled> {
    if densities.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::invalid("densities", "must be positive"));
    }
    if !(h >= 0.0) {
        return Err(Error::invalid("h", "must be >= 0"));
    }
    if template.family == ModelFamily::Sis {
        return Err(Error::FamilyMismatch("density scaling applies to SIR and COVID"));
    }
    let pmax = densities.max();
    let scale = densities.map(|d| (d / pmax).powf(h));
    let weights = s0.component_mul(&scale);
    let params = calibrate_beta(factors, template, &weights, target)?;
    Ok(DensityScaled {
        beta_s: &scale * params.beta_s,
        beta_a: &scale * params.beta_a,
        weights,
        params,
    })
}

/// Symptomatic travel at `kappa` times the asymptomatic rate, expressed as
/// `alpha_hat / kappa`. The result still needs calibration of `beta_s`.
pub fn symptomatic_activity_scaling(params: &DiseaseParams, kappa: f64) -> Result<DiseaseParams> {
    if params.family != ModelFamily::Covid {
        return Err(Error::FamilyMismatch("activity scaling applies to the COVID family"));
    }
    if kappa == 0.0 {
        return Err(Error::FamilyMismatch("kappa = 0 removes symptomatic transmission; use the SIR family"));
    }
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid("kappa", "must lie in (0, 1]"));
    }
    let mut p = *params;
    p.alpha_hat /= kappa;
    p.beta_a = p.alpha_hat * p.beta_s;
    Ok(p)
}

/// Attribute shuffled by [`random_permutation_study`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PermField {
    /// Relabels the travel network while every other attribute stays put.
    Degree,
    HomeStay,
    Population,
    Employment,
    S0,
}

impl FromStr for PermField {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(Self::Degree),
            "home_stay" => Ok(Self::HomeStay),
            "population" => Ok(Self::Population),
            "employment" => Ok(Self::Employment),
            "s0" => Ok(Self::S0),
            o => Err(Error::invalid("field", format!("unknown field `{o}`"))),
        }
    }
}

impl fmt::Display for PermField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Degree => "degree",
            Self::HomeStay => "home_stay",
            Self::Population => "population",
            Self::Employment => "employment",
            Self::S0 => "s0",
        })
    }
}

/// Network plus the disease setup needed to re-solve after a change.
#[derive(Debug, Clone)]
pub struct StudyInput {
    pub net: NetworkData,
    pub s0: Vector,
    /// Uncalibrated parameters carrying the target decay rate.
    pub template: DiseaseParams,
    pub target_growth: f64,
}

impl StudyInput {
    /// Calibrates on `net`/`s0` and solves with inverse costs.
    pub fn solve_on(&self, net: &NetworkData, s0: &Vector) -> Result<SolveReport> {
        let f = build_flow_matrix(net)?;
        let p = calibrate_beta(&f, &self.template, s0, self.target_growth)?;
        solve(&f, &p, s0, net.cost_coeffs(), CostKind::Inverse)
    }
}

pub const HIST_BINS: usize = 20;

#[derive(Debug, Clone)]
pub struct PermutationSummary {
    pub field: PermField,
    pub baseline: Vector,
    pub runs: Vec<Vector>,
    /// Mean fraction of `z*` per bin of `[0, 1]`.
    pub histogram: Vec<f64>,
    /// Mean earth mover's distance between each run and the baseline.
    pub mean_emd: f64,
}

/// Earth mover's distance between two equal-size samples on the line.
pub fn emd_1d(a: &Vector, b: &Vector) -> f64 {
    let mut x: Vec<f64> = a.iter().copied().collect();
    let mut y: Vec<f64> = b.iter().copied().collect();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum::<f64>() / x.len() as f64
}

fn permute_vec(v: &Vector, perm: &[usize]) -> Vector {
    Vector::from_fn(v.len(), |i, _| v[perm[i]])
}

/// Applies a permutation of `field` to the input.
pub fn permute_field(input: &StudyInput, field: PermField, perm: &[usize]) -> Result<(NetworkData, Vector)> {
    let net = &input.net;
    let n = net.n();
    let tau = net.tau();
    let sums: Vec<f64> = (0..n).map(|i| tau.row(i).sum()).collect();
    match field {
        PermField::Degree => {
            let mut t = Mat::from_fn(n, n, |i, j| tau[(perm[i], perm[j])]);
            for i in 0..n {
                let s: f64 = t.row(i).sum();
                t.row_mut(i).iter_mut().for_each(|v| *v *= sums[i] / s);
            }
            Ok((net.with_travel(TravelMatrix::new(t)?)?, input.s0.clone()))
        }
        PermField::HomeStay => {
            let mut t = tau.clone();
            for i in 0..n {
                let s = sums[i];
                t.row_mut(i).iter_mut().for_each(|v| *v *= sums[perm[i]] / s);
            }
            Ok((net.with_travel(TravelMatrix::new(t)?)?, input.s0.clone()))
        }
        PermField::Population => Ok((net.with_populations(permute_vec(net.populations(), perm))?, input.s0.clone())),
        PermField::Employment => {
            let e = permute_vec(net.employment(), perm);
            let e_max = e.max();
            let rebuilt = NetworkData::from_parts(net.populations().clone(), e.clone(), e / e_max, net.travel().clone(), net.home_dwell().clone())?;
            Ok((rebuilt, input.s0.clone()))
        }
        PermField::S0 => Ok((net.clone(), permute_vec(&input.s0, perm))),
    }
}

/// Re-solves after `repeats` random permutations of one attribute.
pub fn random_permutation_study(input: &StudyInput, field: PermField, repeats: usize, seed: u64) -> Result<PermutationSummary> {
    let n = input.net.n();
    let baseline = input.solve_on(&input.net, &input.s0)?.z_star;
    let mut runs = Vec::with_capacity(repeats);
    let mut histogram = vec![0.0; HIST_BINS];
    let mut emd = 0.0;
    for r in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let (net, s0) = permute_field(input, field, &perm)?;
        let z = input.solve_on(&net, &s0)?.z_star;
        for &v in z.iter() {
            let b = ((v * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            histogram[b] += 1.0 / (n * repeats.max(1)) as f64;
        }
        emd += emd_1d(&z, &baseline);
        runs.push(z);
    }
    Ok(PermutationSummary {
        field,
        baseline,
        runs,
        histogram,
        mean_emd: if repeats > 0 { emd / repeats as f64 } else { 0.0 },
    })
}
