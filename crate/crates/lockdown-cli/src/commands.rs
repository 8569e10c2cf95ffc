use std::path::PathBuf;

use clap::Args;
use lockdown::balancing::{decay_matched_uniform, solve, to_stability_scaling, SolveReport};
use lockdown::ingest::{load_manifest, write_bundle, write_raw, Scenario};
use lockdown::model::{apply_lockdown, lockdown_cost, CostKind, DiseaseParams, ModelFamily, NetworkData, Vector};
use lockdown::simulate::{simulate, SimConfig, Trajectory};
use lockdown::spectral::{alpha_to_r, calibrate_beta, r_to_alpha, reproduction_number};
use lockdown::synth::{
    density_scaled_beta, derive_seed, emd_1d, generate, perturb_dropout, perturb_noise, random_permutation_study,
    symptomatic_activity_scaling, PermField, StudyInput, SynthConfig, HIST_BINS,
};
use lockdown::Error;
use rayon::prelude::*;

use crate::failure::Failure;
use crate::output::{num, OutDir, RunMeta, Table};
use crate::policy::{parse_list, PolicySpec, Resolver};
use crate::setup::{load_params, params_toml, ModelArgs, Setup};

fn b(v: bool) -> String {
    v.to_string()
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    /// Manifest TOML naming the input tables.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn build(a: &BuildArgs, meta: RunMeta) -> Result<(), Failure> {
    let sc = load_manifest(&a.manifest)?;
    write_bundle(&a.out, &sc)?;
    for w in &sc.warnings {
        eprintln!("warning: {w}");
    }
    OutDir::create(&a.out)?.metadata(&meta)?;
    println!("bundle `{}` with {} locations written to {}", sc.name, sc.n(), a.out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn calibrate(a: &CalibrateArgs, meta: RunMeta) -> Result<(), Failure> {
    if a.model.target_growth.is_none() {
        return Err(Failure::usage("invalid input for `target-growth`: calibrate needs --target-growth"));
    }
    let s = a.model.load()?;
    let out = OutDir::create(&a.out)?;
    let body = params_toml(&s.params)?;
    out.text("params.toml", &body)?;
    out.metadata(&meta)?;
    print!("{body}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// inverse, power:k or capped:C.
    #[arg(long, default_value = "inverse")]
    pub cost: CostKind,
    #[arg(long)]
    pub out: PathBuf,
}

fn report_summary(s: &Setup, r: &SolveReport) -> Result<Table, Failure> {
    let sc = &s.scenario;
    let p = &s.params;
    let inst = to_stability_scaling(&s.factors, p, sc.s0(), sc.net.cost_coeffs())?;
    let zu = decay_matched_uniform(&inst)?;
    let uniform_cost = lockdown_cost(&Vector::from_element(sc.n(), zu), sc.net.cost_coeffs(), r.cost_kind)?;
    let mut t = Table::new(["key", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("scenario", sc.name.clone()),
        ("family", p.family.to_string()),
        ("alpha", num(p.alpha)),
        ("beta_s", num(p.beta_s)),
        ("beta_a", num(p.beta_a)),
        ("zeta", num(p.zeta)),
        ("cost_kind", r.cost_kind.to_string()),
        ("cost", num(r.cost)),
        ("lambda_achieved", num(r.lambda_achieved)),
        ("certificate_gap", num(r.lambda_achieved + p.alpha)),
        ("method", r.method.to_string()),
        ("case", r.case.map(|c| c.to_string()).unwrap_or_default()),
        ("high_spread_holds", b(r.high_spread_holds)),
        ("unconstrained_exceeded_one", b(r.unconstrained_exceeded_one)),
        ("imbalance", num(r.imbalance)),
        ("gradient_norm", num(r.gradient_norm)),
        ("iterations", r.iterations.to_string()),
        ("d_ratio", num(r.d_ratio)),
        ("clamped", b(r.clamped)),
        ("nonconvex_objective", b(r.nonconvex_objective)),
        ("converged", b(r.converged)),
        ("uniform_z", num(zu)),
        ("uniform_cost", num(uniform_cost)),
        ("efficiency", num(r.cost / uniform_cost)),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    Ok(t)
}

pub fn solve_cmd(a: &SolveArgs, meta: RunMeta) -> Result<(), Failure> {
    let s = a.model.load()?;
    s.require_alpha(&a.model)?;
    let sc = &s.scenario;
    let r = solve(&s.factors, &s.params, sc.s0(), sc.net.cost_coeffs(), a.cost)?;
    let mut z = Table::new(["id", "group", "z_star"]);
    for i in 0..sc.n() {
        z.push(vec![sc.ids[i].clone(), b(sc.group[i]), num(r.z_star[i])]);
    }
    let summary = report_summary(&s, &r)?;
    let out = OutDir::create(&a.out)?;
    if !r.converged {
        out.partial("solve.csv", &z)?;
        out.partial("solve_summary.csv", &summary)?;
        return Err(Failure::numerical("solver did not converge; partial results written with .partial suffix"));
    }
    out.table("solve.csv", &z)?;
    out.table("solve_summary.csv", &summary)?;
    out.metadata(&meta)?;
    println!("cost {}  lambda {}  method {}", num(r.cost), num(r.lambda_achieved), r.method);
    for i in 0..sc.n().min(20) {
        println!("{:>12} {}", sc.ids[i], num(r.z_star[i]));
    }
    if sc.n() > 20 {
        println!("... {} more in {}", sc.n() - 20, out.path("solve.csv").display());
    }
    Ok(())
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SimArgs {
    #[arg(long, default_value_t = 300.0)]
    pub days: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sample_every: f64,
    #[arg(long, default_value_t = lockdown::simulate::DEFAULT_DT)]
    pub dt: f64,
}

impl SimArgs {
    pub fn config(&self) -> Result<SimConfig, Failure> {
        if !(self.days > 0.0 && self.sample_every > 0.0 && self.dt > 0.0) {
            return Err(Failure::usage("invalid input for `days`: days, sample-every and dt must be positive"));
        }
        Ok(SimConfig { horizon: self.days, sample_every: self.sample_every, dt: self.dt })
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// ours, none, uniform[:z], random:seed, bounded, two_param[:ids][:order], file:path.
    #[arg(long, default_value = "none")]
    pub policy: String,
    #[command(flatten)]
    pub sim: SimArgs,
    /// Cost for cost-matched policies; defaults to the optimal policy's cost.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub random_width: f64,
    /// Also write per-location states.
    #[arg(long)]
    pub per_location: bool,
    #[arg(long)]
    pub out: PathBuf,
}

fn trajectory_tables(sc: &Scenario, tr: &Trajectory, with_nodes: bool) -> (Table, Option<Table>) {
    let rho = sc.constants.reporting_rate;
    let mut t = Table::new(["t", "active", "cumulative", "reported_cumulative"]);
    for k in 0..tr.times.len() {
        t.push(vec![num(tr.times[k]), num(tr.active[k]), num(tr.cumulative[k]), num(tr.cumulative[k] * rho)]);
    }
    let nodes = with_nodes.then(|| {
        let mut t = Table::new(["t", "id", "s", "x_a", "x_s", "cum"]);
        for (k, st) in tr.states.iter().enumerate() {
            for i in 0..sc.n() {
                t.push(vec![num(tr.times[k]), sc.ids[i].clone(), num(st.s[i]), num(st.x_a[i]), num(st.x_s[i]), num(st.cum[i])]);
            }
        }
        t
    });
    (t, nodes)
}

pub fn simulate_cmd(a: &SimulateArgs, mut meta: RunMeta) -> Result<(), Failure> {
    let spec: PolicySpec = a.policy.parse()?;
    let s = a.model.load()?;
    let cfg = a.sim.config()?;
    let res = Resolver::new(&s, &[&spec], a.budget, a.random_width, cfg)?;
    let z = res.resolve(&spec)?;
    if let PolicySpec::Random(seed) = spec {
        meta.seeds.push(seed);
    }
    let sc = &s.scenario;
    let tr = simulate(&sc.state0, &s.factors, &z, &s.params, sc.net.populations(), &cfg)?;
    let (traj, nodes) = trajectory_tables(sc, &tr, a.per_location);
    let mut pol = Table::new(["id", "z"]);
    for i in 0..sc.n() {
        pol.push(vec![sc.ids[i].clone(), num(z[i])]);
    }
    let out = OutDir::create(&a.out)?;
    out.table("trajectory.csv", &traj)?;
    if let Some(n) = nodes {
        out.table("trajectory_locations.csv", &n)?;
    }
    out.table("policy.csv", &pol)?;
    out.metadata(&meta)?;
    println!(
        "policy {}  cost {}  final cumulative {}  final active {}",
        a.policy,
        num(res.cost(&z)?),
        num(tr.final_cumulative()),
        num(*tr.active.last().expect("samples"))
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "ours,none,uniform,random:0,bounded,two_param")]
    pub policies: String,
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, default_value_t = 0.2)]
    pub random_width: f64,
    #[arg(long)]
    pub out: PathBuf,
}

struct PolicyRun {
    name: String,
    z: Vector,
    cost: f64,
    lambda: f64,
    traj: Trajectory,
}

pub fn compare(a: &CompareArgs, mut meta: RunMeta) -> Result<(), Failure> {
    let specs = parse_list(&a.policies)?;
    if specs.is_empty() {
        return Err(Failure::usage("invalid input for `policies`: empty list"));
    }
    let s = a.model.load()?;
    s.require_alpha(&a.model)?;
    let cfg = a.sim.config()?;
    let refs: Vec<&PolicySpec> = specs.iter().map(|(_, p)| p).collect();
    let res = Resolver::new(&s, &refs, a.budget, a.random_width, cfg)?;
    meta.seeds = specs.iter().filter_map(|(_, p)| if let PolicySpec::Random(k) = p { Some(*k) } else { None }).collect();
    let sc = &s.scenario;
    let ctx = res.context();
    let runs: Vec<Result<PolicyRun, Failure>> = specs
        .par_iter()
        .map(|(name, spec)| {
            let z = res.resolve(spec)?;
            let traj = ctx.simulate(&z)?;
            let m = lockdown::model::assemble_linearization(&s.factors, &z, &s.params, sc.s0())?;
            let lambda = lockdown::spectral::lambda_max_blocks(&m)?;
            Ok(PolicyRun { name: name.clone(), cost: res.cost(&z)?, z, lambda, traj })
        })
        .collect();
    let out = OutDir::create(&a.out)?;
    let mut summary = Table::new(["policy", "cost", "lambda_max", "final_cumulative", "final_active", "peak_active"]);
    let mut curves = Table::new(["policy", "t", "active", "cumulative"]);
    let mut zt = Table::new(std::iter::once("id".to_string()).chain(specs.iter().map(|(n, _)| n.clone())));
    let mut first_err = None;
    let mut ok = Vec::new();
    for r in runs {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    for r in &ok {
        let peak = r.traj.active.iter().cloned().fold(0.0, f64::max);
        summary.push(vec![
            r.name.clone(),
            num(r.cost),
            num(r.lambda),
            num(r.traj.final_cumulative()),
            num(*r.traj.active.last().expect("samples")),
            num(peak),
        ]);
        for k in 0..r.traj.times.len() {
            curves.push(vec![r.name.clone(), num(r.traj.times[k]), num(r.traj.active[k]), num(r.traj.cumulative[k])]);
        }
    }
    if let Some(e) = first_err {
        out.partial("compare.csv", &summary)?;
        out.partial("compare_curves.csv", &curves)?;
        return Err(e);
    }
    for i in 0..sc.n() {
        zt.push(std::iter::once(sc.ids[i].clone()).chain(ok.iter().map(|r| num(r.z[i]))).collect());
    }
    out.table("compare.csv", &summary)?;
    out.table("compare_curves.csv", &curves)?;
    out.table("compare_z.csv", &zt)?;
    out.metadata(&meta)?;
    println!("{:<24} {:>14} {:>14} {:>16}", "policy", "cost", "lambda_max", "final_cumulative");
    for r in &ok {
        println!("{:<24} {:>14} {:>14} {:>16}", r.name, num(r.cost), num(r.lambda), num(r.traj.final_cumulative()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    /// Recovery rate; sets gamma and r_a and keeps r_s / r_a.
    Gamma,
    /// Ratio r_s / r_a.
    GammaHat,
    Epsilon,
    AlphaHat,
    /// Initial growth rate used for calibration.
    Growth,
    Alpha,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub vary: SweepParam,
    /// start:stop:steps, endpoints included.
    #[arg(long, allow_hyphen_values = true)]
    pub range: String,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn parse_range(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::usage(format!("invalid input for `range`: `{s}` is not start:stop:steps"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let k: usize = parts[2].parse().map_err(|_| bad())?;
    if k == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if k == 1 {
        return Ok(vec![a]);
    }
    Ok((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect())
}

fn vary(template: &DiseaseParams, growth: f64, which: SweepParam, v: f64) -> (DiseaseParams, f64) {
    let mut p = *template;
    let mut g = growth;
    match which {
        SweepParam::Gamma => {
            let ratio = if p.r_a > 0.0 { p.r_s / p.r_a } else { 1.0 };
            p.gamma = v;
            p.r_a = v;
            if p.family == ModelFamily::Covid {
                p.r_s = ratio * v;
            }
        }
        SweepParam::GammaHat => p.r_s = v * p.r_a,
        SweepParam::Epsilon => p.epsilon = v,
        SweepParam::AlphaHat => p.alpha_hat = v,
        SweepParam::Growth => g = v,
        SweepParam::Alpha => p.alpha = v,
    }
    (p, g)
}

struct SweepPoint {
    value: f64,
    report: SolveReport,
    uniform_z: f64,
    uniform_cost: f64,
}

pub fn sweep(a: &SweepArgs, meta: RunMeta) -> Result<(), Failure> {
    let growth = a
        .model
        .target_growth
        .ok_or_else(|| Failure::usage("invalid input for `target-growth`: sweep recalibrates and needs --target-growth"))?;
    let values = parse_range(&a.range)?;
    let s = a.model.load()?;
    let sc = &s.scenario;
    let c = sc.net.cost_coeffs();
    let points: Vec<Result<SweepPoint, Failure>> = values
        .par_iter()
        .map(|&v| {
            let (t, g) = vary(&s.template, growth, a.vary, v);
            t.validate()?;
            let p = calibrate_beta(&s.factors, &t, sc.s0(), g)?;
            p.check_alpha(p.alpha)?;
            let report = solve(&s.factors, &p, sc.s0(), c, CostKind::Inverse)?;
            let inst = to_stability_scaling(&s.factors, &p, sc.s0(), c)?;
            let uniform_z = decay_matched_uniform(&inst)?;
            let uniform_cost = lockdown_cost(&Vector::from_element(sc.n(), uniform_z), c, CostKind::Inverse)?;
            Ok(SweepPoint { value: v, report, uniform_z, uniform_cost })
        })
        .collect();
    let mut t = Table::new(["value", "cost", "uniform_z", "uniform_cost", "efficiency", "min_z", "max_z", "mean_z", "group_mean_z", "rest_mean_z", "lambda_achieved"]);
    let mut zt = Table::new(["value", "id", "z_star"]);
    let mut first_err = None;
    for p in points {
        match p {
            Ok(p) => {
                let z = &p.report.z_star;
                let (g, r) = sc.group_means(z);
                t.push(vec![
                    num(p.value),
                    num(p.report.cost),
                    num(p.uniform_z),
                    num(p.uniform_cost),
                    num(p.report.cost / p.uniform_cost),
                    num(z.min()),
                    num(z.max()),
                    num(z.mean()),
                    num(g),
                    num(r),
                    num(p.report.lambda_achieved),
                ]);
                for i in 0..sc.n() {
                    zt.push(vec![num(p.value), sc.ids[i].clone(), num(z[i])]);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let out = OutDir::create(&a.out)?;
    if let Some(e) = first_err {
        out.partial("sweep.csv", &t)?;
        out.partial("sweep_z.csv", &zt)?;
        return Err(e);
    }
    out.table("sweep.csv", &t)?;
    out.table("sweep_z.csv", &zt)?;
    out.metadata(&meta)?;
    println!("{} points written to {}", values.len(), out.path("sweep.csv").display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Generator configuration TOML.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn synth(a: &SynthArgs, mut meta: RunMeta) -> Result<(), Failure> {
    let body = std::fs::read_to_string(&a.config).map_err(|e| Failure::io(&a.config, e))?;
    let cfg: SynthConfig = toml::from_str(&body).map_err(|e| Failure::usage(format!("invalid input in {}: {e}", a.config.display())))?;
    meta.seeds.push(cfg.seed);
    let g = generate(&cfg)?;
    write_bundle(&a.out, &g.scenario)?;
    let out = OutDir::create(&a.out)?;
    if let Some(raw) = &g.raw {
        let group: Vec<String> = (0..g.scenario.n()).filter(|&i| g.scenario.group[i]).map(|i| g.scenario.ids[i].clone()).collect();
        write_raw(&a.out.join("raw"), &g.scenario.name, &g.scenario.as_of, raw, &group)?;
    }
    if let Some(deg) = g.degrees() {
        let mut t = Table::new(["id", "degree", "hotspot"]);
        for i in 0..deg.len() {
            t.push(vec![g.scenario.ids[i].clone(), deg[i].to_string(), b(g.hotspots.contains(&i))]);
        }
        out.table("degrees.csv", &t)?;
    }
    out.metadata(&meta)?;
    println!("synthetic bundle with {} locations written to {}", g.scenario.n(), a.out.display());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbKind {
    Noise(f64),
    Dropout(f64),
    Density(f64),
    Activity(f64),
    Permute(PermField),
}

impl std::str::FromStr for PerturbKind {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        let bad = || Failure::usage(format!("invalid input for `kind`: `{s}` (noise:theta, dropout:p, density:h, activity:kappa, permute:field)"));
        let (k, v) = s.split_once(':').ok_or_else(bad)?;
        if k == "permute" {
            return Ok(Self::Permute(v.parse()?));
        }
        let x: f64 = v.parse().map_err(|_| bad())?;
        Ok(match k {
            "noise" => Self::Noise(x),
            "dropout" => Self::Dropout(x),
            "density" => Self::Density(x),
            "activity" => Self::Activity(x),
            _ => return Err(bad()),
        })
    }
}

#[derive(Args, Debug)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// noise:theta, dropout:p, density:h, activity:kappa or permute:field.
    #[arg(long)]
    pub kind: PerturbKind,
    #[arg(long, default_value_t = 50)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Regeneration attempts when a perturbed network breaks connectivity.
pub const PERTURB_ATTEMPTS: u64 = 100;

struct PerturbRun {
    run: usize,
    seed: u64,
    retries: u64,
    report: SolveReport,
}

fn broken_instance(e: &Error) -> bool {
    matches!(e, Error::RowCollapse(_) | Error::NotStronglyConnected | Error::DegenerateLocation(_))
}

/// Solves on a perturbed copy with transmission fixed at the baseline.
fn perturbed_run(s: &Setup, kind: PerturbKind, run: usize, seed: u64) -> Result<PerturbRun, Failure> {
    let sc = &s.scenario;
    let base = derive_seed(seed, run as u64);
    for attempt in 0..PERTURB_ATTEMPTS {
        let k = if attempt == 0 { base } else { derive_seed(base, attempt) };
        let net: lockdown::Result<NetworkData> = match kind {
            PerturbKind::Noise(t) => perturb_noise(&sc.net, t, k),
            PerturbKind::Dropout(p) => perturb_dropout(&sc.net, p, k),
            _ => unreachable!("single-run kinds handled separately"),
        };
        let attempt_result = net.and_then(|net| {
            let f = lockdown::model::build_flow_matrix(&net)?;
            solve(&f, &s.params, sc.s0(), net.cost_coeffs(), CostKind::Inverse)
        });
        match attempt_result {
            Ok(report) => return Ok(PerturbRun { run, seed: k, retries: attempt, report }),
            Err(e) if broken_instance(&e) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(Failure::numerical(format!("run {run}: no connected perturbation in {PERTURB_ATTEMPTS} attempts")))
}

pub fn perturb(a: &PerturbArgs, mut meta: RunMeta) -> Result<(), Failure> {
    let s = a.model.load()?;
    s.require_alpha(&a.model)?;
    let sc = &s.scenario;
    let out = OutDir::create(&a.out)?;
    meta.seeds.push(a.seed);
    let mut summary = Table::new(["run", "seed", "retries", "cost", "group_mean_z", "rest_mean_z", "min_z", "max_z"]);
    let mut zt = Table::new(["run", "id", "z_star"]);
    let push = |summary: &mut Table, zt: &mut Table, r: &PerturbRun| {
        let z = &r.report.z_star;
        let (g, rest) = sc.group_means(z);
        summary.push(vec![r.run.to_string(), r.seed.to_string(), r.retries.to_string(), num(r.report.cost), num(g), num(rest), num(z.min()), num(z.max())]);
        for i in 0..sc.n() {
            zt.push(vec![r.run.to_string(), sc.ids[i].clone(), num(z[i])]);
        }
    };
    match a.kind {
        PerturbKind::Noise(_) | PerturbKind::Dropout(_) => {
            let runs: Vec<Result<PerturbRun, Failure>> = (0..a.repeats).into_par_iter().map(|r| perturbed_run(&s, a.kind, r, a.seed)).collect();
            let mut first_err = None;
            for r in runs {
                match r {
                    Ok(r) => push(&mut summary, &mut zt, &r),
                    Err(e) => {
                        first_err.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_err {
                out.partial("perturb.csv", &summary)?;
                out.partial("perturb_z.csv", &zt)?;
                return Err(e);
            }
        }
        PerturbKind::Density(h) => {
            let dens = sc
                .densities
                .as_ref()
                .ok_or_else(|| Failure::usage("invalid input for `kind`: the bundle has no density column"))?;
            let growth = a.model.target_growth.ok_or_else(|| Failure::usage("invalid input for `target-growth`: density scaling recalibrates"))?;
            let d = density_scaled_beta(&s.factors, dens, h, &s.template, sc.s0(), growth)?;
            let report = solve(&s.factors, &d.params, &d.weights, sc.net.cost_coeffs(), CostKind::Inverse)?;
            push(&mut summary, &mut zt, &PerturbRun { run: 0, seed: a.seed, retries: 0, report });
        }
        PerturbKind::Activity(kappa) => {
            let growth = a.model.target_growth.ok_or_else(|| Failure::usage("invalid input for `target-growth`: activity scaling recalibrates"))?;
            let t = symptomatic_activity_scaling(&s.template, kappa)?;
            let p = calibrate_beta(&s.factors, &t, sc.s0(), growth)?;
            let report = solve(&s.factors, &p, sc.s0(), sc.net.cost_coeffs(), CostKind::Inverse)?;
            push(&mut summary, &mut zt, &PerturbRun { run: 0, seed: a.seed, retries: 0, report });
        }
        PerturbKind::Permute(field) => {
            let growth = a.model.target_growth.ok_or_else(|| Failure::usage("invalid input for `target-growth`: permutation runs recalibrate"))?;
            let input = StudyInput { net: sc.net.clone(), s0: sc.s0().clone(), template: s.template, target_growth: growth };
            let st = random_permutation_study(&input, field, a.repeats, a.seed)?;
            let mut hist = Table::new(["bin_lo", "bin_hi", "fraction", "baseline_fraction"]);
            let mut base = vec![0.0; HIST_BINS];
            for &v in st.baseline.iter() {
                base[((v * HIST_BINS as f64) as usize).min(HIST_BINS - 1)] += 1.0 / sc.n() as f64;
            }
            for k in 0..HIST_BINS {
                hist.push(vec![num(k as f64 / HIST_BINS as f64), num((k + 1) as f64 / HIST_BINS as f64), num(st.histogram[k]), num(base[k])]);
            }
            out.table("perturb_hist.csv", &hist)?;
            for (r, z) in st.runs.iter().enumerate() {
                let (g, rest) = sc.group_means(z);
                summary.push(vec![r.to_string(), derive_seed(a.seed, r as u64).to_string(), "0".into(), num(lockdown_cost(z, sc.net.cost_coeffs(), CostKind::Inverse)?), num(g), num(rest), num(z.min()), num(z.max())]);
                for i in 0..sc.n() {
                    zt.push(vec![r.to_string(), sc.ids[i].clone(), num(z[i])]);
                }
            }
            println!("mean earth mover's distance to baseline {}", num(st.mean_emd));
            debug_assert!(st.runs.iter().all(|z| emd_1d(z, &st.baseline) >= 0.0));
        }
    }
    out.table("perturb.csv", &summary)?;
    out.table("perturb_z.csv", &zt)?;
    out.metadata(&meta)?;
    println!("{} runs written to {}", summary.rows.len(), out.path("perturb.csv").display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct R0Args {
    /// Bundle for R(t0) reporting; omit for conversions only.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    #[arg(long, default_value = "bertozzi")]
    pub params: String,
    #[arg(long)]
    pub model: Option<ModelFamily>,
    #[arg(long)]
    pub target_growth: Option<f64>,
    /// Decay rate to convert to a reproduction-number threshold.
    #[arg(long, conflicts_with = "r", allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Reproduction-number threshold to convert to a decay rate.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn r0(a: &R0Args, meta: RunMeta) -> Result<(), Failure> {
    let mut t = Table::new(["key", "value"]);
    let template = load_params(&a.params, a.model)?.params;
    let mut alpha = a.alpha;
    if let Some(r) = a.r {
        let al = r_to_alpha(&template, r)?;
        t.push(vec!["r".into(), num(r)]);
        t.push(vec!["alpha".into(), num(al)]);
        alpha = Some(al);
    } else if let Some(al) = a.alpha {
        t.push(vec!["alpha".into(), num(al)]);
        t.push(vec!["r".into(), num(alpha_to_r(&template, al)?)]);
    }
    if let Some(bundle) = &a.bundle {
        let m = ModelArgs { bundle: bundle.clone(), params: a.params.clone(), model: a.model, target_growth: a.target_growth, alpha };
        let s = m.load()?;
        let sc = &s.scenario;
        let ones = Vector::from_element(sc.n(), 1.0);
        t.push(vec!["r_no_lockdown".into(), num(reproduction_number(&s.factors, &ones, &s.params, sc.s0())?)]);
        if alpha.is_some() {
            let rep = solve(&s.factors, &s.params, sc.s0(), sc.net.cost_coeffs(), CostKind::Inverse)?;
            t.push(vec!["r_optimal".into(), num(reproduction_number(&s.factors, &rep.z_star, &s.params, sc.s0())?)]);
            debug_assert!(apply_lockdown(&s.factors, &rep.z_star).is_ok());
        }
    }
    if t.rows.is_empty() {
        return Err(Failure::usage("invalid input for `alpha`: pass --alpha, --r or --bundle"));
    }
    for r in &t.rows {
        println!("{} = {}", r[0], r[1]);
    }
    if let Some(o) = &a.out {
        let out = OutDir::create(o)?;
        out.table("r0.csv", &t)?;
        out.metadata(&meta)?;
    }
    Ok(())
}
