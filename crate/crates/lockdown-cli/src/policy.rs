use std::path::PathBuf;
use std::str::FromStr;

use lockdown::balancing::{solve, SolveReport};
use lockdown::model::{lockdown_cost, CostKind, Vector};
use lockdown::simulate::{
    grid_search_two_param, match_cost_bounded_decline, match_cost_random, match_cost_uniform, ConstraintOrder,
    PolicyContext, SimConfig, TwoParamMode,
};

use crate::failure::Failure;
use crate::setup::Setup;

#[derive(Debug, Clone, PartialEq)]
pub enum Partition {
    /// The bundle's designated group.
    Group,
    Ids(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicySpec {
    Ours,
    None,
    /// Fixed level, or cost-matched when absent.
    Uniform(Option<f64>),
    Random(u64),
    Bounded,
    TwoParam(Partition, ConstraintOrder),
    /// `id,z` CSV.
    File(PathBuf),
}

impl FromStr for PolicySpec {
    type Err = Failure;

    fn from_str(s: &str) -> Result<Self, Failure> {
        let bad = |why: &str| Failure::usage(format!("invalid input for `policy`: `{s}` {why}"));
        let mut parts = s.splitn(3, ':');
        let head = parts.next().unwrap_or("");
        let arg = parts.next();
        let rest = parts.next();
        Ok(match (head, arg) {
            ("ours", None) => Self::Ours,
            ("none", None) => Self::None,
            ("uniform", None) => Self::Uniform(None),
            ("uniform", Some(v)) => {
                let z: f64 = v.parse().map_err(|_| bad("needs a number"))?;
                if !(z > 0.0 && z <= 1.0) {
                    return Err(bad("needs a level in (0, 1]"));
                }
                Self::Uniform(Some(z))
            }
            ("random", v) => Self::Random(v.unwrap_or("0").parse().map_err(|_| bad("needs an integer seed"))?),
            ("bounded", None) => Self::Bounded,
            ("two_param", v) => {
                let part = match v {
                    None | Some("group") => Partition::Group,
                    Some(ids) => Partition::Ids(ids.split('+').map(str::to_string).collect()),
                };
                let order = match rest {
                    None | Some("free") => ConstraintOrder::Free,
                    Some("inside") => ConstraintOrder::InsideStricter,
                    Some("outside") => ConstraintOrder::OutsideStricter,
                    Some(_) => return Err(bad("order must be inside, outside or free")),
                };
                Self::TwoParam(part, order)
            }
            ("file", Some(p)) => Self::File(PathBuf::from(p)),
            _ => return Err(bad("is not a policy (ours, none, uniform[:z], random:seed, bounded, two_param[:ids][:order], file:path)")),
        })
    }
}

impl PolicySpec {
    pub fn needs_budget(&self) -> bool {
        matches!(self, Self::Ours | Self::Uniform(None) | Self::Random(_) | Self::Bounded | Self::TwoParam(..))
    }
}

pub fn parse_list(s: &str) -> Result<Vec<(String, PolicySpec)>, Failure> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| Ok((p.trim().to_string(), p.trim().parse()?)))
        .collect()
}

/// Everything needed to turn specs into lockdown vectors.
pub struct Resolver<'a> {
    pub setup: &'a Setup,
    pub ours: Option<SolveReport>,
    pub budget: Option<f64>,
    pub random_width: f64,
    pub sim: SimConfig,
}

impl<'a> Resolver<'a> {
    /// Solves for the optimal policy when any spec needs it; the budget
    /// defaults to its cost.
    pub fn new(setup: &'a Setup, specs: &[&PolicySpec], budget: Option<f64>, random_width: f64, sim: SimConfig) -> Result<Self, Failure> {
        let needs_ours = specs.iter().any(|s| **s == PolicySpec::Ours) || (budget.is_none() && specs.iter().any(|s| s.needs_budget()));
        let ours = if needs_ours {
            let sc = &setup.scenario;
            Some(solve(&setup.factors, &setup.params, sc.s0(), sc.net.cost_coeffs(), CostKind::Inverse)?)
        } else {
            None
        };
        let budget = budget.or_else(|| ours.as_ref().map(|r| r.cost));
        Ok(Self { setup, ours, budget, random_width, sim })
    }

    pub fn context(&self) -> PolicyContext {
        let sc = &self.setup.scenario;
        PolicyContext {
            factors: self.setup.factors.clone(),
            params: self.setup.params,
            state0: sc.state0.clone(),
            populations: sc.net.populations().clone(),
            costs: sc.net.cost_coeffs().clone(),
            sim: self.sim,
        }
    }

    fn budget(&self) -> Result<f64, Failure> {
        self.budget.ok_or_else(|| Failure::usage("invalid input for `budget`: cost-matched policies need --budget or `ours`"))
    }

    pub fn resolve(&self, spec: &PolicySpec) -> Result<Vector, Failure> {
        let sc = &self.setup.scenario;
        let n = sc.n();
        let c = sc.net.cost_coeffs();
        Ok(match spec {
            PolicySpec::Ours => self.ours.as_ref().expect("solved in new").z_star.clone(),
            PolicySpec::None => Vector::from_element(n, 1.0),
            PolicySpec::Uniform(Some(z)) => Vector::from_element(n, *z),
            PolicySpec::Uniform(None) => Vector::from_element(n, match_cost_uniform(self.budget()?, c)?),
            PolicySpec::Random(seed) => {
                let b = self.budget()?;
                match_cost_random(b, c, self.random_width, *seed)?.rematched(b, c)?.z
            }
            PolicySpec::Bounded => match_cost_bounded_decline(self.budget()?, &self.setup.factors, &self.setup.params, sc.s0(), c)?.z,
            PolicySpec::TwoParam(part, order) => {
                let inside: Vec<bool> = match part {
                    Partition::Group => sc.group.clone(),
                    Partition::Ids(ids) => {
                        for id in ids {
                            if !sc.ids.contains(id) {
                                return Err(Failure::usage(format!("invalid input for `policy`: unknown location `{id}`")));
                            }
                        }
                        sc.ids.iter().map(|id| ids.contains(id)).collect()
                    }
                };
                let mode = TwoParamMode::CostCapped { budget: self.budget()? };
                grid_search_two_param(&inside, *order, mode, &self.context())?.z
            }
            PolicySpec::File(path) => read_policy(path, &sc.ids)?,
        })
    }

    pub fn cost(&self, z: &Vector) -> Result<f64, Failure> {
        Ok(lockdown_cost(z, self.setup.scenario.net.cost_coeffs(), CostKind::Inverse)?)
    }
}

fn read_policy(path: &PathBuf, ids: &[String]) -> Result<Vector, Failure> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Failure::io(path, e))?;
    let mut z = vec![f64::NAN; ids.len()];
    for rec in r.records() {
        let rec = rec.map_err(|e| Failure::io(path, e))?;
        let id = rec.get(0).unwrap_or("");
        let i = ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Failure::usage(format!("invalid input for `policy`: unknown location `{id}` in {}", path.display())))?;
        let v: f64 = rec
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Failure::usage(format!("invalid input for `policy`: bad z for `{id}` in {}", path.display())))?;
        if !(v > 0.0 && v <= 1.0) {
            return Err(Failure::usage(format!("invalid input for `policy`: z for `{id}` must lie in (0, 1]")));
        }
        z[i] = v;
    }
    if let Some(i) = z.iter().position(|v| v.is_nan()) {
        return Err(Failure::usage(format!("invalid input for `policy`: no z for `{}` in {}", ids[i], path.display())));
    }
    Ok(Vector::from_vec(z))
}
