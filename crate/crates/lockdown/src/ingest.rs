//! County-level tables to model inputs, and the canonical bundle format.
//!
//! Input tables are UTF-8 CSV with a header row:
//!
//! | table        | columns                              |
//! |--------------|--------------------------------------|
//! | trips        | `origin_id,dest_id,count`            |
//! | home_dwell   | `id,median_minutes`                  |
//! | population   | `id,persons`                         |
//! | employment   | `id,persons`                         |
//! | cases        | `id,cumulative_confirmed`            |
//! | deaths       | `id,cumulative_deaths`               |
//! | density      | `id,persons_per_sq_mile` (optional)  |
//!
//! The population table fixes the set and order of locations. Trips to or
//! from ids outside that set are dropped before normalization.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Mat, NetworkData, TravelMatrix, Vector, MINUTES_PER_DAY};
use crate::simulate::EpidemicState;

/// Constants of the initial-state estimate; defaults are the published values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitialStateConstants {
    /// Fraction of true infections that are confirmed.
    pub reporting_rate: f64,
    pub national_recovered: f64,
    pub national_cases: f64,
    /// Share of active infections that are asymptomatic.
    pub asymptomatic_share: f64,
}

impl Default for InitialStateConstants {
    fn default() -> Self {
        Self {
            reporting_rate: 0.14,
            national_recovered: 8878.0,
            national_cases: 215215.0,
            asymptomatic_share: 0.86,
        }
    }
}

impl InitialStateConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.reporting_rate > 0.0 && self.reporting_rate <= 1.0) {
            return Err(Error::invalid("reporting_rate", "must lie in (0, 1]"));
        }
        if !(self.national_cases > 0.0) || !(self.national_recovered >= 0.0) || self.national_recovered > self.national_cases {
            return Err(Error::invalid("national_recovered", "need 0 <= recovered <= cases and cases > 0"));
        }
        if !(0.0..=1.0).contains(&self.asymptomatic_share) {
            return Err(Error::invalid("asymptomatic_share", "must lie in [0, 1]"));
        }
        Ok(())
    }

    fn recovered_ratio(&self) -> f64 {
        self.national_recovered / self.national_cases
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub origin: String,
    pub dest: String,
    pub count: f64,
}

/// The raw tables, keyed by location id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawCountyTables {
    /// Location ids in population-table order.
    pub ids: Vec<String>,
    pub trips: Vec<TripRecord>,
    pub home_dwell: HashMap<String, f64>,
    pub population: HashMap<String, f64>,
    pub employment: HashMap<String, f64>,
    pub cases: HashMap<String, f64>,
    pub deaths: HashMap<String, f64>,
    pub density: Option<HashMap<String, f64>>,
}

impl RawCountyTables {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    fn lookup(&self, table: &HashMap<String, f64>, name: &str, id: &str) -> Result<f64> {
        table.get(id).copied().ok_or_else(|| Error::DataInconsistency {
            id: id.to_string(),
            reason: format!("missing from the {name} table"),
        })
    }

    /// Per-location column in `ids` order.
    fn column(&self, table: &HashMap<String, f64>, name: &str) -> Result<Vector> {
        let mut v = Vector::zeros(self.n());
        for (i, id) in self.ids.iter().enumerate() {
            let x = self.lookup(table, name, id)?;
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::DataInconsistency {
                    id: id.clone(),
                    reason: format!("{name} must be finite and >= 0, got {x}"),
                });
            }
            v[i] = x;
        }
        Ok(v)
    }

    pub fn populations(&self) -> Result<Vector> {
        self.column(&self.population, "population")
    }

    pub fn employment_vec(&self) -> Result<Vector> {
        self.column(&self.employment, "employment")
    }

    pub fn home_dwell_vec(&self) -> Result<Vector> {
        let h = self.column(&self.home_dwell, "home_dwell")?;
        if let Some(i) = h.iter().position(|&v| v > MINUTES_PER_DAY) {
            return Err(Error::DataInconsistency {
                id: self.ids[i].clone(),
                reason: format!("home dwell {} exceeds a day", h[i]),
            });
        }
        Ok(h)
    }

    pub fn densities(&self) -> Result<Option<Vector>> {
        self.density.as_ref().map(|d| self.column(d, "density")).transpose()
    }

    /// Trip counts `k_ij` over in-scope locations.
    pub fn trip_matrix(&self) -> Result<Mat> {
        let index: HashMap<&str, usize> = self.ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut k = Mat::zeros(self.n(), self.n());
        for t in &self.trips {
            if !(t.count >= 0.0) || !t.count.is_finite() {
                return Err(Error::DataInconsistency {
                    id: t.origin.clone(),
                    reason: format!("trip count to {} must be finite and >= 0, got {}", t.dest, t.count),
                });
            }
            if let (Some(&i), Some(&j)) = (index.get(t.origin.as_str()), index.get(t.dest.as_str())) {
                k[(i, j)] += t.count;
            }
        }
        Ok(k)
    }
}

/// `tau_ij = (1 - h_i/1440) k_ij / sum_a k_ia` over in-scope destinations.
pub fn build_tau(raw: &RawCountyTables) -> Result<TravelMatrix> {
    let h = raw.home_dwell_vec()?;
    let k = raw.trip_matrix()?;
    for i in 0..raw.n() {
        if !(k.row(i).sum() > 0.0) {
            return Err(Error::DataInconsistency {
                id: raw.ids[i].clone(),
                reason: "no trips to any in-scope destination".into(),
            });
        }
    }
    TravelMatrix::from_trips(&k, h.as_slice())
}

/// Initial state from cumulative cases and deaths.
///
/// `s = 1 - I/(rho N)`, `r = (D + I R_us/C_us)/(rho N)`, active `= 1 - s - r`
/// split into asymptomatic and symptomatic by the configured share.
/// Cases above `rho N` are clamped with a warning.
pub fn initial_state(
    ids: &[String],
    cases: &Vector,
    deaths: &Vector,
    populations: &Vector,
    constants: &InitialStateConstants,
) -> Result<(EpidemicState, Vec<String>)> {
    constants.validate()?;
    let n = populations.len();
    let rho = constants.reporting_rate;
    let mut warnings = Vec::new();
    let mut s = Vector::zeros(n);
    let mut xa = Vector::zeros(n);
    let mut xs = Vector::zeros(n);
    for i in 0..n {
        let cap = rho * populations[i];
        let mut inf = cases[i];
        if inf > cap {
            warnings.push(format!("{}: {} cases exceed reporting_rate * N = {}; clamped", ids[i], inf, cap));
            inf = cap;
        }
        let total = inf / cap;
        let rec = (deaths[i] + inf * constants.recovered_ratio()) / cap;
        let active = total - rec;
        if active < 0.0 {
            return Err(Error::DataInconsistency {
                id: ids[i].clone(),
                reason: format!("recovered fraction {rec} exceeds infected fraction {total}"),
            });
        }
        s[i] = 1.0 - total;
        xa[i] = constants.asymptomatic_share * active;
        xs[i] = (1.0 - constants.asymptomatic_share) * active;
    }
    Ok((EpidemicState::new(s, xa, xs)?, warnings))
}

/// Initial state when only `s0` is known: cases are backed out of `s0` and
/// deaths are zero.
pub fn initial_state_from_s0(s0: &Vector, constants: &InitialStateConstants) -> Result<EpidemicState> {
    let n = s0.len();
    let pops = Vector::from_element(n, 1.0);
    let cases = s0.map(|s| (1.0 - s) * constants.reporting_rate);
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let (st, _) = initial_state(&ids, &cases, &Vector::zeros(n), &pops, constants)?;
    // keep s0 exactly
    Ok(EpidemicState::new(s0.clone(), st.x_a, st.x_s)?)
}

/// Paths of the input tables, relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFiles {
    pub trips: PathBuf,
    pub home_dwell: PathBuf,
    pub population: PathBuf,
    pub employment: PathBuf,
    pub cases: PathBuf,
    pub deaths: PathBuf,
    #[serde(default)]
    pub density: Option<PathBuf>,
}

/// The manifest binding tables, date and constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub as_of: String,
    pub files: ManifestFiles,
    #[serde(default)]
    pub constants: InitialStateConstants,
    /// Optional designated group (e.g. the city counties).
    #[serde(default)]
    pub group: Vec<String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        toml::from_str(&text).map_err(|e| Error::Manifest { path: path.to_path_buf(), reason: e.to_string() })
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>> {
    let f = fs::File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(f))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}

fn check_header(path: &Path, rdr: &mut csv::Reader<fs::File>, expected: &[&str]) -> Result<()> {
    let h = rdr.headers().map_err(csv_err(path))?;
    let got: Vec<&str> = h.iter().collect();
    if got != expected {
        return Err(Error::Manifest {
            path: path.to_path_buf(),
            reason: format!("expected columns {expected:?}, found {got:?}"),
        });
    }
    Ok(())
}

fn parse_num(path: &Path, line: usize, field: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| Error::Manifest {
        path: path.to_path_buf(),
        reason: format!("line {line}: `{field}` is not a number"),
    })
}

/// Reads a two-column `id,value` table, preserving row order.
fn read_keyed(path: &Path, value_col: &str) -> Result<Vec<(String, f64)>> {
    let mut rdr = open_csv(path)?;
    check_header(path, &mut rdr, &["id", value_col])?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        out.push((rec[0].to_string(), parse_num(path, k + 2, &rec[1])?));
    }
    Ok(out)
}

fn to_map(path: &Path, rows: Vec<(String, f64)>) -> Result<HashMap<String, f64>> {
    let mut m = HashMap::with_capacity(rows.len());
    for (id, v) in rows {
        if m.insert(id.clone(), v).is_some() {
            return Err(Error::DataInconsistency {
                id,
                reason: format!("duplicate row in {}", path.display()),
            });
        }
    }
    Ok(m)
}

/// Reads every table named in the manifest.
pub fn load_raw(manifest: &Manifest, base: &Path) -> Result<RawCountyTables> {
    let f = &manifest.files;
    let p = |x: &PathBuf| base.join(x);
    let pop_rows = read_keyed(&p(&f.population), "persons")?;
    let ids: Vec<String> = pop_rows.iter().map(|(id, _)| id.clone()).collect();
    let trips_path = p(&f.trips);
    let mut rdr = open_csv(&trips_path)?;
    check_header(&trips_path, &mut rdr, &["origin_id", "dest_id", "count"])?;
    let mut trips = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(&trips_path))?;
        trips.push(TripRecord {
            origin: rec[0].to_string(),
            dest: rec[1].to_string(),
            count: parse_num(&trips_path, k + 2, &rec[2])?,
        });
    }
    let population = to_map(&p(&f.population), pop_rows)?;
    let density = match &f.density {
        Some(d) => Some(to_map(&p(d), read_keyed(&p(d), "persons_per_sq_mile")?)?),
        None => None,
    };
    Ok(RawCountyTables {
        ids,
        trips,
        home_dwell: to_map(&p(&f.home_dwell), read_keyed(&p(&f.home_dwell), "median_minutes")?)?,
        population,
        employment: to_map(&p(&f.employment), read_keyed(&p(&f.employment), "persons")?)?,
        cases: to_map(&p(&f.cases), read_keyed(&p(&f.cases), "cumulative_confirmed")?)?,
        deaths: to_map(&p(&f.deaths), read_keyed(&p(&f.deaths), "cumulative_deaths")?)?,
        density,
    })
}

/// A fully built instance: network, initial state and labels.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub as_of: String,
    pub ids: Vec<String>,
    pub net: NetworkData,
    pub state0: EpidemicState,
    pub densities: Option<Vector>,
    /// Membership in the designated group.
    pub group: Vec<bool>,
    pub constants: InitialStateConstants,
    pub warnings: Vec<String>,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn s0(&self) -> &Vector {
        &self.state0.s
    }

    /// Means of `v` over the designated group and over the rest.
    pub fn group_means(&self, v: &Vector) -> (f64, f64) {
        let (mut a, mut na, mut b, mut nb) = (0.0, 0, 0.0, 0);
        for i in 0..self.n() {
            if self.group[i] {
                a += v[i];
                na += 1;
            } else {
                b += v[i];
                nb += 1;
            }
        }
        (a / na.max(1) as f64, b / nb.max(1) as f64)
    }
}

/// Builds a scenario from raw tables.
pub fn build_scenario(
    name: &str,
    as_of: &str,
    raw: &RawCountyTables,
    group: &[String],
    constants: &InitialStateConstants,
) -> Result<Scenario> {
    let travel = build_tau(raw)?;
    let pops = raw.populations()?;
    if let Some(i) = pops.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::DataInconsistency { id: raw.ids[i].clone(), reason: "population must be positive".into() });
    }
    let h = raw.home_dwell_vec()?;
    let net = NetworkData::new(pops.clone(), raw.employment_vec()?, travel, h)?;
    let cases = raw.column(&raw.cases, "cases")?;
    let deaths = raw.column(&raw.deaths, "deaths")?;
    let (state0, mut warnings) = initial_state(&raw.ids, &cases, &deaths, &pops, constants)?;
    warnings.extend(net.warnings().iter().cloned());
    for g in group {
        if !raw.ids.contains(g) {
            return Err(Error::DataInconsistency { id: g.clone(), reason: "group member is not a known location".into() });
        }
    }
    Ok(Scenario {
        name: name.to_string(),
        as_of: as_of.to_string(),
        ids: raw.ids.clone(),
        group: raw.ids.iter().map(|id| group.contains(id)).collect(),
        net,
        state0,
        densities: raw.densities()?,
        constants: *constants,
        warnings,
    })
}

/// Loads the manifest and everything it references.
pub fn load_manifest(path: &Path) -> Result<Scenario> {
    let m = Manifest::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let raw = load_raw(&m, base)?;
    build_scenario(&m.name, &m.as_of, &raw, &m.group, &m.constants)
}

/// Writes raw tables and a manifest to `dir`.
pub fn write_raw(dir: &Path, name: &str, as_of: &str, raw: &RawCountyTables, group: &[String]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let write_keyed = |file: &str, col: &str, table: &HashMap<String, f64>| -> Result<()> {
        let path = dir.join(file);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        w.write_record(["id", col]).map_err(csv_err(&path))?;
        for id in &raw.ids {
            if let Some(v) = table.get(id) {
                w.write_record([id.as_str(), &v.to_string()]).map_err(csv_err(&path))?;
            }
        }
        w.flush().map_err(|source| Error::Io { path: path.clone(), source })
    };
    write_keyed("population.csv", "persons", &raw.population)?;
    write_keyed("employment.csv", "persons", &raw.employment)?;
    write_keyed("home_dwell.csv", "median_minutes", &raw.home_dwell)?;
    write_keyed("cases.csv", "cumulative_confirmed", &raw.cases)?;
    write_keyed("deaths.csv", "cumulative_deaths", &raw.deaths)?;
    if let Some(d) = &raw.density {
        write_keyed("density.csv", "persons_per_sq_mile", d)?;
    }
    let path = dir.join("trips.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["origin_id", "dest_id", "count"]).map_err(csv_err(&path))?;
    for t in &raw.trips {
        w.write_record([t.origin.as_str(), t.dest.as_str(), &t.count.to_string()]).map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;
    let manifest = Manifest {
        name: name.to_string(),
        as_of: as_of.to_string(),
        files: ManifestFiles {
            trips: "trips.csv".into(),
            home_dwell: "home_dwell.csv".into(),
            population: "population.csv".into(),
            employment: "employment.csv".into(),
            cases: "cases.csv".into(),
            deaths: "deaths.csv".into(),
            density: raw.density.as_ref().map(|_| "density.csv".into()),
        },
        constants: InitialStateConstants::default(),
        group: group.to_vec(),
    };
    let mpath = dir.join("manifest.toml");
    let text = toml::to_string_pretty(&manifest).map_err(|e| Error::Manifest { path: mpath.clone(), reason: e.to_string() })?;
    fs::write(&mpath, text).map_err(|source| Error::Io { path: mpath.clone(), source })?;
    Ok(mpath)
}

pub const BUNDLE_FORMAT: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BundleMeta {
    format: u32,
    name: String,
    as_of: String,
    n: usize,
    constants: InitialStateConstants,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRow {
    id: String,
    population: f64,
    employment: f64,
    cost: f64,
    home_dwell: f64,
    s: f64,
    x_a: f64,
    x_s: f64,
    density: Option<f64>,
    group: u8,
}

/// Writes the canonical bundle: `bundle.toml`, `nodes.csv`, `tau.csv`.
///
/// Floats use the shortest representation that parses back to the same
/// bits, so [`read_bundle`] reproduces the scenario exactly.
pub fn write_bundle(dir: &Path, sc: &Scenario) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    let meta = BundleMeta {
        format: BUNDLE_FORMAT,
        name: sc.name.clone(),
        as_of: sc.as_of.clone(),
        n: sc.n(),
        constants: sc.constants,
    };
    let mpath = dir.join("bundle.toml");
    let text = toml::to_string_pretty(&meta).map_err(|e| Error::Manifest { path: mpath.clone(), reason: e.to_string() })?;
    fs::write(&mpath, text).map_err(|source| Error::Io { path: mpath.clone(), source })?;

    let path = dir.join("nodes.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    let net = &sc.net;
    for i in 0..sc.n() {
        w.serialize(NodeRow {
            id: sc.ids[i].clone(),
            population: net.populations()[i],
            employment: net.employment()[i],
            cost: net.cost_coeffs()[i],
            home_dwell: net.home_dwell()[i],
            s: sc.state0.s[i],
            x_a: sc.state0.x_a[i],
            x_s: sc.state0.x_s[i],
            density: sc.densities.as_ref().map(|d| d[i]),
            group: sc.group[i] as u8,
        })
        .map_err(csv_err(&path))?;
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })?;

    let path = dir.join("tau.csv");
    let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
    w.write_record(["origin_id", "dest_id", "tau"]).map_err(csv_err(&path))?;
    let tau = net.tau();
    for i in 0..sc.n() {
        for j in 0..sc.n() {
            if tau[(i, j)] != 0.0 {
                w.write_record([sc.ids[i].as_str(), sc.ids[j].as_str(), &tau[(i, j)].to_string()])
                    .map_err(csv_err(&path))?;
            }
        }
    }
    w.flush().map_err(|source| Error::Io { path: path.clone(), source })
}

/// Reads a bundle written by [`write_bundle`].
pub fn read_bundle(dir: &Path) -> Result<Scenario> {
    let mpath = dir.join("bundle.toml");
    let text = fs::read_to_string(&mpath).map_err(|source| Error::Io { path: mpath.clone(), source })?;
    let meta: BundleMeta = toml::from_str(&text).map_err(|e| Error::Manifest { path: mpath.clone(), reason: e.to_string() })?;
    if meta.format != BUNDLE_FORMAT {
        return Err(Error::Manifest { path: mpath, reason: format!("unsupported bundle format {}", meta.format) });
    }
    let path = dir.join("nodes.csv");
    let mut rdr = open_csv(&path)?;
    let rows: Vec<NodeRow> = rdr.deserialize().collect::<std::result::Result<_, _>>().map_err(csv_err(&path))?;
    let n = rows.len();
    if n != meta.n {
        return Err(Error::Manifest { path, reason: format!("bundle declares {} nodes, nodes.csv has {n}", meta.n) });
    }
    let col = |f: &dyn Fn(&NodeRow) -> f64| Vector::from_iterator(n, rows.iter().map(f));
    let ids: Vec<String> = rows.iter().map(|r| r.id.clone()).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let tpath = dir.join("tau.csv");
    let mut rdr = open_csv(&tpath)?;
    check_header(&tpath, &mut rdr, &["origin_id", "dest_id", "tau"])?;
    let mut tau = Mat::zeros(n, n);
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err(&tpath))?;
        let (i, j) = match (index.get(&rec[0]), index.get(&rec[1])) {
            (Some(&i), Some(&j)) => (i, j),
            _ => {
                return Err(Error::DataInconsistency {
                    id: format!("{}->{}", &rec[0], &rec[1]),
                    reason: format!("tau.csv line {} names an unknown location", k + 2),
                })
            }
        };
        tau[(i, j)] = parse_num(&tpath, k + 2, &rec[2])?;
    }
    let net = NetworkData::from_parts(
        col(&|r| r.population),
        col(&|r| r.employment),
        col(&|r| r.cost),
        TravelMatrix::new(tau)?,
        col(&|r| r.home_dwell),
    )?;
    let densities = if rows.iter().all(|r| r.density.is_some()) {
        Some(col(&|r| r.density.unwrap_or(0.0)))
    } else {
        None
    };
    let state0 = EpidemicState::new(col(&|r| r.s), col(&|r| r.x_a), col(&|r| r.x_s))?;
    Ok(Scenario {
        name: meta.name,
        as_of: meta.as_of,
        group: rows.iter().map(|r| r.group != 0).collect(),
        ids,
        warnings: net.warnings().to_vec(),
        net,
        state0,
        densities,
        constants: meta.constants,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::strongly_connected;

    fn one_county(h: f64) -> RawCountyTables {
        let id = "a".to_string();
        RawCountyTables {
            ids: vec![id.clone()],
            trips: vec![TripRecord { origin: id.clone(), dest: id.clone(), count: 40.0 }],
            home_dwell: [(id.clone(), h)].into(),
            population: [(id.clone(), 1000.0)].into(),
            employment: [(id.clone(), 500.0)].into(),
            cases: [(id.clone(), 14.0)].into(),
            deaths: [(id.clone(), 0.0)].into(),
            density: None,
        }
    }

    #[test]
    fn single_county_tau() {
        let tau = build_tau(&one_county(720.0)).unwrap();
        assert_eq!(tau.tau()[(0, 0)], 0.5);
    }

    #[test]
    fn out_of_scope_trips_are_dropped() {
        let mut raw = one_county(720.0);
        raw.trips.push(TripRecord { origin: "a".into(), dest: "elsewhere".into(), count: 1000.0 });
        raw.trips.push(TripRecord { origin: "elsewhere".into(), dest: "a".into(), count: 1000.0 });
        assert_eq!(build_tau(&raw).unwrap().tau()[(0, 0)], 0.5);
    }

    #[test]
    fn missing_home_dwell_and_empty_rows_fail() {
        let mut raw = one_county(720.0);
        raw.home_dwell.clear();
        assert!(matches!(build_tau(&raw), Err(Error::DataInconsistency { .. })));
        let mut raw = one_county(720.0);
        raw.trips.clear();
        assert!(matches!(build_tau(&raw), Err(Error::DataInconsistency { .. })));
    }

    #[test]
    fn row_sums_follow_home_dwell() {
        let ids: Vec<String> = (0..4).map(|i| format!("c{i}")).collect();
        let mut raw = RawCountyTables { ids: ids.clone(), ..Default::default() };
        for (i, id) in ids.iter().enumerate() {
            raw.home_dwell.insert(id.clone(), 600.0 + 50.0 * i as f64);
            for (j, jd) in ids.iter().enumerate() {
                raw.trips.push(TripRecord { origin: id.clone(), dest: jd.clone(), count: (1 + i * 3 + j) as f64 });
            }
        }
        let tau = build_tau(&raw).unwrap();
        for i in 0..4 {
            assert!((tau.tau().row(i).sum() - (1.0 - (600.0 + 50.0 * i as f64) / 1440.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_state_arithmetic() {
        let c = InitialStateConstants::default();
        let ids = vec!["a".to_string()];
        let (st, w) = initial_state(&ids, &Vector::from_element(1, 0.0), &Vector::from_element(1, 0.0), &Vector::from_element(1, 1000.0), &c).unwrap();
        assert!(w.is_empty());
        assert_eq!((st.s[0], st.x_a[0], st.x_s[0]), (1.0, 0.0, 0.0));
        let (st, _) = initial_state(&ids, &Vector::from_element(1, 14.0), &Vector::from_element(1, 0.0), &Vector::from_element(1, 1000.0), &c).unwrap();
        let rec: f64 = 14.0 * 8878.0 / 215215.0 / 140.0;
        assert!((st.s[0] - 0.9).abs() < 1e-15);
        assert!((rec - 0.004125).abs() < 1e-6);
        assert!((st.recovered()[0] - rec).abs() < 1e-12);
        assert!((st.x_a[0] - 0.86 * (0.1 - rec)).abs() < 1e-12);
        assert!((st.x_a[0] - 0.082453).abs() < 1e-6);
    }

    #[test]
    fn too_many_cases_are_clamped() {
        let c = InitialStateConstants::default();
        let ids = vec!["a".to_string()];
        let (st, w) = initial_state(&ids, &Vector::from_element(1, 500.0), &Vector::from_element(1, 0.0), &Vector::from_element(1, 1000.0), &c).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(st.s[0], 0.0);
    }

    #[test]
    fn deaths_beyond_infections_are_inconsistent() {
        let c = InitialStateConstants::default();
        let ids = vec!["a".to_string()];
        let r = initial_state(&ids, &Vector::from_element(1, 1.0), &Vector::from_element(1, 50.0), &Vector::from_element(1, 1000.0), &c);
        assert!(matches!(r, Err(Error::DataInconsistency { .. })));
    }

    #[test]
    fn manifest_and_bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ids: Vec<String> = (0..3).map(|i| format!("n{i}")).collect();
        let mut raw = RawCountyTables { ids: ids.clone(), ..Default::default() };
        let mut dens = HashMap::new();
        for (i, id) in ids.iter().enumerate() {
            raw.home_dwell.insert(id.clone(), 700.0 + 13.3 * i as f64);
            raw.population.insert(id.clone(), 1234.5 * (i + 1) as f64);
            raw.employment.insert(id.clone(), 321.7 * (i + 2) as f64);
            raw.cases.insert(id.clone(), 3.0 + i as f64);
            raw.deaths.insert(id.clone(), 0.0);
            dens.insert(id.clone(), 10.0f64.powi(i as i32 + 1) / 3.0);
            for (j, jd) in ids.iter().enumerate() {
                raw.trips.push(TripRecord { origin: id.clone(), dest: jd.clone(), count: (7 * i + 3 * j + 1) as f64 });
            }
        }
        raw.density = Some(dens);
        let mpath = write_raw(dir.path(), "toy", "2020-04-01", &raw, &["n0".to_string()]).unwrap();
        let sc = load_manifest(&mpath).unwrap();
        assert_eq!(sc.group, vec![true, false, false]);
        assert!(strongly_connected(&crate::spectral::pattern_of(sc.net.tau())));
        let bdir = dir.path().join("bundle");
        write_bundle(&bdir, &sc).unwrap();
        let back = read_bundle(&bdir).unwrap();
        assert_eq!(back.ids, sc.ids);
        assert_eq!(back.net.tau(), sc.net.tau());
        assert_eq!(back.net.populations(), sc.net.populations());
        assert_eq!(back.net.employment(), sc.net.employment());
        assert_eq!(back.net.cost_coeffs(), sc.net.cost_coeffs());
        assert_eq!(back.net.home_dwell(), sc.net.home_dwell());
        assert_eq!(back.state0, sc.state0);
        assert_eq!(back.densities, sc.densities);
        assert_eq!(back.group, sc.group);
        assert_eq!(back.constants, sc.constants);
    }

    #[test]
    fn bad_header_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("population.csv");
        fs::write(&p, "county,people\na,1\n").unwrap();
        let err = read_keyed(&p, "persons").unwrap_err();
        assert!(err.to_string().contains("population.csv"), "{err}");
    }
}
