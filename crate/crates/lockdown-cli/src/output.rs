use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::failure::Failure;

/// Formats with 12 significant digits, trailing zeros trimmed.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mant.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rows of string cells with a header.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Failure::io(path, e))?;
        w.write_record(&self.header).map_err(|e| Failure::io(path, e))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Failure::io(path, e))?;
        }
        w.flush().map_err(|e| Failure::io(path, e))
    }
}

/// Output directory; tables are written complete or with a `.partial` suffix.
pub struct OutDir {
    pub dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn table(&self, name: &str, t: &Table) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        let _ = fs::remove_file(self.path(&format!("{name}.partial")));
        t.write(&p)?;
        Ok(p)
    }

    pub fn partial(&self, name: &str, t: &Table) -> Result<PathBuf, Failure> {
        let p = self.path(&format!("{name}.partial"));
        t.write(&p)?;
        Ok(p)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| Failure::io(&p, e))?;
        Ok(p)
    }

    pub fn metadata(&self, meta: &RunMeta) -> Result<PathBuf, Failure> {
        let body = toml::to_string(meta).map_err(|e| Failure::usage(format!("metadata: {e}")))?;
        self.text("run.toml", &body)
    }
}

/// Echo of a run: command, arguments and seeds. No timestamps or thread
/// counts, so reruns produce identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub command: String,
    pub version: String,
    pub library_version: String,
    pub args: Vec<String>,
    pub seeds: Vec<u64>,
    pub status: String,
}

impl RunMeta {
    pub fn new(command: &str, args: Vec<String>) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            library_version: lockdown::VERSION.into(),
            args,
            seeds: Vec::new(),
            status: "complete".into(),
        }
    }
}
