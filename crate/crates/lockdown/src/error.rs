use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid input for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("location {0} receives no visitors (zero column sum of N^T tau)")]
    DegenerateLocation(usize),
    #[error("matrix pattern is not strongly connected")]
    NotStronglyConnected,
    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("decay rate alpha = {alpha} is outside the solvable domain (must be < {bound})")]
    InfeasibleAlpha { alpha: f64, bound: f64 },
    #[error("could not bracket calibration target {target}")]
    CalibrationRange { target: f64 },
    #[error("degenerate rates: {0}")]
    DegenerateRates(&'static str),
    #[error("family mismatch: {0}")]
    FamilyMismatch(&'static str),
    #[error("travel matrix has a zero diagonal entry at location {0}")]
    TauDiagonalZero(usize),
    #[error("row {0} collapsed to zero after perturbation")]
    RowCollapse(usize),
    #[error("step size underflow at t = {t}")]
    StepRejectionCascade { t: f64 },
    #[error("random policy width {width} cannot reach cost {target}")]
    WidthInfeasible { width: f64, target: f64 },
    #[error("no feasible point: {0}")]
    Infeasible(String),
    #[error("data inconsistency at `{id}`: {reason}")]
    DataInconsistency { id: String, reason: String },
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("manifest error in {}: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonConvergence { .. }
                | Error::StepRejectionCascade { .. }
                | Error::CalibrationRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
