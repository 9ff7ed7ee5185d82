use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
    #[error("transmon out of regime: E_J = {ej_hz:.6e} Hz does not exceed E_C = {ec_hz:.6e} Hz")]
    OutOfTransmonRegime { ej_hz: f64, ec_hz: f64 },
    #[error("target frequency {target_hz:.6e} Hz is not reachable (f01,max = {max_hz:.6e} Hz)")]
    UnreachableFrequency { target_hz: f64, max_hz: f64 },
    #[error("step size too large: trace drifted by {drift:.3e} in one step")]
    StepSize { drift: f64 },
    #[error("sampling too coarse: dt = {dt:.3e} s exceeds {max_dt:.3e} s")]
    SamplingTooCoarse { dt: f64, max_dt: f64 },
    #[error("gate window [{start:.3e}, {stop:.3e}] s outside unambiguous range [0, {range:.3e}] s")]
    GateOutOfRange { start: f64, stop: f64, range: f64 },
    #[error("schedule mismatch: {0}")]
    Schedule(String),
    #[error("weak-field condition violated: peak Rabi {peak_rabi_hz:.3e} Hz > {limit_hz:.3e} Hz")]
    WeakField { peak_rabi_hz: f64, limit_hz: f64 },
    #[error("fit did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        best: Box<crate::fit::FitResult>,
    },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the scenario runner: 1 validation, 2 numerical, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::Schedule(_)
            | Error::GateOutOfRange { .. }
            | Error::WeakField { .. }
            | Error::SamplingTooCoarse { .. } => 1,
            Error::OutOfTransmonRegime { .. }
            | Error::UnreachableFrequency { .. }
            | Error::StepSize { .. }
            | Error::NoConvergence { .. }
            | Error::Numerical(_) => 2,
            Error::Io { .. } => 3,
        }
    }
}
