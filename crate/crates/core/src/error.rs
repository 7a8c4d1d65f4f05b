use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("potential domain error: {0}")]
    Domain(String),

    #[error("singular {what} (condition number {cond:.3e})")]
    Singular { what: &'static str, cond: f64 },

    #[error("minimization failed after {iterations} iterations: gradient max-norm {gradient:.3e}")]
    Minimization { iterations: usize, gradient: f64 },

    #[error("mode analysis failed: {0}")]
    Modes(String),

    #[error("integration failed at t = {t}: {msg}")]
    Integration { t: f64, msg: String },
}

impl Error {
    /// `true` for failures of the numerics rather than of the caller's input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Singular { .. }
                | Error::Minimization { .. }
                | Error::Modes(_)
                | Error::Integration { .. }
        )
    }
}
