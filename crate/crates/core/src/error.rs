use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prior for `{parameter}`: {reason}")]
    InvalidPrior { parameter: String, reason: String },

    #[error("non-finite draw for `{parameter}` (class `{class_id}`, sample {sample_index})")]
    Sampling {
        class_id: String,
        sample_index: usize,
        parameter: String,
    },

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{variant}: {message}")]
    Domain {
        variant: &'static str,
        message: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("simulation diverged at t = {time:.4} s")]
    Unstable { time: f64 },

    #[error("simulation of {count} model(s) diverged: {samples}")]
    MemberDiverged { count: usize, samples: String },

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error(
        "all models of class `{class_id}` were falsified; enlarge the sample count, \
         raise the target identification probability, or add model classes"
    )]
    AllFalsified { class_id: String },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
