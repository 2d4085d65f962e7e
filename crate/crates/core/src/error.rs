use std::path::PathBuf;

/// Errors raised by channel generation, estimation and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty support: a channel needs at least one active tap")]
    EmptySupport,

    #[error("degenerate prior: no active tap drawn after {attempts} attempts")]
    DegeneratePrior { attempts: u64 },

    #[error("singular metric: {0}")]
    SingularMetric(String),

    #[error("tap {0} is already active in this candidate")]
    AlreadyActive(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-deficient system: {0}")]
    RankDeficient(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
