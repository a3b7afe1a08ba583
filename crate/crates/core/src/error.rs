use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("state is not normalized (norm or trace {0})")]
    NotNormalized(f64),

    #[error("invalid qubit index set: {0}")]
    QubitIndex(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("channel is not trace preserving (deviation {0:.3e})")]
    Incomplete(f64),

    #[error("duplicate or unknown channel label: {0}")]
    Label(String),

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("scheme {0} has no gate-level syndrome operations")]
    NoSyndromeOps(String),

    #[error("branch has zero probability")]
    ZeroProbability,

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("mismatched grids: {0}")]
    Grid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
