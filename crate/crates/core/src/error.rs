use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("position {x} lies outside the domain [{xmin}, {xmax}]")]
    OutsideDomain { x: f64, xmin: f64, xmax: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("time step {dt:e} exceeds the stability bound {bound:e}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("non-finite density at step {step} (t = {t}): {detail}")]
    NonFinite { step: u64, t: f64, detail: String },

    #[error("envelope violation: {0}")]
    EnvelopeViolation(String),

    #[error("no free boundary: {0}")]
    NoBoundary(String),

    #[error("support has {available} cells, the fit window needs {needed}")]
    SupportTooNarrow { available: usize, needed: usize },

    #[error("identity not applicable: {0}")]
    IdentityNotApplicable(String),

    #[error("misaligned times: {0}")]
    MisalignedTimes(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("incomplete run directory: {0}")]
    IncompleteRun(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
