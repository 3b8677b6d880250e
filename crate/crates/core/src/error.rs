use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("tail mass check failed: outer annulus holds {fraction:.3e} of the squared norm (limit {limit:.1e})")]
    TailMass { fraction: f64, limit: f64 },

    #[error("zero-mean check failed on {what}: mean {mean:.3e} exceeds tolerance {tol:.3e}")]
    ZeroMean { what: String, mean: f64, tol: f64 },

    #[error("requested point ({x:.4}, {y:.4}) lies outside the source grid")]
    OutOfGrid { x: f64, y: f64 },

    #[error("resolution check failed: {0}")]
    Resolution(String),

    #[error("weighted representation required for m = infinity norms")]
    WeightedReprRequired,

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("numerical guard `{guard}` tripped: {detail}")]
    Guard { guard: &'static str, detail: String },

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("configuration error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl LabError {
    pub fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LabError::InvalidParameter { name, reason: reason.into() }
    }

    pub fn guard(guard: &'static str, detail: impl Into<String>) -> Self {
        LabError::Guard { guard, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
