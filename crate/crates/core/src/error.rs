use thiserror::Error;

/// Errors produced by copula construction, evaluation and the algebra.
#[derive(Debug, Error)]
pub enum CopulaError {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid interval family: {0}")]
    InvalidIntervals(String),

    #[error("negative H-volume {volume:e} on cell ({row}, {col})")]
    NegativeVolume { row: usize, col: usize, volume: f64 },

    #[error("resolution {resolution} exceeds the grid cap {cap}")]
    ResolutionOverflow { resolution: usize, cap: usize },

    #[error(
        "copula is not stochastically increasing in the first component (violation {violation:e})"
    )]
    NotStochasticallyIncreasing { violation: f64 },

    #[error("no convergence after {steps} steps (final gap {gap:e})")]
    NotConverged { steps: usize, gap: f64 },

    #[error("copula is not idempotent within tolerance (gap {gap:e})")]
    NotIdempotent { gap: f64 },

    #[error("endpoint {endpoint} is not a multiple of 1/{resolution}; nearest aligned value is {suggestion}")]
    Misaligned {
        endpoint: f64,
        resolution: usize,
        suggestion: f64,
    },

    #[error("ordinal-sum verification failed: block gap {gap:e} exceeds {limit:e}")]
    VerificationFailed { gap: f64, limit: f64 },

    #[error("function is not monotone: {0}")]
    NonMonotone(String),

    #[error("insufficient samples: bin {bin} holds {count} samples, at least {required} required")]
    InsufficientSamples {
        bin: usize,
        count: usize,
        required: usize,
    },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CopulaError>;
