use thiserror::Error;

/// Validation failures raised while assembling a [`crate::NetworkModel`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("a network needs at least 2 miners, got {0}")]
    TooFewMiners(usize),
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("hashrate of miner {index} must be positive and finite, got {value}")]
    NonPositiveHashrate { index: usize, value: f64 },
    #[error("hashrate sum {sum} ≠ 1")]
    HashrateSum { sum: f64 },
    #[error("delay from miner {from} to miner {to} must be finite and non-negative, got {value}")]
    InvalidDelay { from: usize, to: usize, value: f64 },
    #[error("self-delay must be zero, miner {index} has {value}")]
    NonZeroSelfDelay { index: usize, value: f64 },
    #[error("mean block interval must be positive and finite, got {0}")]
    NonPositiveInterval(f64),
    #[error("propagation delay parameter must be {requirement}, got {value}")]
    InvalidDelayParameter {
        requirement: &'static str,
        value: f64,
    },
}

/// Failures from the model-based fairness calculation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalcError {
    #[error(
        "stationary iteration did not converge in {iterations} iterations (residual {residual:e})"
    )]
    NonConvergence { iterations: u64, residual: f64 },
    #[error("miners i and j must differ, both are {0}")]
    SameMiner(usize),
    #[error("miner {miner} is out of range for a network of {n}")]
    MinerOutOfRange { miner: usize, n: usize },
    #[error("fork probability from miner {i} to miner {j} is zero, so the first-seen choice is undefined")]
    ZeroForkProbability { i: usize, j: usize },
    #[error("hashrate of miner {0} is zero")]
    ZeroHashrate(usize),
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{name} must be {requirement}, got {value}")]
    InvalidArgument {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

/// Errors surfaced by the comparison harness and configuration loading.
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Calc(#[from] CalcError),
    #[error("observed vector is zero, relative error is undefined")]
    ZeroObserved,
    #[error("vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    InvalidInput(String),
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Model(_) => "model",
            HarnessError::Calc(_) => "calc",
            HarnessError::ZeroObserved => "zero_observed",
            HarnessError::LengthMismatch(..) => "length_mismatch",
            HarnessError::InvalidInput(_) => "invalid_input",
            HarnessError::Config(_) => "config",
            HarnessError::Csv(_) => "csv",
            HarnessError::Io(_) => "io",
        }
    }
}
