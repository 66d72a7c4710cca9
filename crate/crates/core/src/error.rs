use thiserror::Error;

/// Errors raised across the sampler, ladder and verification modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("exact log-partition is undefined for m={components} components at beta={beta}; use numeric quadrature (divergences::QuadratureGrid)")]
    PartitionUndefined { components: usize, beta: f64 },

    #[error("non-finite gradient at position {position:?}")]
    NonFiniteGradient { position: Vec<f64> },

    #[error("oracle failure at step {step}: {source}")]
    AtStep {
        step: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("empty sample set")]
    EmptySamples,

    #[error("density does not normalize on the quadrature grid (integral = {integral}); widen the bounds")]
    NotNormalized { integral: f64 },

    #[error("quadrature grid invalid: {0}")]
    InvalidGrid(String),

    #[error("non-positive density {value} at node {node}")]
    NonPositiveDensity { node: usize, value: f64 },

    #[error("generator invalid: {0}")]
    InvalidGenerator(String),

    #[error("chain is reducible ({components} communicating classes)")]
    Reducible { components: usize },

    #[error("eigen-decomposition failed: {0}")]
    Eigen(String),

    #[error("path for pair ({from}, {to}) uses zero-rate edge ({edge_from}, {edge_to})")]
    ZeroRateEdge {
        from: usize,
        to: usize,
        edge_from: usize,
        edge_to: usize,
    },

    #[error("path for pair ({from}, {to}) does not connect its endpoints")]
    BrokenPath { from: usize, to: usize },

    #[error("missing divergence entry: {0}")]
    MissingDivergence(String),

    #[error("decomposition identity fails: residual {residual:e}")]
    DecompositionMismatch { residual: f64 },

    #[error("rejection rate {rate:.6} at stage {stage} exceeds ceiling {ceiling} after {runs} runs")]
    RejectionCeiling {
        stage: usize,
        rate: f64,
        ceiling: f64,
        runs: u64,
    },

    #[error("retry budget of {budget} runs exhausted at stage {stage}")]
    RetryBudget { stage: usize, budget: u64 },

    #[error("series too short: {len} samples for max lag {max_lag} (need {needed})")]
    SeriesTooShort {
        len: usize,
        max_lag: usize,
        needed: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
