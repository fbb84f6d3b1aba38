use thiserror::Error;

/// Errors raised while validating inputs or evaluating the fusion model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("{name} must be a probability in [0, 1], got {value}")]
    InvalidBelief { name: &'static str, value: f64 },
    #[error("prior pi0 must lie strictly inside (0, 1), got {0}")]
    DegeneratePrior(f64),
    #[error("{name} cost must be positive and finite, got {value}")]
    InvalidCost { name: &'static str, value: f64 },
    #[error("noise scale sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("network needs at least one local agent")]
    NoLocalAgents,
    #[error("agent index {index} out of range 1..={n}")]
    AgentIndex { index: usize, n: usize },
    #[error("expected {expected} local decisions, got {got}")]
    DecisionLength { expected: usize, got: usize },
    #[error("brute-force enumeration is limited to {max} agents, got {n}")]
    TooManyAgents { n: usize, max: usize },
    #[error("full grid search over {n} local agents is not allowed (max {max}); tie local beliefs instead")]
    DimensionGuard { n: usize, max: usize },
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("empty input curve")]
    EmptyCurve,
}

pub type Result<T> = std::result::Result<T, FusionError>;
