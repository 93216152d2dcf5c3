use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("transition row ({state}, {action}) is not a probability distribution")]
    NonStochasticRow { state: usize, action: usize },
    #[error("initial state distribution is not a probability distribution")]
    BadInitialDistribution,
    #[error("state {0} is unreachable under the uniform policy")]
    UnreachableState(usize),
    #[error("discount {0} is outside (0, 1)")]
    BadGamma(f64),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("linear system is singular")]
    SolveFailure,
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("distribution assigns zero probability to index {0}")]
    ZeroSupport(usize),
    #[error("norm {0} is not supported here")]
    UnsupportedNorm(String),
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("weights must be nonnegative and strictly positive on the transition support")]
    DegenerateWeights,
    #[error("`0` (skip) is not a norm")]
    SkipNotANorm,
    #[error("unknown canonicalisation `{0}`")]
    UnknownCanon(String),
    #[error("unknown normalisation `{0}`")]
    UnknownNorm(String),
    #[error("unknown distance `{0}`")]
    UnknownDist(String),
    #[error("forbidden metric combination `{0}`")]
    ForbiddenCombination(String),
    #[error("canonicalised reward is constant; Pearson distance is undefined")]
    ZeroCanon,
    #[error("linear program is infeasible")]
    LpInfeasible,
    #[error("linear program is unbounded")]
    LpUnbounded,
    #[error("epsilon {0} outside the admissible range")]
    BadEpsilon(f64),
    #[error("transition function is not deterministic")]
    NotDeterministicTau,
    #[error("sequence has zero variance")]
    ZeroVariance,
    #[error("sequence lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("construction check failed: {0}")]
    ConstructionFailed(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("metric `{0}` is not part of this record set")]
    UnknownSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
