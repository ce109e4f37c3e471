use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("universe has no constituents")]
    EmptyUniverse,

    #[error("aggregate is zero; nothing to normalize over")]
    ZeroAggregate,

    #[error("duplicate identifier `{0}`")]
    DuplicateIdentifier(String),

    #[error("empty identifier")]
    EmptyIdentifier,

    #[error("constituent `{id}` has negative market cap {value}")]
    NegativeMarketCap { id: String, value: f64 },

    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },

    #[error("non-finite number {context}")]
    NonFiniteNumber { context: String },

    #[error("weight {value} for `{id}` is outside [0, 1]")]
    WeightOutOfRange { id: String, value: f64 },

    #[error("weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },

    #[error("{0} identifiers but {1} weights")]
    LengthMismatch(usize, usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("all weights are zero")]
    AllWeightsZero,

    #[error("every positive weight exceeds the threshold; no complement to absorb the remainder")]
    DegenerateComplement,

    #[error("k = {k} exceeds the number of constituents ({n})")]
    KExceedsN { k: usize, n: usize },

    #[error("bound {bound} is below the equal-weight floor {floor}")]
    Infeasible { bound: f64, floor: f64 },

    #[error("bisection did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("identifier sets differ: `{0}` is not present in both vectors")]
    IdentifierMismatch(String),

    #[error("rule #{index} ({rule}) failed: {source}")]
    RuleFailed {
        index: usize,
        rule: String,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: u64, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
