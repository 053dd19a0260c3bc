use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate sample: n = {n} does not exceed the number of regressors r = {r}")]
    DegenerateSample { n: usize, r: usize },

    #[error("design is rank deficient: rank {rank} < {expected} columns")]
    RankDeficient { rank: usize, expected: usize },

    #[error("controls are rank deficient; redundant columns {redundant:?}")]
    ControlsRankDeficient { redundant: Vec<usize> },

    #[error("observation {observation} has unit leverage and is not absorbed by the controls")]
    UnitLeverage { observation: usize },

    #[error("hadamard system is singular (pivot {pivot} failed); estimator does not exist")]
    HadamardSingular { pivot: usize },

    #[error("gram matrix of the partialled focal regressors is singular")]
    GramSingular,

    #[error("dense n x n storage requested for n = {n}, above the limit {limit}")]
    BudgetExceeded { n: usize, limit: usize },

    #[error("oracle weights need the true error variances")]
    MissingTruth,

    #[error("variance {0} is not positive")]
    NonpositiveVariance(f64),

    #[error("covariance matrix is singular")]
    SingularOmega,

    #[error("covariance matrix is indefinite")]
    IndefiniteOmega,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
