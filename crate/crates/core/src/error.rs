use thiserror::Error;

pub type Result<T, E = BadacError> = std::result::Result<T, E>;

/// Every failure the library can report.
///
/// Variants are grouped by the exit code the CLI maps them to: configuration
/// problems (2), malformed data (3) and numerical failures (4).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BadacError {
    #[error("length mismatch: {what} has length {actual}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("instance has no points")]
    EmptyInstance,
    #[error("sigma at point {index} is {value}; sigmas must be strictly positive and finite")]
    NonPositiveSigma { index: usize, value: f64 },
    #[error("grid is not strictly increasing at point {index}")]
    NonMonotoneGrid { index: usize },
    #[error("non-finite value at point {index}")]
    NonFiniteValue { index: usize },
    #[error("instances do not share the same grid")]
    GridMismatch,
    #[error("class {0} has no instances")]
    EmptyClass(u32),
    #[error("prior {0} is outside (0, 1]")]
    InvalidPrior(f64),
    #[error("priors sum to {0}, expected 1")]
    PriorSumViolation(f64),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("observed data range has zero width")]
    DegenerateRange,
    #[error("top-hat bounds must satisfy upper > lower (got [{lower}, {upper}])")]
    InvalidTopHat { lower: f64, upper: f64 },
    #[error("input list is empty")]
    EmptyInput,
    #[error("fraction {0} is outside the allowed range")]
    InvalidFraction(f64),
    #[error("label {0} is not one of the dataset classes")]
    UnknownLabel(u32),
    #[error("no model was supplied")]
    NoModels,

    #[error("covariance matrix is not symmetric")]
    NonSymmetricCovariance,
    #[error("covariance matrix is not positive semidefinite")]
    NonPsdCovariance,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix size {m} is smaller than the number of levels {levels}")]
    MTooSmall { m: usize, levels: usize },
    #[error("integration bounds [{lower}, {upper}] do not contain the integrand mass")]
    BoundsTooNarrow { lower: f64, upper: f64 },

    #[error("N = {n} exceeds the ranked list length {len}")]
    NExceedsList { n: usize, len: usize },
    #[error("N must be at least 1")]
    ZeroN,
    #[error("truth contains a single class; ROC is undefined")]
    SingleClassTruth,
    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("k = {k} is invalid for {n} training instances")]
    InvalidK { k: usize, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("report is missing {0}")]
    MissingColumns(String),
    #[error("report is missing metric {0}")]
    MissingMetric(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl BadacError {
    pub fn exit_code(&self) -> i32 {
        use BadacError::*;
        match self {
            Config(_) | InvalidFraction(_) | InvalidPrior(_) | PriorSumViolation(_) | InvalidK { .. } => 2,
            NonSymmetricCovariance | NonPsdCovariance | BoundsTooNarrow { .. } | Numerical(_) => 4,
            _ => 3,
        }
    }
}

impl From<std::io::Error> for BadacError {
    fn from(e: std::io::Error) -> Self {
        BadacError::Io(e.to_string())
    }
}

impl From<csv::Error> for BadacError {
    fn from(e: csv::Error) -> Self {
        BadacError::Data(e.to_string())
    }
}

impl From<serde_json::Error> for BadacError {
    fn from(e: serde_json::Error) -> Self {
        BadacError::Data(e.to_string())
    }
}
