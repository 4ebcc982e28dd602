use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A kernel description is malformed.
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    /// Two point sets (or a point set and a vector) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A nonblurring center has no data point inside the kernel support.
    #[error("center {index} is isolated: no data point lies inside the kernel support")]
    IsolatedCenter { index: usize },

    /// Hull traces are only built for one- and two-dimensional data.
    #[error("hull traces support p <= 2 (got p = {0}); use radius_trace or directional containment instead")]
    UnsupportedDimension(usize),

    /// The adaptive weight schedule could not keep the oscillation alive.
    #[error("counterexample breaks down at iteration {iteration}: {reason}")]
    CounterexampleBreakdown { iteration: usize, reason: String },

    /// A covariance matrix is not symmetric positive-definite.
    #[error("covariance is not symmetric positive-definite: {0}")]
    NotPositiveDefinite(String),

    /// Fewer than two values were given where a standard deviation is required.
    #[error("standard deviation needs at least two values (got {0})")]
    TooFewValues(usize),

    /// Every replication of an experiment was excluded.
    #[error("experiment produced no usable replications ({excluded} excluded)")]
    NoReplications { excluded: usize },

    /// Input data could not be parsed.
    #[error("malformed input: {0}")]
    Parse(String),

    /// An input file contained no points.
    #[error("empty input")]
    EmptyInput,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable code, used by the command-line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidKernel(_) => "invalid_kernel",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::IsolatedCenter { .. } => "isolated_center",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::CounterexampleBreakdown { .. } => "counterexample_breakdown",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::TooFewValues(_) => "too_few_values",
            Error::NoReplications { .. } => "no_replications",
            Error::Parse(_) => "malformed_input",
            Error::EmptyInput => "empty_input",
            Error::Io(_) => "io",
            Error::Json(_) => "malformed_json",
            Error::Csv(_) => "malformed_csv",
        }
    }

    /// Process exit status for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::InvalidKernel(_) => 3,
            Error::DimensionMismatch { .. } => 4,
            Error::EmptyInput | Error::Parse(_) | Error::Csv(_) | Error::Json(_) => 5,
            Error::Io(_) => 6,
            Error::IsolatedCenter { .. } => 7,
            Error::UnsupportedDimension(_) => 8,
            Error::CounterexampleBreakdown { .. } => 9,
            Error::NotPositiveDefinite(_) => 10,
            Error::TooFewValues(_) | Error::NoReplications { .. } => 11,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
