use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate weights: all weights are zero")]
    DegenerateWeights,

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("invalid weight {value} at row {row}")]
    InvalidWeight { row: usize, value: f64 },

    #[error("support violation at row {row}: density ratio is not finite")]
    SupportViolation { row: usize },

    #[error("weight {value} at index {index} exceeds the bound {bound}")]
    BoundViolated { index: usize, value: f64, bound: f64 },

    #[error("need at least {needed} strictly positive weights, found {available}")]
    TooFewPositiveWeights { needed: usize, available: usize },

    #[error("instance too large for exact enumeration (n = {n}, m = {m})")]
    InstanceTooLarge { n: usize, m: usize },

    #[error("singular design")]
    SingularDesign,

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("unknown column `{0}`")]
    UnknownColumn(String),

    #[error("csv error at row {row}, column {column}: {message}")]
    Csv {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("expression error: {0}")]
    Expression(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
