use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite feature value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero degree node at index {0}")]
    ZeroDegree(usize),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("alpha = {alpha} does not exceed the spectral bound {bound}")]
    AlphaTooSmall { alpha: f64, bound: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("norm target unreachable: {0}")]
    Unreachable(String),

    #[error("outside the predictor domain: {0}")]
    Domain(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("csv row {row}: {msg}")]
    Csv { row: usize, msg: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let row = e
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        Error::Csv {
            row,
            msg: e.to_string(),
        }
    }
}
