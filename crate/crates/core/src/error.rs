use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operands live on different phase grids")]
    GridMismatch,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite symbol value {value} at x-node {x_node:?}, xi-node {xi_node:?}")]
    NonFinite {
        value: String,
        x_node: Vec<usize>,
        xi_node: Vec<usize>,
    },

    #[error("unknown builtin symbol `{0}`")]
    UnknownSymbol(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("bad parameters for `{name}`: {reason}")]
    BadParams { name: String, reason: String },

    #[error("derivative order {0} unsupported (at most 4)")]
    DerivativeOrder(usize),

    #[error("expansion order {0} unsupported (at most 2)")]
    ExpansionOrder(usize),

    #[error("scheme/potential mismatch: {0}")]
    SchemeMismatch(String),

    #[error("symbol `{0}` declares no Gaussian envelope; the direct oracle needs Schwartz-class input")]
    NoEnvelope(String),

    #[error("too many oracle evaluation points: {0} (at most 16)")]
    TooManyPoints(usize),

    #[error("symbol is not elliptic on the high-frequency region: estimated constant c = {0:e}")]
    NotElliptic(f64),

    #[error("hermiticity defect {defect:e} exceeds threshold {threshold:e}")]
    NotHermitian { defect: f64, threshold: f64 },

    #[error("Sobolev order {0} < 0 unsupported")]
    NegativeOrder(f64),

    #[error("power {0} outside [-1, 1]")]
    PowerOutOfRange(f64),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn bad_params(name: &str, reason: impl Into<String>) -> Self {
        Error::BadParams {
            name: name.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of a numerical precondition (ellipticity,
    /// hermiticity, ...) as opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotElliptic(_)
                | Error::NotHermitian { .. }
                | Error::NonFinite { .. }
                | Error::Precondition(_)
        )
    }
}
