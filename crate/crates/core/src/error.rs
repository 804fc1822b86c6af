use std::fmt;

use thiserror::Error;

/// Location of a syntax problem in some source text (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {message}")]
pub struct ParseError {
    pub location: Location,
    pub message: String,
}

impl ParseError {
    pub fn new(location: Location, message: impl Into<String>) -> Self {
        ParseError {
            location,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("product would be quadratic in the parameters")]
    ParameterNonlinear,

    #[error("symbol `{0}` collides with an existing name")]
    SymbolCollision(String),

    #[error("binomial weight for degree {0} is not representable")]
    BinomialOverflow(u32),

    #[error("parameter set is empty")]
    EmptyParameterSet,

    #[error("parameter set is unbounded along a required direction")]
    UnboundedParameterSet,

    #[error("set is empty")]
    EmptySet,

    #[error("template {0} is degenerate (directions are linearly dependent)")]
    DegenerateTemplate(usize),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("linear program did not converge within {0} iterations")]
    LpStalled(usize),

    #[error("flowpipe diverged at step {step}: offset {value}")]
    Divergence { step: usize, value: f64 },

    #[error("trajectory of length {len} is too short to evaluate the formula at time {time} (horizon {horizon})")]
    Horizon {
        len: usize,
        time: usize,
        horizon: usize,
    },

    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. } | Error::LpStalled(_) | Error::BinomialOverflow(_)
        )
    }
}
