//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("invalid hypersphere: {0}")]
    InvalidSphere(String),

    #[error("matrix is not a future-preserving Lorentz matrix: {0}")]
    NotLorentz(String),

    #[error("stereographic projection is undefined at the projection pole")]
    ProjectionPole,

    #[error("coordinate {0} lies outside the field domain [{1}, {2}]")]
    OutsideDomain(f64, f64, f64),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("glued field misuse: {0}")]
    GluedFieldMisuse(String),

    #[error("hypothesis violation [{clause}]: {detail}")]
    HypothesisViolation { clause: String, detail: String },

    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),

    #[error("unsupported bump placement: {0}")]
    BumpPlacement(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("config error at `{path}`: {detail}")]
    Config { path: String, detail: String },

    #[error("expression error: {0}")]
    Expression(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn hypothesis(clause: &str, detail: impl Into<String>) -> Self {
        Error::HypothesisViolation {
            clause: clause.to_string(),
            detail: detail.into(),
        }
    }

    pub fn config(path: &str, detail: impl Into<String>) -> Self {
        Error::Config {
            path: path.to_string(),
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
