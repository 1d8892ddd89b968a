use thiserror::Error;

use crate::edf::Family;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter, mean or response left the domain of the family.
    #[error("{family}: {what} = {value} is outside {bound}")]
    Domain {
        family: Family,
        what: &'static str,
        value: f64,
        bound: &'static str,
    },
    #[error("empty input")]
    EmptyInput,
    #[error("weight at index {index} must be strictly positive, got {value}")]
    NonpositiveWeight { index: usize, value: f64 },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("split ratio {s} on n = {n} leaves an empty part")]
    DegenerateSplit { n: usize, s: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid sample: {0}")]
    InvalidSample(String),
}

impl Error {
    pub(crate) fn domain(family: Family, what: &'static str, value: f64, bound: &'static str) -> Self {
        Error::Domain {
            family,
            what,
            value,
            bound,
        }
    }

    /// True for errors caused by values outside a family's domain, as opposed
    /// to malformed input or configuration.
    pub fn is_domain(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::NonpositiveWeight { .. } | Error::InvalidSample(_))
    }
}
