use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HalError {
    /// An argument lies outside the domain of the operation.
    #[error("{name} out of domain: {value} ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, HalError>;
