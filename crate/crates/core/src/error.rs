use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("size error: need at least {required} samples, got {got}")]
    Size { required: usize, got: usize },
    #[error("precondition failed for `{field}`: need N >= {required}, got N = {got}")]
    Precondition {
        field: &'static str,
        required: usize,
        got: usize,
    },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;
