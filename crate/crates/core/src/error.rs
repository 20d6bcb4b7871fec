use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precision error: {0}")]
    Precision(String),
    #[error("grazing incidence at reflection {index}")]
    Grazing { index: usize },
    #[error("caustic: a principal wavefront radius passed through zero")]
    Caustic,
    #[error("invalid configuration: {0}")]
    Config(String),
}
