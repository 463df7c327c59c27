use thiserror::Error;

use crate::space::Vec3;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("integration failure: {0}")]
    Integration(String),
    #[error("non-finite integrand at ({:.6e}, {:.6e}, {:.6e})", .0.x, .0.y, .0.z)]
    NonFinite(Vec3),
    #[error("nearest-boundary search escaped its window: {0}")]
    WindowTooSmall(String),
    #[error("degenerate field: {0}")]
    Degenerate(String),
    #[error("trivial field: {0}")]
    Trivial(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("quality error: {0}")]
    Quality(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("working ball violated: {0}")]
    WorkingBall(String),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("certificate failure in stage `{stage}`: {detail}")]
    Certificate { stage: String, detail: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
