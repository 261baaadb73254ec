use alloc::string::String;

/// Failure modes shared by every module of the core crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("evaluation error: {0}")]
    Evaluation(String),
    #[error("singular system (determinant {det:e})")]
    Singular { det: f64 },
    #[error("light cone breached: {0}")]
    LightCone(String),
    #[error("diagnostic: {0}")]
    Diagnostic(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
