use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("domain mismatch")]
    DomainMismatch,
    #[error("empty probe box")]
    EmptyProbeBox,
    #[error("sequence too short: need at least {needed}, got {got}")]
    SequenceTooShort { needed: usize, got: usize },
    #[error("probability {0} outside [0, 1]")]
    ProbabilityOutOfRange(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("not a GEV quantile triple: {0}")]
    NotGevTriple(String),
    #[error("degenerate scenario draw: {0}")]
    DegenerateDraw(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("stopping rule starved after {0} atoms")]
    StoppingRuleStarved(usize),
    #[error("theta field is not flagged continuous")]
    DiscontinuousTheta,
    #[error("negative standardized value {0}")]
    NegativeStandardized(f64),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
