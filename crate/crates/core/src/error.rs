use thiserror::Error;

/// Every failure the engine reports. Variants map onto CLI exit codes:
/// configuration problems exit with 2, numerical failures with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("atomic law: {0}")]
    AtomicLaw(String),
    #[error("quadrature error: {0}")]
    Quadrature(String),
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),
    #[error("unsupported subordinator: {0}")]
    UnsupportedSpec(String),
    #[error("numerics error: {0}")]
    Numerics(String),
    #[error("conservation error: {0}")]
    Conservation(String),
    #[error("stability error: {0}")]
    Stability(String),
    #[error("inversion error: {0}")]
    Inversion(String),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("config error: {0}")]
    Config(String),
}

impl EngineError {
    /// True for errors caused by the inputs rather than by a failing computation.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            EngineError::Config(_)
                | EngineError::Domain(_)
                | EngineError::UnsupportedModel(_)
                | EngineError::UnsupportedSpec(_)
                | EngineError::DegenerateModel(_)
                | EngineError::AtomicLaw(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, EngineError>;
