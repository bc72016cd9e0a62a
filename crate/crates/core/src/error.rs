use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DhError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("frame mismatch: {0}")]
    FrameMismatch(String),
    #[error("query point lies on a singular hyperplane: {0}")]
    SingularPoint(String),
    #[error("unsupported distributional term: {0}")]
    Unsupported(String),
    #[error("scale guard exceeded: {0}")]
    ScaleGuard(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type DhResult<T> = Result<T, DhError>;

impl DhError {
    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            DhError::Parse(_) => 2,
            DhError::ScaleGuard(_) => 4,
            _ => 3,
        }
    }
}
