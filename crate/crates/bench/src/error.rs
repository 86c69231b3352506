use mcopt_core::OptimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical divergence at {stage} {index}: {reason}")]
    Divergence {
        /// `iteration` for trajectories, `epoch` for training runs.
        stage: &'static str,
        index: usize,
        reason: String,
    },

    #[error(transparent)]
    Optim(#[from] OptimError),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Divergence { .. } => 3,
            HarnessError::Optim(OptimError::NonFinite { .. }) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
