use sympkit_core::SympError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {0}")]
    Io(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] SympError),

    #[error("cannot write report: {0}")]
    Output(String),
}

impl CliError {
    /// 2 for anything the caller can fix in the invocation or config, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Config(_) => 2,
            CliError::Core(
                SympError::RealLambda(_)
                | SympError::DimensionMismatch(_)
                | SympError::InvalidDimension(_)
                | SympError::OutOfHorizon { .. }
                | SympError::Tolerance(_)
                | SympError::SingularCoefficient { .. },
            ) => 2,
            CliError::Core(_) | CliError::Output(_) => 1,
        }
    }
}
