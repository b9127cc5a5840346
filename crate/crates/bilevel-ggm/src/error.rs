use std::path::PathBuf;

use bilevel_ggm_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Data { path: PathBuf, msg: String },
    #[error("missing truth file {0}")]
    MissingTruth(PathBuf),
    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn data(path: impl Into<PathBuf>, msg: impl ToString) -> Self {
        CliError::Data {
            path: path.into(),
            msg: msg.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for everything about the data.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::InvalidConfig(_)
            | CliError::Core(
                CoreError::InvalidLambda(_)
                | CoreError::InvalidOptions(_)
                | CoreError::InvalidScenario(_)
                | CoreError::EmptyFeasibleGrid,
            ) => 2,
            _ => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
