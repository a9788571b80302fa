use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: labelfuse::Error,
    },

    #[error(transparent)]
    Core(#[from] labelfuse::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 for usage errors (including bad option values caught by the
    /// library), 4 for numerical divergence, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Core(labelfuse::Error::InvalidArgument(_)) => 2,
            CliError::File { source, .. } | CliError::Core(source) => {
                if source.is_divergence() {
                    4
                } else {
                    3
                }
            }
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
