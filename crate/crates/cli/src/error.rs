use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Schema(String),

    #[error(transparent)]
    Core(#[from] chsw_core::Error),
}

impl CliError {
    pub fn schema(msg: impl Into<String>) -> Self {
        CliError::Schema(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 schema, 3 descriptor mismatch, 4 numeric failure, 5 divergence.
    pub fn exit_code(&self) -> i32 {
        use chsw_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Schema(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidConfig(_) | E::DimensionMismatch { .. } | E::Unsupported { .. } | E::EmptyMeasure => 2,
                E::DescriptorMismatch(_) => 3,
                E::NumericFailure { .. }
                | E::NotPositiveDefinite { .. }
                | E::IllConditioned { .. }
                | E::Domain(_)
                | E::ConstraintViolation(_)
                | E::DegenerateDirection(_) => 4,
                E::Divergence(_) | E::FlowDivergence { .. } => 5,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
