use std::path::PathBuf;

use rwre_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for invalid input, 3 for numeric failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 4,
            CliError::Core(e) => match e {
                CoreError::Overflow { .. }
                | CoreError::Diverged { .. }
                | CoreError::ConditionViolated { .. }
                | CoreError::NoBoundedSolution { .. }
                | CoreError::BlockOverflow { .. }
                | CoreError::WindowEscape { .. } => 3,
                _ => 2,
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::Diverged { site: 1 }).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::InvalidArgument("x".into())).exit_code(), 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::io("f", io).exit_code(), 4);
    }
}
