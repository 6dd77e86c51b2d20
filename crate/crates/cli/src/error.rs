//! CLI failure classes and their exit codes.

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] jodkit::Error),

    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed arguments or configuration.
    #[error("{0}")]
    Usage(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    /// 1 input error, 2 statistical or identifiability error, 3 internal error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_input_error() => 1,
            CliError::Core(e) if e.is_statistical_error() => 2,
            CliError::Core(_) => 3,
            CliError::Read { .. } | CliError::Usage(_) => 1,
            CliError::Write { .. } | CliError::Internal(_) => 3,
        }
    }

    /// Extra lines printed after the message.
    pub fn details(&self) -> Vec<String> {
        match self {
            CliError::Core(jodkit::Error::Disconnected { components }) => components
                .iter()
                .enumerate()
                .map(|(i, c)| format!("  component {}: {}", i + 1, c.join(", ")))
                .collect(),
            _ => Vec::new(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_error_class() {
        let parse = CliError::Core(jodkit::Error::Parse { line: 3, message: "x".into() });
        assert_eq!(parse.exit_code(), 1);
        let disconnected = CliError::Core(jodkit::Error::Disconnected {
            components: vec![vec!["a".into()], vec!["b".into(), "c".into()]],
        });
        assert_eq!(disconnected.exit_code(), 2);
        assert_eq!(disconnected.details(), vec!["  component 1: a", "  component 2: b, c"]);
        assert_eq!(CliError::Usage("bad".into()).exit_code(), 1);
        assert_eq!(CliError::Internal("bug".into()).exit_code(), 3);
    }
}
