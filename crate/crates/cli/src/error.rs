use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config:{line}:{column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{context}: {source}")]
    Numeric {
        context: String,
        #[source]
        source: liouville_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attaches the stage name to a core error.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T, CliError>;
}

impl<T> Context<T> for liouville_core::Result<T> {
    fn context(self, what: &str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric {
            context: what.to_string(),
            source,
        })
    }
}
