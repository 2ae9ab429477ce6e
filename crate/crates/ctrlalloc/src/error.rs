//! CLI error taxonomy mapped onto process exit codes.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Configuration or validation failure; one diagnostic per problem.
    #[error("configuration error:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    /// Internal numerical failure (pivot guard, degenerate inputs).
    #[error("numerical failure: {0}")]
    Numerical(ctrlalloc_core::Error),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) => 2,
        }
    }

    pub fn io(path: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
