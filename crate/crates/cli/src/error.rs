use std::path::PathBuf;

use thiserror::Error;

use crate::config::Diagnostic;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },

    #[error("invalid override `{spec}`: {reason}")]
    Override { spec: String, reason: String },

    #[error("invalid configuration:{}", .0.iter().map(|d| format!("\n  {d}")).collect::<String>())]
    Invalid(Vec<Diagnostic>),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Numerical { context: String, source: trefftz_core::Error },

    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn numerical(context: impl Into<String>) -> impl FnOnce(trefftz_core::Error) -> Self {
        let context = context.into();
        move |source| CliError::Numerical { context, source }
    }

    /// 1 for configuration problems, 2 for failures while computing or
    /// writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical { .. } | CliError::Io { .. } => 2,
        }
    }
}
