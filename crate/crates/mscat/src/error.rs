use thiserror::Error;

/// CLI failures, each with its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(mscat_core::Error),
    #[error("resource guard: {0}")]
    Resource(mscat_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Resource(_) => 4,
            CliError::Io { .. } | CliError::Csv { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<mscat_core::Error> for CliError {
    fn from(e: mscat_core::Error) -> Self {
        match e {
            mscat_core::Error::ResourceGuard { .. } => CliError::Resource(e),
            // Preconditions on user input surface as config problems.
            mscat_core::Error::Precondition(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}
