//! Process-level error type mapping failures to exit codes.

use std::path::Path;

/// Anything that can abort a CLI run.
///
/// Exit codes: validation and I/O problems exit with 1, numerical failures
/// inside the estimators exit with 2.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] probit_gp::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io { path: path.display().to_string(), source }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        AppError::Format { path: path.display().to_string(), message: message.into() }
    }

    /// Process exit code for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_exit_with_two() {
        let e = AppError::Core(probit_gp::Error::VanishingDenominator);
        assert_eq!(e.exit_code(), 2);
        let e = AppError::Core(probit_gp::Error::NonFinite { context: "test" });
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn validation_failures_exit_with_one() {
        let e = AppError::Invalid("bad flag".into());
        assert_eq!(e.exit_code(), 1);
        let e = AppError::Core(probit_gp::Error::DimensionMismatch { expected: 1, got: 2 });
        assert_eq!(e.exit_code(), 1);
    }
}
