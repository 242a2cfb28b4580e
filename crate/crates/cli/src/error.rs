use std::path::{Path, PathBuf};

use impulse_ctmdp::Error as CoreError;
use serde::Serialize;
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

    #[error("config file {path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }

    /// 0 ok, 1 i/o or other, 2 parse/usage, 3 validation, 4 non-convergence,
    /// 5 improper chain.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) => match e {
                CoreError::Parse { .. } => 2,
                CoreError::Validation(_)
                | CoreError::UnknownKey { .. }
                | CoreError::InfeasiblePolicy { .. }
                | CoreError::Domain(_)
                | CoreError::NotMonotone { .. } => 3,
                CoreError::NonConvergence { .. } | CoreError::NotContraction { .. } | CoreError::Inconsistent(_) => 4,
                CoreError::ImproperChain { .. } => 5,
            },
            Self::Config { .. } | Self::Usage(_) => 2,
            Self::Io { .. } | Self::Serialize(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            2 => "parse",
            3 => "validation",
            4 => "non_convergence",
            5 => "improper_chain",
            _ => "io",
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (line, field) = match self {
            Self::Core(CoreError::Parse { line, field, .. }) => (Some(*line), Some(field.clone())),
            _ => (None, None),
        };
        let violations = match self {
            Self::Core(CoreError::Validation(report)) => report.violations.iter().map(|v| v.to_string()).collect(),
            _ => Vec::new(),
        };
        ErrorRecord {
            status: "error",
            error: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            line,
            field,
            violations,
        }
    }
}

/// What a failing run prints to stderr, one JSON object.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub error: &'static str,
    pub exit_code: u8,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_kind() {
        let improper = CliError::from(CoreError::ImproperChain {
            state: "x".into(),
            reason: "cycle".into(),
        });
        assert_eq!(improper.exit_code(), 5);
        assert_eq!(improper.record().error, "improper_chain");
        assert_eq!(CliError::Usage("u".into()).exit_code(), 2);
        assert_eq!(CliError::from(CoreError::Domain("d".into())).exit_code(), 3);
        let io = CliError::io(Path::new("p"), std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 1);
    }
}
