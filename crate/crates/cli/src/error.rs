use std::path::Path;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error(transparent)]
    Core(#[from] cherry_core::Error),
}

/// What goes to stderr, one JSON object per failed run.
#[derive(Debug, Serialize)]
struct ErrorReport<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
}

impl CliError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// 1 config or input error, 2 numeric stall, 3 internal invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => 1,
            CliError::Core(e) if e.wants_more_precision() => 2,
            CliError::Core(cherry_core::Error::Invariant(_)) => 3,
            CliError::Core(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        use cherry_core::Error as E;
        match self {
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                E::InvalidParameter { .. } => "invalid_parameter",
                E::InvalidTarget(_) => "invalid_target",
                E::PrecisionInsufficient { .. } => "precision_insufficient",
                E::PrecisionExhausted { .. } => "precision_exhausted",
                E::Discontinuity { .. } => "discontinuity",
                E::DiscontinuityHit { .. } => "discontinuity_hit",
                E::PlateauStall { .. } => "plateau_stall",
                E::InsufficientData(_) => "insufficient_data",
                E::Misaligned(_) => "misaligned",
                E::MissingGeometry(_) => "missing_geometry",
                E::Domain(_) => "domain",
                E::Invariant(_) => "invariant",
            },
        }
    }

    pub fn to_json(&self) -> String {
        let path = match self {
            CliError::Config { path, .. } => Some(path.as_str()),
            CliError::Core(cherry_core::Error::InvalidParameter { name, .. }) => Some(*name),
            _ => None,
        };
        let report = ErrorReport {
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            path,
        };
        serde_json::to_string(&report).expect("error report serializes")
    }
}
