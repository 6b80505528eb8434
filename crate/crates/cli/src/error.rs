use std::fmt;
use std::path::Path;

use hawknet_core::hho::HhoError;
use hawknet_core::{DatasetError, HpoError, MetricsError, NnError};

/// Process exit status by failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 2,
    Io = 3,
    Validation = 4,
    Numerical = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Usage, message: message.into() }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Validation, message: message.into() }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Self { kind: ExitKind::Io, message: format!("{}: {err}", path.display()) }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let kind = match e {
            DatasetError::Io { .. } => ExitKind::Io,
            _ => ExitKind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        let kind = match e {
            NnError::Io(_) => ExitKind::Io,
            NnError::NonFiniteLoss { .. } => ExitKind::Numerical,
            _ => ExitKind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<HhoError> for CliError {
    fn from(e: HhoError) -> Self {
        let kind = match e {
            HhoError::AllNonFinite { .. } => ExitKind::Numerical,
            HhoError::Io(_) => ExitKind::Io,
            _ => ExitKind::Validation,
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<HpoError> for CliError {
    fn from(e: HpoError) -> Self {
        match e {
            HpoError::Nn(inner) => inner.into(),
            HpoError::Hho(inner) => inner.into(),
            HpoError::AllTrialsFailed(_) => Self { kind: ExitKind::Numerical, message: e.to_string() },
            HpoError::Io(_) => Self { kind: ExitKind::Io, message: e.to_string() },
            _ => Self::validation(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        Self::validation(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
