use std::fmt;

use firealarm_core::Error as CoreError;

/// Failure class; each maps to one process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Training,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub stage: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Usage,
            stage: None,
            message: message.into(),
        }
    }

    pub fn data(stage: impl Into<String>, err: impl fmt::Display) -> Self {
        CliError {
            kind: ErrorKind::Data,
            stage: Some(stage.into()),
            message: err.to_string(),
        }
    }

    pub fn training(stage: impl Into<String>, err: impl fmt::Display) -> Self {
        CliError {
            kind: ErrorKind::Training,
            stage: Some(stage.into()),
            message: err.to_string(),
        }
    }

    /// Classifies a core error raised while preparing data.
    pub fn from_core(stage: impl Into<String>, err: CoreError) -> Self {
        match err {
            CoreError::Argument(_) => CliError {
                kind: ErrorKind::Usage,
                stage: Some(stage.into()),
                message: err.to_string(),
            },
            _ => CliError::data(stage, err),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            ErrorKind::Usage => 1,
            ErrorKind::Data => 2,
            ErrorKind::Training => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.stage {
            Some(stage) => write!(f, "{stage} failed: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for CliError {}
