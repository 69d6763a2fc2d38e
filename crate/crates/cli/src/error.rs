use std::process::ExitCode;

use xlchat_core::backends::BackendError;
use xlchat_core::coherence::CoherenceError;
use xlchat_core::corpus::CorpusError;
use xlchat_core::evaluation::EvalError;
use xlchat_core::jsonl::JsonlError;
use xlchat_core::labeling::LabelingError;
use xlchat_core::DetectorError;
use xlchat_service::ServiceError;

/// A failed invocation, classified by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, malformed input records, inconsistent data.
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    /// Translation backend or detector model failure.
    #[error("{0}")]
    Backend(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Backend(_) => 3,
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl From<JsonlError> for CliError {
    fn from(e: JsonlError) -> Self {
        match e {
            JsonlError::Io { .. } => CliError::Io(e.to_string()),
            JsonlError::Parse { .. } => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Jsonl(j) => j.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<CoherenceError> for CliError {
    fn from(e: CoherenceError) -> Self {
        match e {
            CoherenceError::Corpus(c) => c.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<LabelingError> for CliError {
    fn from(e: LabelingError) -> Self {
        match e {
            LabelingError::Corpus(c) => c.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Config(_) | BackendError::EmptyInput { .. } => CliError::Validation(e.to_string()),
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl From<DetectorError> for CliError {
    fn from(e: DetectorError) -> Self {
        match e {
            DetectorError::Config(_) | DetectorError::EmptyTrainingSet | DetectorError::SingleClass(_) => {
                CliError::Validation(e.to_string())
            }
            DetectorError::Io(_) => CliError::Io(e.to_string()),
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Storage(_) => CliError::Io(e.to_string()),
            ServiceError::Backend(_) => CliError::Backend(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}
