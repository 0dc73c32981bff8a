//! Pluggable chat, translation and quality-estimation backends.
//!
//! Real services sit behind small HTTP/JSON contracts ([`http`]); the
//! [`mock`] implementations are deterministic and need no network.

pub mod http;
pub mod mock;

use thiserror::Error;

use crate::llm::ChatRequest;
use crate::mt::Lang;
use crate::qe::Orientation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    /// Network failure or non-success HTTP status; retried once.
    #[error("transport error: {0}")]
    Transport(String),
    /// The service answered, but not in the agreed shape.
    #[error("malformed response: {0}")]
    Protocol(String),
    /// A mock script has no entry for the request.
    #[error("no scripted response for {0}")]
    Unscripted(String),
}

impl BackendError {
    pub fn is_transport(&self) -> bool {
        matches!(self, Self::Transport(_))
    }
}

/// Run `call`, repeating it once with the identical request on a transport error.
pub fn with_retry<T>(mut call: impl FnMut() -> Result<T, BackendError>) -> Result<T, BackendError> {
    match call() {
        Err(e) if e.is_transport() => {
            log::warn!("{e}; retrying once");
            call()
        }
        other => other,
    }
}

pub trait ChatBackend: Send + Sync {
    fn model_id(&self) -> &str;
    /// Assistant message text for the request.
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;
}

pub trait MtBackend: Send + Sync {
    fn system_id(&self) -> &str;
    fn translate(&self, text: &str, target: Lang) -> Result<String, BackendError>;
}

pub trait QeBackend: Send + Sync {
    fn metric_id(&self) -> &str;
    /// Declared by configuration, never inferred from returned values.
    fn orientation(&self) -> Orientation;
    fn score(&self, source: &str, hypothesis: &str) -> Result<f64, BackendError>;
}
