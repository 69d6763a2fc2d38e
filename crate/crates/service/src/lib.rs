//! Translated two-party chat: each message is translated for the other
//! participant, checked against the previous exchange by an error detector,
//! and delivered to both sides with the same warning flag.

mod config;
mod http;
pub mod model;
mod service;
mod store;
#[cfg(any(test, feature = "testkit"))]
pub mod testkit;

pub use config::{Settings, STORAGE_DIR_ENV};
pub use http::router;
pub use model::{EventType, Message, MessageStatus, Participant, ServerEvent, Session};
pub use service::{ChatService, Subscription};
pub use store::Store;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("missing or invalid bearer token")]
    Unauthorized,
    #[error("forbidden: {0}")]
    Forbidden(String),
    #[error("ordering: {0}")]
    Ordering(String),
    #[error("unsupported language pair: {0}")]
    UnsupportedPair(String),
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("translation backend: {0}")]
    Backend(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error("configuration: {0}")]
    Config(String),
}

/// Serves the HTTP API on `listener` until the process exits.
pub async fn serve(listener: tokio::net::TcpListener, service: std::sync::Arc<ChatService>) -> std::io::Result<()> {
    axum::serve(listener, router(service)).await
}
