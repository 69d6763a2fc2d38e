use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendError, BackendInfo, TranslationBackend, TranslationRequest};
use crate::corpus::Lang;

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    src_lang: Lang,
    tgt_lang: Lang,
    sentences: &'a [String],
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    translations: Vec<String>,
}

/// An MT model served over HTTP+JSON:
/// `POST {"src_lang","tgt_lang","sentences"} -> {"translations"}`.
///
/// Transport failures, 429 and 5xx responses are retried `retry_count` times
/// with exponential backoff.
#[derive(Debug, Clone)]
pub struct RemoteBackend {
    info: BackendInfo,
    endpoint: String,
    retry_count: u32,
    backoff: Duration,
    client: reqwest::blocking::Client,
}

impl RemoteBackend {
    pub fn new(
        info: BackendInfo,
        endpoint: impl Into<String>,
        timeout: Duration,
        retry_count: u32,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(RemoteBackend {
            info,
            endpoint: endpoint.into(),
            retry_count,
            backoff: Duration::from_millis(200),
            client,
        })
    }

    pub fn with_backoff(mut self, base: Duration) -> Self {
        self.backoff = base;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, req: &TranslationRequest<'_>) -> Result<Vec<String>, Attempt> {
        let body = WireRequest {
            src_lang: req.direction.source(),
            tgt_lang: req.direction.target(),
            sentences: req.sentences,
        };
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        if status.is_server_error() || status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            return Err(Attempt::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(Attempt::Fatal(BackendError::Http {
                backend: self.info.name.clone(),
                at: req.at.cloned(),
                status: status.as_u16(),
                body,
            }));
        }
        let parsed: WireResponse = resp.json().map_err(|e| Attempt::Retry(e.to_string()))?;
        Ok(parsed.translations)
    }
}

enum Attempt {
    Retry(String),
    Fatal(BackendError),
}

impl TranslationBackend for RemoteBackend {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn translate(&self, req: &TranslationRequest<'_>) -> Result<Vec<String>, BackendError> {
        let mut last = String::new();
        for attempt in 0..=self.retry_count {
            if attempt > 0 {
                thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(req) {
                Ok(out) => {
                    if out.len() != req.sentences.len() {
                        return Err(BackendError::Protocol {
                            backend: self.info.name.clone(),
                            at: req.at.cloned(),
                            expected: req.sentences.len(),
                            got: out.len(),
                        });
                    }
                    return Ok(out);
                }
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    tracing::warn!(backend = %self.info.name, attempt, error = %msg, "translation request failed");
                    last = msg;
                }
            }
        }
        Err(BackendError::Unreachable {
            backend: self.info.name.clone(),
            at: req.at.cloned(),
            attempts: self.retry_count + 1,
            message: last,
        })
    }
}
