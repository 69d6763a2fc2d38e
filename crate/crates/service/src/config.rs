use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use xlchat_core::backends::{BackendConfig, TranslationBackend};
use xlchat_core::detector::{DetectorModel, ErrorDetector};

use crate::service::ChatService;
use crate::store::Store;
use crate::ServiceError;

/// Overrides `storage.dir`.
pub const STORAGE_DIR_ENV: &str = "XLCHAT_STORAGE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServerSettings {
    pub host: String,
    pub port: u16,
}

impl Default for ServerSettings {
    fn default() -> Self {
        ServerSettings {
            host: "127.0.0.1".into(),
            port: 8080,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StorageSettings {
    /// Session logs are kept in memory only when unset.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorSettings {
    /// Messages are delivered unchecked when unset.
    pub model_path: Option<PathBuf>,
    pub threshold: f64,
}

impl Default for DetectorSettings {
    fn default() -> Self {
        DetectorSettings {
            model_path: None,
            threshold: 0.5,
        }
    }
}

/// Service configuration file. Backends are tried in name order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    pub server: ServerSettings,
    pub storage: StorageSettings,
    pub detector: DetectorSettings,
    pub backend: BTreeMap<String, BackendConfig>,
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Applies environment overrides.
    pub fn with_env(mut self) -> Self {
        if let Some(dir) = std::env::var_os(STORAGE_DIR_ENV).filter(|v| !v.is_empty()) {
            self.storage.dir = Some(dir.into());
        }
        self
    }

    pub fn addr(&self) -> Result<SocketAddr, ServiceError> {
        format!("{}:{}", self.server.host, self.server.port)
            .parse()
            .map_err(|e| ServiceError::Config(format!("server address: {e}")))
    }

    /// Loads the detector and backends and replays stored sessions.
    /// Relative file paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<ChatService, ServiceError> {
        let backends = self
            .backend
            .iter()
            .map(|(name, cfg)| {
                cfg.build(name, base)
                    .map(Arc::<dyn TranslationBackend>::from)
                    .map_err(|e| ServiceError::Backend(e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if backends.is_empty() {
            return Err(ServiceError::Config("no translation backend configured".into()));
        }
        let detector: Option<Arc<dyn ErrorDetector>> = match &self.detector.model_path {
            Some(p) => {
                let model = DetectorModel::load(&base.join(p))
                    .map_err(|e| ServiceError::Config(format!("detector: {e}")))?;
                Some(Arc::new(model))
            }
            None => None,
        };
        let store = match &self.storage.dir {
            Some(d) => Some(Store::open(base.join(d))?),
            None => None,
        };
        ChatService::new(backends, detector, self.detector.threshold, store)
    }
}
