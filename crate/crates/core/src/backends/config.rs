use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{
    BackendError, BackendInfo, DegradingMock, HumanTranslations, RemoteBackend, TranslationBackend,
};
use crate::corpus::{Lang, Origin};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Human,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Degradation {
    pub drop_prob: f64,
    pub swap_prob: f64,
}

impl Default for Degradation {
    fn default() -> Self {
        Degradation {
            drop_prob: 0.3,
            swap_prob: 0.3,
        }
    }
}

impl Degradation {
    pub fn none() -> Self {
        Degradation {
            drop_prob: 0.0,
            swap_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        for (name, p) in [("drop_prob", self.drop_prob), ("swap_prob", self.swap_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(BackendError::Config(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `[backend.<name>]` table of a config file.
///
/// `endpoint` is a URL for remote backends, the human-translation file for
/// human backends, and an optional reference file for the mock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    #[serde(default)]
    pub quality: Option<Origin>,
    #[serde(default)]
    pub source_lang: Option<Lang>,
    #[serde(default)]
    pub target_lang: Option<Lang>,
    #[serde(default)]
    pub endpoint: Option<String>,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default = "default_retries")]
    pub retry_count: u32,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub degradation: Degradation,
    #[serde(default)]
    pub windowed: bool,
}

fn default_timeout() -> f64 {
    30.0
}

fn default_retries() -> u32 {
    3
}

impl BackendConfig {
    pub fn mock(seed: u64, degradation: Degradation) -> Self {
        BackendConfig {
            kind: BackendKind::Mock,
            quality: None,
            source_lang: None,
            target_lang: None,
            endpoint: None,
            timeout: default_timeout(),
            retry_count: default_retries(),
            seed,
            degradation,
            windowed: false,
        }
    }

    fn info(&self, name: &str) -> Result<BackendInfo, BackendError> {
        let quality = match (self.quality, self.kind) {
            (Some(q), _) => q,
            (None, BackendKind::Human) => Origin::Human,
            (None, BackendKind::Mock) => Origin::MtLow,
            (None, BackendKind::Remote) => {
                return Err(BackendError::Config(format!(
                    "backend `{name}`: remote backends need an explicit quality"
                )))
            }
        };
        let languages = match (self.source_lang, self.target_lang) {
            (Some(s), Some(t)) if s != t => Some((s, t)),
            (None, None) => None,
            _ => {
                return Err(BackendError::Config(format!(
                    "backend `{name}`: source_lang and target_lang must both be set and differ"
                )))
            }
        };
        Ok(BackendInfo {
            name: name.to_string(),
            quality,
            languages,
            windowed: self.windowed,
        })
    }

    /// Builds the backend. Relative file endpoints resolve against `base`.
    pub fn build(&self, name: &str, base: &Path) -> Result<Box<dyn TranslationBackend>, BackendError> {
        let info = self.info(name)?;
        let endpoint = endpoint_override(name).or_else(|| self.endpoint.clone());
        match self.kind {
            BackendKind::Remote => {
                let url = endpoint.ok_or_else(|| {
                    BackendError::Config(format!("backend `{name}`: remote backend needs an endpoint"))
                })?;
                if self.timeout.is_nan() || self.timeout <= 0.0 {
                    return Err(BackendError::Config(format!("backend `{name}`: timeout must be positive")));
                }
                Ok(Box::new(RemoteBackend::new(
                    info,
                    url,
                    Duration::from_secs_f64(self.timeout),
                    self.retry_count,
                )?))
            }
            BackendKind::Human => {
                let path = endpoint.ok_or_else(|| {
                    BackendError::Config(format!("backend `{name}`: human backend needs a translation file"))
                })?;
                let human = HumanTranslations::load(name, &base.join(path))
                    .map_err(|e| BackendError::Config(e.to_string()))?;
                Ok(Box::new(human.with_info(info)))
            }
            BackendKind::Mock => {
                self.degradation.validate()?;
                let mut mock = DegradingMock::new(name, self.seed, self.degradation).with_info(info);
                if let Some(path) = endpoint {
                    let refs = HumanTranslations::load(name, &base.join(path))
                        .map_err(|e| BackendError::Config(e.to_string()))?;
                    mock = mock.with_references_by_utterance(refs.into_map());
                }
                Ok(Box::new(mock))
            }
        }
    }
}

/// `XLCHAT_BACKEND_<NAME>_ENDPOINT`, with the name upper-cased and
/// non-alphanumerics replaced by `_`.
pub fn endpoint_env_var(name: &str) -> String {
    let norm: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("XLCHAT_BACKEND_{norm}_ENDPOINT")
}

fn endpoint_override(name: &str) -> Option<String> {
    std::env::var(endpoint_env_var(name)).ok().filter(|v| !v.is_empty())
}

/// The `backend` section of a TOML config file; other sections are ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendsFile {
    #[serde(default)]
    pub backend: BTreeMap<String, BackendConfig>,
}

impl BackendsFile {
    pub fn parse(text: &str) -> Result<Self, BackendError> {
        toml::from_str(text).map_err(|e| BackendError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Builds the named backends (all of them when `names` is empty).
pub fn load_backends(
    file: &BackendsFile,
    names: &[String],
    base: &Path,
) -> Result<Vec<Box<dyn TranslationBackend>>, BackendError> {
    let selected: Vec<&String> = if names.is_empty() {
        file.backend.keys().collect()
    } else {
        names.iter().collect()
    };
    selected
        .into_iter()
        .map(|name| {
            let cfg = file
                .backend
                .get(name)
                .ok_or_else(|| BackendError::Config(format!("no backend named `{name}` in config")))?;
            cfg.build(name, base)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_backend_tables() {
        let f = BackendsFile::parse(
            r#"
            [server]
            port = 1

            [backend.model_a]
            kind = "mock"
            seed = 7
            degradation = { drop_prob = 0.5, swap_prob = 0.1 }

            [backend.model_b]
            kind = "remote"
            quality = "mt_high"
            source_lang = "en"
            target_lang = "ja"
            endpoint = "http://127.0.0.1:9/translate"
            timeout = 2.5
            retry_count = 1
            windowed = true
            "#,
        )
        .unwrap();
        assert_eq!(f.backend.len(), 2);
        let a = &f.backend["model_a"];
        assert_eq!(a.degradation.drop_prob, 0.5);
        let built = load_backends(&f, &[], Path::new(".")).unwrap();
        assert_eq!(built[0].info().quality, Origin::MtLow);
        assert_eq!(built[1].info().languages, Some((Lang::En, Lang::Ja)));
        assert!(built[1].info().windowed);
    }

    #[test]
    fn rejects_bad_probability_and_missing_names() {
        let mut cfg = BackendConfig::mock(1, Degradation { drop_prob: 1.5, swap_prob: 0.0 });
        assert!(cfg.build("m", Path::new(".")).is_err());
        cfg.degradation.drop_prob = 0.1;
        assert!(cfg.build("m", Path::new(".")).is_ok());
        let f = BackendsFile::default();
        assert!(load_backends(&f, &["nope".into()], Path::new(".")).is_err());
    }

    #[test]
    fn env_var_name() {
        assert_eq!(endpoint_env_var("model-a"), "XLCHAT_BACKEND_MODEL_A_ENDPOINT");
    }

    #[test]
    fn remote_requires_quality() {
        let f = BackendsFile::parse(
            "[backend.r]\nkind = \"remote\"\nendpoint = \"http://x\"\n",
        )
        .unwrap();
        assert!(load_backends(&f, &[], Path::new(".")).is_err());
    }
}
