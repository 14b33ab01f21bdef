use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use annogold::adjudication::AdjudicationConfig;
use annogold::qualification::DEFAULT_THRESHOLD;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

pub const PORT_ENV: &str = "ANNOGOLD_PORT";
pub const CORPUS_ENV: &str = "ANNOGOLD_CORPUS";

/// Service settings, read from TOML.
///
/// ```toml
/// corpus = "corpus"
/// k = 3
/// threshold = 0.7
/// reference_doc = "qual-01"
/// port = 8080
///
/// [tokens]
/// "s3cret-token" = "annotator-1"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub corpus: PathBuf,
    /// Annotation sets wanted per document.
    pub k: usize,
    pub threshold: f64,
    /// Document used for qualification; never assigned as regular work.
    pub reference_doc: Option<String>,
    /// Gold file holding the reference document's errors. Without it the
    /// reference is adjudicated from the sets stored for that document.
    pub reference_gold: Option<PathBuf>,
    /// Credit a qualification annotation on span alone.
    pub span_only: bool,
    pub host: String,
    pub port: u16,
    /// Bearer token to annotator id. Empty means no authentication.
    pub tokens: BTreeMap<String, String>,
    pub adjudication: AdjudicationConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            corpus: PathBuf::from("corpus"),
            k: 3,
            threshold: DEFAULT_THRESHOLD,
            reference_doc: None,
            reference_gold: None,
            span_only: false,
            host: "127.0.0.1".into(),
            port: 8080,
            tokens: BTreeMap::new(),
            adjudication: AdjudicationConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        // relative corpus paths are relative to the config file
        if config.corpus.is_relative() {
            if let Some(dir) = path.parent() {
                config.corpus = dir.join(&config.corpus);
            }
        }
        Ok(config)
    }

    /// Applies `ANNOGOLD_PORT` and `ANNOGOLD_CORPUS` from `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ServiceError> {
        if let Some(port) = lookup(PORT_ENV) {
            self.port = port
                .parse()
                .map_err(|_| ServiceError::Config(format!("{PORT_ENV}={port:?} is not a port number")))?;
        }
        if let Some(corpus) = lookup(CORPUS_ENV) {
            self.corpus = PathBuf::from(corpus);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.k == 0 {
            return Err(ServiceError::Config("k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(ServiceError::Config(format!("threshold {} is outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_defaults() {
        let c = ServiceConfig::from_toml("corpus = \"data\"\nreference_doc = \"q1\"\n[tokens]\nabc = \"a1\"\n").unwrap();
        assert_eq!(c.corpus, PathBuf::from("data"));
        assert_eq!(c.k, 3);
        assert_eq!(c.threshold, 0.7);
        assert_eq!(c.tokens["abc"], "a1");
        assert!(ServiceConfig::from_toml("kk = 3").is_err());
    }

    #[test]
    fn env_overrides() {
        let mut c = ServiceConfig::default();
        c.apply_env(|k| match k {
            PORT_ENV => Some("9001".into()),
            CORPUS_ENV => Some("/data/corpus".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!((c.port, c.corpus.as_path()), (9001, Path::new("/data/corpus")));
        assert!(c.apply_env(|k| (k == PORT_ENV).then(|| "http".into())).is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let c = ServiceConfig { k: 0, ..Default::default() };
        assert!(c.validate().is_err());
        let c = ServiceConfig { threshold: 1.5, ..Default::default() };
        assert!(c.validate().is_err());
    }
}
