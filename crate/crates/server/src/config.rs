use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use softmatcha_core::DEFAULT_ALPHA;

use crate::error::ConfigError;

/// Service configuration, read from a TOML file of `key = value` lines.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    pub index_path: PathBuf,
    pub embeddings_path: PathBuf,
    #[serde(default = "default_alpha")]
    pub default_alpha: f64,
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    /// Upper bound on `limit` for a single request.
    #[serde(default = "default_max_limit")]
    pub max_limit: usize,
    /// Origin allowed to call the API from a browser; `"*"` allows any.
    #[serde(default)]
    pub cors_origin: Option<String>,
    /// Directory of static UI assets served at `/`.
    #[serde(default)]
    pub static_dir: Option<PathBuf>,
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_max_limit() -> usize {
    1000
}

impl ServiceConfig {
    pub fn new(index_path: impl Into<PathBuf>, embeddings_path: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            index_path: index_path.into(),
            embeddings_path: embeddings_path.into(),
            default_alpha: default_alpha(),
            bind: default_bind(),
            max_limit: default_max_limit(),
            cors_origin: None,
            static_dir: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: ServiceConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Read(path.to_path_buf(), e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.index_path, &mut cfg.embeddings_path] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
            if let Some(s) = cfg.static_dir.as_mut().filter(|s| s.is_relative()) {
                *s = dir.join(&*s);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.default_alpha > 0.0 && self.default_alpha <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "default_alpha must lie in (0, 1], got {}",
                self.default_alpha
            )));
        }
        if self.max_limit == 0 {
            return Err(ConfigError::Invalid("max_limit must be at least 1".into()));
        }
        Ok(())
    }
}
