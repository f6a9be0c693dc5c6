//! Live service configuration: TOML file plus environment overrides.

use std::path::{Path, PathBuf};

use carbonsched::registry::{builtin, load_pool, BuiltinPool, ModelPool};
use carbonsched::selector::{BoundsWindow, MappingDirection};
use serde::Deserialize;

use crate::LiveError;

pub const ENV_FEED_URL: &str = "CARBONSCHED_FEED_URL";
pub const ENV_POOL: &str = "CARBONSCHED_POOL";
pub const ENV_MAPPING: &str = "CARBONSCHED_MAPPING";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiveConfig {
    pub feed_url: String,
    pub poll_period_secs: u64,
    pub poll_timeout_secs: u64,
    pub window_hours: u32,
    pub mapping: MappingDirection,
    /// `builtin:full`, `builtin:resnet`, or a path to a pool CSV.
    pub pool: String,
    pub decision_log: PathBuf,
    pub listen: String,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            feed_url: "http://127.0.0.1:8081/intensity".into(),
            poll_period_secs: 60,
            poll_timeout_secs: 5,
            window_hours: 24,
            mapping: MappingDirection::Prose,
            pool: "builtin:resnet".into(),
            decision_log: PathBuf::from("decisions.jsonl"),
            listen: "127.0.0.1:8080".into(),
        }
    }
}

impl LiveConfig {
    pub fn from_toml(src: &str) -> Result<Self, LiveError> {
        toml::from_str(src).map_err(|e| LiveError::Config(e.to_string()))
    }

    /// Read `path` (if given), then apply environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, LiveError> {
        let mut cfg = match path {
            Some(p) => {
                let src = std::fs::read_to_string(p)
                    .map_err(|e| LiveError::Config(format!("{}: {e}", p.display())))?;
                Self::from_toml(&src)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|k| std::env::var(k).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), LiveError> {
        if let Some(url) = get(ENV_FEED_URL) {
            self.feed_url = url;
        }
        if let Some(pool) = get(ENV_POOL) {
            self.pool = pool;
        }
        if let Some(m) = get(ENV_MAPPING) {
            self.mapping = m.parse().map_err(LiveError::Config)?;
        }
        Ok(())
    }

    pub fn window(&self) -> Result<BoundsWindow, LiveError> {
        BoundsWindow::trailing(self.window_hours).map_err(|e| LiveError::Config(e.to_string()))
    }

    pub fn resolve_pool(&self) -> Result<ModelPool, LiveError> {
        resolve_pool(&self.pool)
    }
}

pub fn resolve_pool(setting: &str) -> Result<ModelPool, LiveError> {
    if let Some(name) = setting.strip_prefix("builtin:") {
        let which: BuiltinPool = name.parse().map_err(LiveError::Config)?;
        return Ok(builtin(which));
    }
    let src = std::fs::read_to_string(setting).map_err(|e| LiveError::Config(format!("{setting}: {e}")))?;
    load_pool(&src).map_err(|e| LiveError::Config(format!("{setting}: {e}")))
}
