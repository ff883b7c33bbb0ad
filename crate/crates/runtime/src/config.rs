//! Experiment configuration, read from TOML and overridable from the command line.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use dpt_core::agents::AgentKind;
use dpt_core::system2::SlowConfig;
use dpt_core::{EnvConfig, Layout};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, BackendSpec, HttpConfig};
use crate::episode::{EpisodeSetup, RunMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("layout '{name}': {reason}")]
    Layout { name: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// A shipped layout name or a path to a layout file.
    pub layout: String,
    pub horizon: u32,
    /// Seconds per tick.
    pub tick_period: f64,
    pub mode: RunMode,
    pub agent: AgentKind,
    /// Second seat. Absent for the single-agent setting.
    pub partner: Option<AgentKind>,
    pub backend: BackendSpec,
    pub seed: u64,
    pub runs: u32,
    pub out: Option<PathBuf>,
    pub http: HttpConfig,
    /// Kitchen timers and orders. `horizon` and `seed` above take precedence.
    pub env: EnvConfig,
    pub slow: SlowConfig,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            layout: "new_counter_circuit".into(),
            horizon: 500,
            tick_period: 0.25,
            mode: RunMode::Fast,
            agent: AgentKind::Fsm,
            partner: None,
            backend: BackendSpec::Null,
            seed: 0,
            runs: 20,
            out: None,
            http: HttpConfig::default(),
            env: EnvConfig::default(),
            slow: SlowConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        ExperimentConfig::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1 tick");
        }
        if !(self.tick_period.is_finite() && self.tick_period > 0.0) {
            return bad("tick_period must be a positive number of seconds");
        }
        if self.agent == AgentKind::Human || self.partner == Some(AgentKind::Human) {
            return bad("human seats are only available through the game server");
        }
        self.load_layout()?;
        Ok(())
    }

    pub fn seats(&self) -> Vec<AgentKind> {
        let mut seats = vec![self.agent];
        seats.extend(self.partner);
        seats
    }

    pub fn env_config(&self, seed: u64) -> EnvConfig {
        EnvConfig { horizon: self.horizon, seed, ..self.env.clone() }
    }

    pub fn load_layout(&self) -> Result<Arc<Layout>, ConfigError> {
        load_layout(&self.layout).map(Arc::new)
    }

    pub fn period(&self) -> Duration {
        Duration::from_secs_f64(self.tick_period)
    }

    /// Whether any seat talks to the backend.
    pub fn needs_backend(&self) -> bool {
        self.seats().iter().any(|k| k.framework().is_some())
    }

    /// Setup for the run with the given seed, with a freshly opened backend.
    pub fn setup(&self, seed: u64) -> Result<EpisodeSetup, ConfigError> {
        let backend = if self.needs_backend() { Some(self.backend.open(&self.http)?) } else { None };
        Ok(EpisodeSetup {
            layout: self.load_layout()?,
            env: self.env_config(seed),
            seats: self.seats(),
            slow: self.slow,
            mode: self.mode,
            tick_period: self.period(),
            backend,
        })
    }
}

/// A shipped layout by name, or a layout file.
pub fn load_layout(spec: &str) -> Result<Layout, ConfigError> {
    if let Some(l) = Layout::shipped(spec) {
        return Ok(l);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Layout {
        name: spec.to_string(),
        reason: format!("not a shipped layout and not readable ({e})"),
    })?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or(spec);
    Layout::parse(name, &text).map_err(|e| ConfigError::Layout { name: spec.to_string(), reason: e.to_string() })
}
