//! Text-completion backends: an OpenAI-style chat endpoint, a scripted replay of
//! canned responses, and a null backend that always answers with nothing.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use dpt_core::system2::{Prompt, Reply};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One completion and how long it took, in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub reply: Reply,
    pub latency_s: f64,
}

pub trait Backend: Send + Sync {
    fn complete(&self, prompt: &Prompt) -> Completion;

    /// Whether equal prompts always get equal replies and latencies.
    fn deterministic(&self) -> bool;

    /// How long a realtime run should wait before a reply is visible.
    fn wall_delay(&self, latency_s: f64) -> Duration {
        let _ = latency_s;
        Duration::ZERO
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("cannot read fixture {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("fixture {path} line {line}: {source}")]
    Fixture { path: PathBuf, line: usize, source: serde_json::Error },
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("unknown backend '{0}' (expected null, http or scripted:FILE)")]
    Unknown(String),
}

/// Always replies with empty text.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullBackend;

impl Backend for NullBackend {
    fn complete(&self, _prompt: &Prompt) -> Completion {
        Completion { reply: Reply::Text(String::new()), latency_s: 0.0 }
    }

    fn deterministic(&self) -> bool {
        true
    }
}

/// One line of a scripted fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureEntry {
    /// Only used for prompts containing this text.
    #[serde(default, rename = "match", skip_serializing_if = "Option::is_none")]
    pub match_hint: Option<String>,
    pub response: String,
    /// Modeled latency.
    #[serde(default)]
    pub latency_s: f64,
}

/// Replays fixture responses. Each entry is used once, in file order, by the first
/// prompt it matches. When nothing matches the call fails.
#[derive(Debug)]
pub struct ScriptedBackend {
    entries: Mutex<Vec<(bool, FixtureEntry)>>,
    /// Realtime runs sleep this much less than the modeled latency so replies land
    /// before the tick they are due at.
    pub lead: Duration,
}

impl ScriptedBackend {
    pub fn new(entries: Vec<FixtureEntry>) -> ScriptedBackend {
        ScriptedBackend {
            entries: Mutex::new(entries.into_iter().map(|e| (false, e)).collect()),
            lead: Duration::from_millis(50),
        }
    }

    /// Reads a JSONL fixture. Blank lines are skipped.
    pub fn load(path: &Path) -> Result<ScriptedBackend, BackendError> {
        let io = |source| BackendError::Io { path: path.to_path_buf(), source };
        let file = fs::File::open(path).map_err(io)?;
        let mut entries = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(io)?;
            if line.trim().is_empty() {
                continue;
            }
            let e = serde_json::from_str(&line)
                .map_err(|source| BackendError::Fixture { path: path.to_path_buf(), line: i + 1, source })?;
            entries.push(e);
        }
        Ok(ScriptedBackend::new(entries))
    }

    pub fn remaining(&self) -> usize {
        self.entries.lock().expect("fixture lock").iter().filter(|(used, _)| !used).count()
    }
}

impl Backend for ScriptedBackend {
    fn complete(&self, prompt: &Prompt) -> Completion {
        let mut entries = self.entries.lock().expect("fixture lock");
        let hit = entries.iter_mut().find(|(used, e)| {
            !*used && e.match_hint.as_deref().is_none_or(|h| prompt.user.contains(h) || prompt.system.contains(h))
        });
        match hit {
            Some((used, e)) => {
                *used = true;
                Completion { reply: Reply::Text(e.response.clone()), latency_s: e.latency_s }
            }
            None => Completion { reply: Reply::Failed("fixture exhausted".into()), latency_s: 0.0 },
        }
    }

    fn deterministic(&self) -> bool {
        true
    }

    fn wall_delay(&self, latency_s: f64) -> Duration {
        Duration::from_secs_f64(latency_s.max(0.0)).saturating_sub(self.lead)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset means no auth header.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    pub timeout_s: f64,
}

impl Default for HttpConfig {
    fn default() -> HttpConfig {
        HttpConfig {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            temperature: 0.0,
            timeout_s: 30.0,
        }
    }
}

/// Chat-completions client.
pub struct HttpBackend {
    config: HttpConfig,
    key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<HttpBackend, BackendError> {
        let key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| BackendError::MissingKey(var.clone()))?),
            None => None,
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s.max(0.001))))
            .http_status_as_error(true)
            .build()
            .into();
        Ok(HttpBackend { config, key, agent })
    }

    fn request(&self, prompt: &Prompt) -> Result<String, ureq::Error> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
        });
        let mut req = self.agent.post(&url);
        if let Some(k) = &self.key {
            req = req.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = req.send_json(&body)?;
        let v: serde_json::Value = resp.body_mut().read_json()?;
        Ok(v["choices"][0]["message"]["content"].as_str().unwrap_or_default().to_string())
    }
}

impl Backend for HttpBackend {
    fn complete(&self, prompt: &Prompt) -> Completion {
        let start = Instant::now();
        let reply = match self.request(prompt) {
            Ok(text) => Reply::Text(text),
            Err(ureq::Error::Timeout(_)) => Reply::Timeout,
            Err(e) => Reply::Failed(e.to_string()),
        };
        Completion { reply, latency_s: start.elapsed().as_secs_f64() }
    }

    fn deterministic(&self) -> bool {
        false
    }
}

/// Backend selection as written in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum BackendSpec {
    Null,
    Http,
    Scripted(PathBuf),
}

impl BackendSpec {
    pub fn parse(s: &str) -> Result<BackendSpec, BackendError> {
        match s {
            "null" => Ok(BackendSpec::Null),
            "http" => Ok(BackendSpec::Http),
            _ => match s.strip_prefix("scripted:") {
                Some(p) if !p.is_empty() => Ok(BackendSpec::Scripted(PathBuf::from(p))),
                _ => Err(BackendError::Unknown(s.to_string())),
            },
        }
    }

    /// Opens a fresh backend. Scripted fixtures are re-read so every episode starts
    /// from the first entry.
    pub fn open(&self, http: &HttpConfig) -> Result<std::sync::Arc<dyn Backend>, BackendError> {
        Ok(match self {
            BackendSpec::Null => std::sync::Arc::new(NullBackend),
            BackendSpec::Http => std::sync::Arc::new(HttpBackend::new(http.clone())?),
            BackendSpec::Scripted(p) => std::sync::Arc::new(ScriptedBackend::load(p)?),
        })
    }
}

impl TryFrom<String> for BackendSpec {
    type Error = BackendError;
    fn try_from(s: String) -> Result<Self, BackendError> {
        BackendSpec::parse(&s)
    }
}

impl From<BackendSpec> for String {
    fn from(b: BackendSpec) -> String {
        match b {
            BackendSpec::Null => "null".into(),
            BackendSpec::Http => "http".into(),
            BackendSpec::Scripted(p) => format!("scripted:{}", p.display()),
        }
    }
}
