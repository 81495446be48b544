//! Service settings: one TOML file, then `HH_*` environment overrides.
//!
//! ```toml
//! tcp_port = 8080
//! http_port = 8081
//! budget_s = 30
//! root = "projects"
//! tokens = ["s3cret"]
//!
//! [[prover]]
//! name = "E"
//! command = "eprover --auto --cpu-limit={cpu} {file}"
//!
//! [[mock]]
//! name = "M"
//! answer = ["ADD_SYM"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hh_core::advise::{TacticBackend, REPLAY_SUCCESS, REPLAY_SUGGESTED};
use hh_core::learners::LearnerParams;
use hh_core::provers::{MockConfig, ProverSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("invalid setting: {0}")]
    Invalid(String),
}

/// A scripted prover, mostly for tests and demos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MockEntry {
    pub name: String,
    #[serde(default)]
    pub answer: Vec<String>,
    #[serde(default)]
    pub extras: Vec<String>,
    #[serde(default)]
    pub latency: Vec<f64>,
}

impl MockEntry {
    pub fn config(&self) -> MockConfig {
        MockConfig {
            answer: self.answer.iter().cloned().collect(),
            extras: self.extras.iter().cloned().collect(),
            latency: self.latency.clone(),
        }
    }
}

/// An external tactic plug-in: reads the goal on stdin, prints `proved` on success.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TacticEntry {
    pub name: String,
    pub command: Vec<String>,
    pub tactic: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub tcp_port: u16,
    pub http_port: u16,
    /// Per-query time budget in seconds.
    pub budget_s: f64,
    pub progress_interval_s: f64,
    /// Bearer tokens accepted for uploads.
    pub tokens: Vec<String>,
    pub root: PathBuf,
    /// Shared proof store; `<root>/.common` when unset.
    pub common: Option<PathBuf>,
    /// Problem files and prover output.
    pub scratch: Option<PathBuf>,
    pub max_concurrent_queries: usize,
    /// Cap on simultaneously running provers; the CPU count when unset.
    pub max_provers: Option<usize>,
    /// Project used by TCP queries without a `project:` prefix.
    pub default_project: Option<String>,
    /// Replay token: `SUGGESTED`, or `SUCCESS` for old clients.
    pub replay_token: String,
    /// Append a `* Loadavg:` line to TCP transcripts.
    pub status_trailer: bool,
    /// Strategy file; otherwise the default portfolio on every prover.
    pub strategies: Option<PathBuf>,
    pub taut: bool,
    /// Run provers on HOL-dependency problems during ingest.
    pub prove_on_ingest: bool,
    pub ingest_prover_timeout_s: f64,
    pub learner: LearnerParams,
    pub prover: Vec<ProverSpec>,
    pub mock: Vec<MockEntry>,
    pub tactic: Vec<TacticEntry>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1".into(),
            tcp_port: 8080,
            http_port: 8081,
            budget_s: hh_core::advise::DEFAULT_BUDGET_S,
            progress_interval_s: 1.0,
            tokens: Vec::new(),
            root: PathBuf::from("projects"),
            common: None,
            scratch: None,
            max_concurrent_queries: 8,
            max_provers: None,
            default_project: None,
            replay_token: REPLAY_SUGGESTED.into(),
            status_trailer: false,
            strategies: None,
            taut: true,
            prove_on_ingest: false,
            ingest_prover_timeout_s: 5.0,
            learner: LearnerParams::default(),
            prover: Vec::new(),
            mock: Vec::new(),
            tactic: Vec::new(),
        }
    }
}

impl ServiceConfig {
    pub fn parse(text: &str) -> Result<ServiceConfig, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<ServiceConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        ServiceConfig::parse(&text)
    }

    /// File (if any), then environment, then validation.
    pub fn load(path: Option<&Path>) -> Result<ServiceConfig, ConfigError> {
        let env = |k: &str| std::env::var(k).ok();
        let file = path.map(Path::to_path_buf).or_else(|| env("HH_CONFIG").map(PathBuf::from));
        let mut c = match file {
            Some(p) => ServiceConfig::from_file(&p)?,
            None => ServiceConfig::default(),
        };
        c.apply_env(env)?;
        c.validate()?;
        Ok(c)
    }

    /// Overrides from `HH_BIND`, `HH_TCP_PORT`, `HH_HTTP_PORT`, `HH_BUDGET`,
    /// `HH_TOKENS` (comma separated), `HH_ROOT` and `HH_MAX_QUERIES`.
    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T, ConfigError> {
            v.trim().parse().map_err(|_| ConfigError::Invalid(format!("{}={:?}", k, v)))
        }
        if let Some(v) = get("HH_BIND") {
            self.bind = v;
        }
        if let Some(v) = get("HH_TCP_PORT") {
            self.tcp_port = num("HH_TCP_PORT", &v)?;
        }
        if let Some(v) = get("HH_HTTP_PORT") {
            self.http_port = num("HH_HTTP_PORT", &v)?;
        }
        if let Some(v) = get("HH_BUDGET") {
            self.budget_s = num("HH_BUDGET", &v)?;
        }
        if let Some(v) = get("HH_TOKENS") {
            self.tokens = v.split(',').map(str::trim).filter(|t| !t.is_empty()).map(str::to_string).collect();
        }
        if let Some(v) = get("HH_ROOT") {
            self.root = PathBuf::from(v);
        }
        if let Some(v) = get("HH_MAX_QUERIES") {
            self.max_concurrent_queries = num("HH_MAX_QUERIES", &v)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.tcp_port != 0 && self.tcp_port == self.http_port {
            return bad(format!("tcp_port and http_port are both {}", self.tcp_port));
        }
        if !self.budget_s.is_finite() || self.budget_s <= 0.0 {
            return bad(format!("budget_s must be positive, got {}", self.budget_s));
        }
        if self.progress_interval_s.is_nan() || self.progress_interval_s <= 0.0 {
            return bad("progress_interval_s must be positive".into());
        }
        if self.max_concurrent_queries == 0 {
            return bad("max_concurrent_queries must be at least 1".into());
        }
        if self.replay_token != REPLAY_SUGGESTED && self.replay_token != REPLAY_SUCCESS {
            return bad(format!("replay_token must be {} or {}", REPLAY_SUGGESTED, REPLAY_SUCCESS));
        }
        for p in &self.prover {
            p.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let mut names: Vec<&str> = self.prover.iter().map(|p| p.name.as_str()).collect();
        names.extend(self.mock.iter().map(|m| m.name.as_str()));
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.contains(char::is_whitespace) {
                return bad(format!("prover name {:?} must be a single word", n));
            }
            if names[..i].contains(n) {
                return bad(format!("prover {} configured twice", n));
            }
        }
        for t in &self.tactic {
            if t.name.is_empty() || t.name.contains(char::is_whitespace) || t.command.is_empty() {
                return bad(format!("tactic plug-in {:?} needs a one-word name and a command", t.name));
            }
        }
        Ok(())
    }

    pub fn common_dir(&self) -> PathBuf {
        self.common.clone().unwrap_or_else(|| self.root.join(".common"))
    }

    pub fn scratch_dir(&self) -> PathBuf {
        self.scratch.clone().unwrap_or_else(|| std::env::temp_dir().join("hh-scratch"))
    }

    pub fn tactics(&self) -> Vec<TacticBackend> {
        let mut out = Vec::new();
        if self.taut {
            out.push(TacticBackend::Taut);
        }
        for t in &self.tactic {
            out.push(TacticBackend::External {
                name: t.name.clone(),
                command: t.command.clone(),
                tactic: t.tactic.clone(),
            });
        }
        out
    }
}
