//! External first-order provers, SZS result parsing, and a scripted mock backend.

mod mock;
mod process;
pub mod szs;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use crate::fof::FofProblem;

pub use mock::{MockConfig, MockProver};
pub use process::run_external;
pub(crate) use process::GroupGuard;

pub const FILE_PLACEHOLDER: &str = "{file}";
pub const CPU_PLACEHOLDER: &str = "{cpu}";
pub const DEFAULT_TIMEOUT_S: f64 = 30.0;

#[derive(Debug, thiserror::Error)]
pub enum ProverError {
    #[error("prover {name}: {message}")]
    InvalidSpec { name: String, message: String },
    #[error("cannot read prover registry: {0}")]
    Registry(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProofStatus {
    Proved,
    CounterSatisfiable,
    Timeout,
    GaveUp,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProofResult {
    pub prover: String,
    pub status: ProofStatus,
    /// Original premise names; empty unless proved.
    pub used: BTreeSet<String>,
    pub time_s: f64,
    /// Where the raw prover output was kept, if anywhere.
    pub output: Option<PathBuf>,
}

impl ProofResult {
    pub fn failed(prover: &str, status: ProofStatus, time_s: f64) -> ProofResult {
        ProofResult { prover: prover.to_string(), status, used: BTreeSet::new(), time_s, output: None }
    }

    pub fn is_proved(&self) -> bool {
        self.status == ProofStatus::Proved
    }
}

/// An external prover: `command` is split on whitespace and `{file}` / `{cpu}`
/// are substituted per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProverSpec {
    pub name: String,
    pub command: String,
    /// Hard wall-clock limit in seconds.
    #[serde(default = "default_timeout")]
    pub timeout: f64,
    #[serde(default)]
    pub notes: String,
}

fn default_timeout() -> f64 {
    DEFAULT_TIMEOUT_S
}

impl ProverSpec {
    pub fn new(name: &str, command: &str, timeout: f64) -> Result<ProverSpec, ProverError> {
        let spec = ProverSpec { name: name.into(), command: command.into(), timeout, notes: String::new() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ProverError> {
        let bad = |m: &str| Err(ProverError::InvalidSpec { name: self.name.clone(), message: m.into() });
        if self.name.is_empty() || self.name.contains(char::is_whitespace) {
            return bad("name must be a single non-empty word");
        }
        if !self.command.contains(FILE_PLACEHOLDER) || !self.command.contains(CPU_PLACEHOLDER) {
            return bad("command must contain {file} and {cpu}");
        }
        if self.timeout.is_nan() || self.timeout <= 0.0 {
            return bad("timeout must be positive");
        }
        Ok(())
    }

    pub fn argv(&self, file: &Path, cpu_s: u64) -> Vec<String> {
        self.command
            .split_whitespace()
            .map(|w| w.replace(FILE_PLACEHOLDER, &file.to_string_lossy()).replace(CPU_PLACEHOLDER, &cpu_s.to_string()))
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct RegistryFile {
    #[serde(default)]
    prover: Vec<ProverSpec>,
}

/// Parse a prover registry:
///
/// ```toml
/// [[prover]]
/// name = "E"
/// command = "eprover --auto --proof-object --cpu-limit={cpu} {file}"
/// timeout = 30
/// ```
pub fn parse_registry(text: &str) -> Result<Vec<ProverSpec>, ProverError> {
    let file: RegistryFile = toml::from_str(text).map_err(|e| ProverError::Registry(e.to_string()))?;
    for p in &file.prover {
        p.validate()?;
    }
    Ok(file.prover)
}

/// A proving backend: an external binary or the mock.
#[derive(Clone, Debug)]
pub enum Backend {
    External(ProverSpec),
    Mock(MockProver),
}

impl Backend {
    pub fn name(&self) -> &str {
        match self {
            Backend::External(s) => &s.name,
            Backend::Mock(m) => &m.name,
        }
    }

    /// Run on `problem` for at most `timeout` (and the backend's own limit).
    /// Scratch files go to `scratch`.
    pub async fn run(&self, problem: &FofProblem, timeout: Duration, scratch: &Path) -> ProofResult {
        let mut r = match self {
            Backend::External(spec) => run_external(spec, problem, timeout, scratch).await,
            Backend::Mock(m) => m.run(problem, timeout).await,
        };
        let submitted: BTreeSet<&str> = problem.premises.iter().map(|(_, n)| n.as_str()).collect();
        if r.used.iter().any(|u| !submitted.contains(u.as_str())) {
            tracing::warn!(prover = self.name(), "reported premises outside the submitted set; dropping them");
            r.used.retain(|u| submitted.contains(u.as_str()));
        }
        if !r.is_proved() {
            r.used.clear();
        }
        r
    }
}

/// Backends plus a global cap on concurrently running provers.
#[derive(Clone, Debug)]
pub struct ProverPool {
    backends: Vec<Backend>,
    permits: Arc<Semaphore>,
}

impl ProverPool {
    pub fn new(backends: Vec<Backend>, max_concurrent: usize) -> ProverPool {
        ProverPool { backends, permits: Arc::new(Semaphore::new(max_concurrent.max(1))) }
    }

    /// Cap equal to the number of CPUs.
    pub fn with_default_cap(backends: Vec<Backend>) -> ProverPool {
        let n = std::thread::available_parallelism().map_or(4, |n| n.get());
        ProverPool::new(backends, n)
    }

    pub fn backends(&self) -> &[Backend] {
        &self.backends
    }

    pub fn get(&self, name: &str) -> Option<&Backend> {
        self.backends.iter().find(|b| b.name() == name)
    }

    /// Run one backend under the concurrency cap. Time spent waiting for a
    /// permit counts against `timeout`.
    pub async fn run(&self, backend: &Backend, problem: &FofProblem, timeout: Duration, scratch: &Path) -> ProofResult {
        let start = std::time::Instant::now();
        let permit = tokio::time::timeout(timeout, self.permits.acquire()).await;
        let Ok(Ok(_permit)) = permit else {
            return ProofResult::failed(backend.name(), ProofStatus::Timeout, start.elapsed().as_secs_f64());
        };
        let left = timeout.saturating_sub(start.elapsed());
        backend.run(problem, left, scratch).await
    }
}
