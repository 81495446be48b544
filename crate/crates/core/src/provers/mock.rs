use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::{ProofResult, ProofStatus};
use crate::fof::FofProblem;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MockConfig {
    /// Premises that suffice for a proof.
    pub answer: BTreeSet<String>,
    /// Premises reported as used on top of the answer, while the submitted
    /// set is still larger than what would be reported.
    pub extras: BTreeSet<String>,
    /// Seconds to wait per run; the i-th run uses the i-th entry, later runs
    /// the last one. Infinite latency means the prover never answers.
    pub latency: Vec<f64>,
}

impl MockConfig {
    pub fn new<S: AsRef<str>>(answer: &[S], extras: &[S], latency: f64) -> MockConfig {
        MockConfig {
            answer: answer.iter().map(|s| s.as_ref().to_string()).collect(),
            extras: extras.iter().map(|s| s.as_ref().to_string()).collect(),
            latency: vec![latency],
        }
    }

    /// A prover that never returns.
    pub fn hanging() -> MockConfig {
        MockConfig { latency: vec![f64::INFINITY], ..MockConfig::default() }
    }

    /// The verdict for a submitted premise set, without waiting.
    pub fn verdict(&self, submitted: &BTreeSet<String>) -> (ProofStatus, BTreeSet<String>) {
        if !self.answer.is_subset(submitted) {
            return (ProofStatus::GaveUp, BTreeSet::new());
        }
        let with_extras: BTreeSet<String> =
            self.answer.iter().chain(self.extras.intersection(submitted)).cloned().collect();
        if with_extras.len() < submitted.len() {
            (ProofStatus::Proved, with_extras)
        } else {
            (ProofStatus::Proved, self.answer.clone())
        }
    }
}

/// Deterministic stand-in for an external prover, with an invocation counter.
#[derive(Clone, Debug)]
pub struct MockProver {
    pub name: String,
    pub config: MockConfig,
    calls: Arc<AtomicUsize>,
}

impl MockProver {
    pub fn new(name: &str, config: MockConfig) -> MockProver {
        MockProver { name: name.to_string(), config, calls: Arc::new(AtomicUsize::new(0)) }
    }

    /// Number of runs so far (shared between clones).
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub async fn run(&self, problem: &FofProblem, timeout: Duration) -> ProofResult {
        let start = Instant::now();
        let i = self.calls.fetch_add(1, Ordering::SeqCst);
        let latency = self.config.latency.get(i).or(self.config.latency.last()).copied().unwrap_or(0.0);
        let wait = Duration::try_from_secs_f64(latency.max(0.0)).unwrap_or(Duration::MAX);
        if wait >= timeout {
            tokio::time::sleep(timeout).await;
            return ProofResult::failed(&self.name, ProofStatus::Timeout, start.elapsed().as_secs_f64());
        }
        tokio::time::sleep(wait).await;
        let submitted: BTreeSet<String> = problem.premises.iter().map(|(_, n)| n.clone()).collect();
        let (status, used) = self.config.verdict(&submitted);
        ProofResult { prover: self.name.clone(), status, used, time_s: start.elapsed().as_secs_f64(), output: None }
    }
}
