use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::fof::{FofError, FofProblem};
use crate::provers::ProverPool;

#[derive(Clone, Debug, PartialEq)]
pub struct Minimized {
    pub premises: BTreeSet<String>,
    /// Whether `premises` was itself re-proved by some backend.
    pub verified: bool,
    /// Sizes of the successively adopted sets.
    pub steps: Vec<usize>,
    /// Rounds of re-proving performed.
    pub iterations: usize,
    /// Prover invocations over all rounds.
    pub runs: usize,
}

/// Pseudo/cross-minimization: re-run every backend on exactly the current
/// premise set and adopt the smallest strictly smaller used set, until the
/// size stops decreasing. A failed re-run keeps the last verified set.
/// `on_step` sees the size of each newly adopted set.
pub async fn minimize<F>(
    pool: &ProverPool,
    build: F,
    used: BTreeSet<String>,
    per_run: Duration,
    deadline: Instant,
    scratch: &Path,
    mut on_step: impl FnMut(usize),
) -> Minimized
where
    F: Fn(&BTreeSet<String>) -> Result<FofProblem, FofError>,
{
    let mut out = Minimized { premises: used.clone(), verified: false, steps: Vec::new(), iterations: 0, runs: 0 };
    let mut current = used;
    for _ in 0..=out.premises.len() {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            break;
        }
        let problem = match build(&current) {
            Ok(p) => p,
            Err(e) => {
                tracing::warn!(error = %e, "cannot encode minimization problem");
                break;
            }
        };
        let timeout = per_run.min(left);
        let runs = pool.backends().iter().map(|b| pool.run(b, &problem, timeout, scratch));
        let results = futures::future::join_all(runs).await;
        out.iterations += 1;
        out.runs += results.len();
        let best = results.iter().filter(|r| r.is_proved()).min_by_key(|r| r.used.len());
        let Some(best) = best else {
            break;
        };
        out.premises = current.clone();
        out.verified = true;
        if best.used.len() >= current.len() {
            break;
        }
        current = best.used.clone();
        out.steps.push(current.len());
        on_step(current.len());
    }
    out
}
