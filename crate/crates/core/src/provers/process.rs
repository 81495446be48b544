use std::collections::BTreeSet;
use std::path::Path;
use std::process::Stdio;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use tokio::process::Command;

use super::{szs, ProofResult, ProofStatus, ProverSpec};
use crate::fof::{write_tptp, FofProblem};

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Kills the whole process group of a prover when dropped, so that neither
/// timeouts nor cancelled queries leave processes behind.
pub(crate) struct GroupGuard(pub(crate) Option<u32>);

impl Drop for GroupGuard {
    fn drop(&mut self) {
        if let Some(pid) = self.0 {
            // SAFETY: plain syscall; a stale group id only yields ESRCH.
            unsafe {
                libc::killpg(pid as libc::pid_t, libc::SIGKILL);
            }
        }
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Write `problem` under `scratch`, run the prover on it, and read back the
/// SZS status and used premises. The raw output is kept next to the problem.
pub async fn run_external(spec: &ProverSpec, problem: &FofProblem, timeout: Duration, scratch: &Path) -> ProofResult {
    let start = Instant::now();
    let failed = |status| ProofResult::failed(&spec.name, status, start.elapsed().as_secs_f64());
    let limit = timeout.min(Duration::from_secs_f64(spec.timeout));
    if limit.is_zero() {
        return failed(ProofStatus::Timeout);
    }
    let n = RUN_COUNTER.fetch_add(1, Ordering::Relaxed);
    let file = scratch.join(format!("{}-{}-{}.p", sanitize(&spec.name), std::process::id(), n));
    if let Err(e) = tokio::fs::create_dir_all(scratch).await {
        tracing::error!(prover = %spec.name, error = %e, "cannot create scratch directory");
        return failed(ProofStatus::Error);
    }
    if let Err(e) = tokio::fs::write(&file, write_tptp(problem)).await {
        tracing::error!(prover = %spec.name, error = %e, "cannot write problem file");
        return failed(ProofStatus::Error);
    }
    let argv = spec.argv(&file, limit.as_secs_f64().ceil().max(1.0) as u64);
    let mut cmd = Command::new(&argv[0]);
    cmd.args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .kill_on_drop(true);
    let child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => {
            tracing::error!(prover = %spec.name, error = %e, "cannot start prover");
            return failed(ProofStatus::Error);
        }
    };
    let guard = GroupGuard(child.id());
    let waited = tokio::time::timeout(limit, child.wait_with_output()).await;
    drop(guard);
    let output = match waited {
        Err(_) => return failed(ProofStatus::Timeout),
        Ok(Err(e)) => {
            tracing::error!(prover = %spec.name, error = %e, "prover i/o failed");
            return failed(ProofStatus::Error);
        }
        Ok(Ok(out)) => out,
    };
    let mut text = String::from_utf8_lossy(&output.stdout).into_owned();
    text.push_str(&String::from_utf8_lossy(&output.stderr));
    let out_path = file.with_extension("out");
    let kept = tokio::fs::write(&out_path, &text).await.is_ok();

    let axioms: BTreeSet<String> = problem.premises.iter().map(|(id, _)| id.clone()).collect();
    let (status, ids) = szs::parse_output(&text, &axioms);
    let used = ids.iter().filter_map(|id| problem.premise_name(id)).map(str::to_string).collect();
    ProofResult {
        prover: spec.name.clone(),
        status,
        used,
        time_s: start.elapsed().as_secs_f64(),
        output: kept.then_some(out_path),
    }
}
