//! Per-query orchestration: strategy portfolio, decision procedures,
//! minimization and tactic suggestion.

mod events;
mod library;
mod minimize;
mod strategy;
mod tactic;
pub mod taut;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Stdio;
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::FutureExt;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt};
use tokio::process::Command;
use tokio::task::JoinSet;

use crate::fof::{encode_problem_with, FofError, FofProblem};
use crate::knowledge::ResponseCache;
use crate::learners::LearnError;
use crate::provers::{GroupGuard, ProofResult, ProverPool};
use crate::term::{canonical_print, parse_term, Term, TermError, VarMode};

pub use events::{is_transcript_line, render_transcript, Event, REPLAY_SUCCESS, REPLAY_SUGGESTED};
pub use library::{Label, LabelRecord, Library, ModelKey};
pub use minimize::{minimize, Minimized};
pub use strategy::{
    default_portfolio, greedy_cover, parse_strategies, sample_portfolio, DepChannel, LearnerSpec, StrategyInstance,
    DEFAULT_LIMIT_S, DEFAULT_PORTFOLIO_SIZE, SAMPLE_PORTFOLIO,
};
pub use tactic::{emit_tactic, parent_names};
pub use taut::{taut_check, TautResult};

pub const DEFAULT_BUDGET_S: f64 = 30.0;
pub const TAUT_TACTIC: &str = "CONV_TAC TAUT";

#[derive(Debug, thiserror::Error)]
pub enum AdviseError {
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Fof(#[from] FofError),
}

/// A decision procedure run next to the strategy portfolio.
#[derive(Clone, Debug, PartialEq)]
pub enum TacticBackend {
    Taut,
    /// External plug-in: gets the goal text on stdin and answers with one
    /// line; `proved` (any case) means the goal holds.
    External {
        name: String,
        command: Vec<String>,
        tactic: String,
    },
}

impl TacticBackend {
    pub fn name(&self) -> &str {
        match self {
            TacticBackend::Taut => "TAUT",
            TacticBackend::External { name, .. } => name,
        }
    }

    pub fn tactic(&self) -> &str {
        match self {
            TacticBackend::Taut => TAUT_TACTIC,
            TacticBackend::External { tactic, .. } => tactic,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AdviceConfig {
    pub budget: Duration,
    pub progress_interval: Duration,
    /// `SUGGESTED`, or `SUCCESS` for clients expecting the old token.
    pub replay_token: String,
    /// Only labels with a serial below this are ever suggested.
    pub cutoff: Option<u32>,
}

impl Default for AdviceConfig {
    fn default() -> Self {
        AdviceConfig {
            budget: Duration::from_secs_f64(DEFAULT_BUDGET_S),
            progress_interval: Duration::from_secs(1),
            replay_token: REPLAY_SUGGESTED.to_string(),
            cutoff: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdviceStatus {
    Proved,
    NoProof,
    Error,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Timings {
    pub prove_s: f64,
    pub minimize_s: f64,
    pub total_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdviceOutcome {
    pub status: AdviceStatus,
    pub strategy: Option<String>,
    pub prover: Option<String>,
    /// Minimized premise labels.
    pub premises: Vec<String>,
    /// Their parent theorems.
    pub names: Vec<String>,
    pub tactic: Option<String>,
    /// The transcript without progress ticks.
    pub events: Vec<Event>,
    pub cached: bool,
    pub timings: Timings,
}

impl AdviceOutcome {
    fn from_events(events: Vec<Event>, premises: Vec<String>, cached: bool, timings: Timings) -> AdviceOutcome {
        let mut out = AdviceOutcome {
            status: AdviceStatus::NoProof,
            strategy: None,
            prover: None,
            premises,
            names: Vec::new(),
            tactic: None,
            events: Vec::new(),
            cached,
            timings,
        };
        for e in &events {
            match e {
                Event::Theorem { prover, strategy, .. } => {
                    out.prover = Some(prover.clone());
                    out.strategy = Some(strategy.clone());
                }
                Event::Result { names } => out.names = names.clone(),
                Event::Replaying { tactic, .. } => {
                    out.status = AdviceStatus::Proved;
                    out.tactic = Some(tactic.clone());
                }
                Event::Error { .. } => out.status = AdviceStatus::Error,
                _ => {}
            }
        }
        out.events = events;
        out
    }

    pub fn transcript(&self) -> String {
        render_transcript(&self.events)
    }
}

/// Everything needed to answer queries against one project.
#[derive(Clone)]
pub struct Advisor {
    pub library: Arc<Library>,
    pub pool: ProverPool,
    pub strategies: Vec<StrategyInstance>,
    pub tactics: Vec<TacticBackend>,
    pub config: AdviceConfig,
    pub cache: Option<ResponseCache>,
    /// Problem files and prover outputs go here, one subdirectory per query.
    pub scratch: PathBuf,
}

struct Recorder<'a> {
    sink: &'a mut (dyn FnMut(&Event) + Send),
    events: Vec<Event>,
}

impl Recorder<'_> {
    fn push(&mut self, e: Event) {
        (self.sink)(&e);
        if !e.is_progress() {
            self.events.push(e);
        }
    }
}

enum Finding {
    Strategy { order: usize, result: ProofResult, submitted: Vec<String>, id: String },
    Tactic { order: usize, name: String, tactic: String },
    Nothing,
}

impl Finding {
    /// Tie-break key among simultaneous successes.
    fn rank(&self) -> Option<(usize, usize)> {
        match self {
            Finding::Strategy { order, result, .. } if result.is_proved() => Some((result.used.len(), *order)),
            Finding::Tactic { order, .. } => Some((0, *order)),
            _ => None,
        }
    }
}

fn cache_line(e: &Event) -> String {
    serde_json::to_string(e).expect("events serialize")
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl Advisor {
    fn problem_header(&self, strategy: &str) -> Vec<String> {
        vec![format!("hh: project={} strategy={}", self.library.project, strategy)]
    }

    async fn cache_lookup(&self, key: &str) -> Option<Vec<Event>> {
        let cache = self.cache.clone()?;
        let k = key.to_string();
        let lines = match tokio::task::spawn_blocking(move || cache.lookup(&k)).await {
            Ok(Ok(Some(lines))) => lines,
            Ok(Ok(None)) => return None,
            Ok(Err(e)) => {
                tracing::warn!(error = %e, "cache unavailable, answering live");
                return None;
            }
            Err(_) => return None,
        };
        lines.iter().map(|l| serde_json::from_str(l).ok()).collect::<Option<Vec<Event>>>().or_else(|| {
            tracing::warn!(key, "unreadable cache entry ignored");
            None
        })
    }

    async fn cache_store(&self, key: &str, events: &[Event]) {
        let Some(cache) = self.cache.clone() else {
            return;
        };
        let k = key.to_string();
        let lines: Vec<String> = events.iter().map(cache_line).collect();
        match tokio::task::spawn_blocking(move || cache.store(&k, &lines)).await {
            Ok(Ok(_)) => {}
            Ok(Err(e)) => tracing::warn!(error = %e, "cannot write cache entry"),
            Err(e) => tracing::warn!(error = %e, "cache writer failed"),
        }
    }

    /// Answer one query, calling `sink` for every event as it happens.
    pub async fn answer(&self, goal_text: &str, sink: &mut (dyn FnMut(&Event) + Send)) -> AdviceOutcome {
        let start = Instant::now();
        let mut rec = Recorder { sink, events: Vec::new() };
        let text = goal_text.trim();
        if text.is_empty() {
            rec.push(Event::error("empty query"));
            return AdviceOutcome::from_events(rec.events, Vec::new(), false, Timings::default());
        }
        let goal = parse_term(text, &self.library.symbols);
        let key = match &goal {
            Ok(g) => {
                ResponseCache::key(&self.library.project, &canonical_print(g, VarMode::Diff, &self.library.symbols))
            }
            Err(_) => ResponseCache::key(&self.library.project, &format!("unparsed:{}", normalize_whitespace(text))),
        };
        if let Some(events) = self.cache_lookup(&key).await {
            for e in events {
                rec.push(e);
            }
            let timings = Timings { total_s: start.elapsed().as_secs_f64(), ..Timings::default() };
            return AdviceOutcome::from_events(rec.events, Vec::new(), true, timings);
        }
        let goal = match goal {
            Ok(g) => g,
            Err(e) => {
                rec.push(Event::error(e.to_string()));
                self.cache_store(&key, &rec.events).await;
                return AdviceOutcome::from_events(rec.events, Vec::new(), false, Timings::default());
            }
        };
        rec.push(Event::ReadOk);

        let deadline = start + self.config.budget;
        let scratch = self.scratch.join(&key[..12]).join(format!("{}", std::process::id()));
        let mut set = self.launch(&goal, text, deadline, &scratch);
        let mut tick = tokio::time::interval(self.config.progress_interval);
        tick.tick().await;
        let winner = loop {
            tokio::select! {
                biased;
                r = set.join_next() => match r {
                    None => break None,
                    Some(Ok(f)) if f.rank().is_some() => {
                        let mut best = f;
                        while let Some(Some(r)) = set.join_next().now_or_never() {
                            if let Ok(g) = r {
                                if g.rank().is_some() && g.rank() < best.rank() {
                                    best = g;
                                }
                            }
                        }
                        break Some(best);
                    }
                    Some(Ok(_)) => {}
                    Some(Err(e)) => tracing::warn!(error = %e, "strategy task failed"),
                },
                _ = tokio::time::sleep_until(deadline.into()) => break None,
                _ = tick.tick() => rec.push(Event::Progress),
            }
        };
        set.abort_all();
        while set.join_next().await.is_some() {}
        let prove_s = start.elapsed().as_secs_f64();

        let mut timings = Timings { prove_s, ..Timings::default() };
        let mut premises = Vec::new();
        match winner {
            None | Some(Finding::Nothing) => rec.push(Event::NoProof),
            Some(Finding::Tactic { name, tactic, .. }) => {
                rec.push(Event::Theorem { time_s: prove_s, prover: name.clone(), hints: 0, strategy: name });
                rec.push(Event::Replaying { time_s: 0.0, token: self.config.replay_token.clone(), tactic });
            }
            Some(Finding::Strategy { result, submitted, id, .. }) => {
                rec.push(Event::Theorem {
                    time_s: prove_s,
                    prover: result.prover.clone(),
                    hints: submitted.len(),
                    strategy: id.clone(),
                });
                let min_start = Instant::now();
                rec.push(Event::Minimizing { current: result.used.len() });
                let header = self.problem_header(&format!("{}-minimize", id));
                let build = |set: &BTreeSet<String>| -> Result<FofProblem, FofError> {
                    let ps: Vec<(String, Term)> = submitted
                        .iter()
                        .filter(|n| set.contains(*n))
                        .filter_map(|n| self.library.by_name(n).map(|l| (n.clone(), l.statement.clone())))
                        .collect();
                    encode_problem_with(&goal, &ps, header.clone())
                };
                let per_run = Duration::from_secs_f64(DEFAULT_LIMIT_S);
                let min = minimize(&self.pool, build, result.used.clone(), per_run, deadline, &scratch, |k| {
                    rec.push(Event::Minimizing { current: k })
                })
                .await;
                premises = submitted.iter().filter(|n| min.premises.contains(*n)).cloned().collect();
                match parent_names(&premises, |l| self.library.parent(l)) {
                    Ok(names) => {
                        let tactic = format!("MESON_TAC[{}]", names.join(";"));
                        rec.push(Event::Result { names });
                        let time_s = min_start.elapsed().as_secs_f64();
                        rec.push(Event::Replaying { time_s, token: self.config.replay_token.clone(), tactic });
                    }
                    Err(e) => rec.push(Event::error(e.to_string())),
                }
                timings.minimize_s = min_start.elapsed().as_secs_f64();
            }
        }
        timings.total_s = start.elapsed().as_secs_f64();
        let _ = std::fs::remove_dir_all(&scratch);
        let outcome = AdviceOutcome::from_events(rec.events, premises, false, timings);
        if outcome.status != AdviceStatus::NoProof {
            self.cache_store(&key, &outcome.events).await;
        }
        outcome
    }

    fn launch(&self, goal: &Term, text: &str, deadline: Instant, scratch: &std::path::Path) -> JoinSet<Finding> {
        let mut set = JoinSet::new();
        for (order, t) in self.tactics.iter().enumerate() {
            let t = t.clone();
            let goal = goal.clone();
            let text = text.to_string();
            set.spawn(async move {
                let left = deadline.saturating_duration_since(Instant::now());
                let proved = match &t {
                    TacticBackend::Taut => {
                        let g = goal.clone();
                        tokio::task::spawn_blocking(move || taut_check(&g, left)).await.ok() == Some(TautResult::Proved)
                    }
                    TacticBackend::External { command, .. } => run_plugin(command, &text, left).await,
                };
                if proved {
                    Finding::Tactic { order, name: t.name().to_string(), tactic: t.tactic().to_string() }
                } else {
                    Finding::Nothing
                }
            });
        }
        for (i, inst) in self.strategies.iter().enumerate() {
            let order = self.tactics.len() + i;
            let Some(backend) = self.pool.get(&inst.prover).cloned() else {
                tracing::warn!(prover = %inst.prover, "strategy names an unknown prover; skipped");
                continue;
            };
            let lib = self.library.clone();
            let pool = self.pool.clone();
            let inst = inst.clone();
            let goal = goal.clone();
            let cutoff = self.config.cutoff;
            let scratch = scratch.to_path_buf();
            let id = inst.id();
            let header = self.problem_header(&id);
            set.spawn(async move {
                let key = ModelKey { features: inst.features, deps: inst.deps, learner: inst.learner };
                let selected = tokio::task::spawn_blocking(move || {
                    let serials = lib.advise(key, &goal, inst.premises, cutoff)?;
                    let premises = lib.premises(&serials);
                    let problem = encode_problem_with(&goal, &premises, header)?;
                    Ok::<_, AdviseError>((premises.into_iter().map(|(n, _)| n).collect::<Vec<_>>(), problem))
                })
                .await;
                let (submitted, problem) = match selected {
                    Ok(Ok(x)) => x,
                    Ok(Err(e)) => {
                        tracing::warn!(strategy = %id, error = %e, "premise selection failed");
                        return Finding::Nothing;
                    }
                    Err(_) => return Finding::Nothing,
                };
                let left = deadline.saturating_duration_since(Instant::now());
                let timeout = left.min(Duration::from_secs_f64(inst.limit_s));
                let result = pool.run(&backend, &problem, timeout, &scratch).await;
                Finding::Strategy { order, result, submitted, id }
            });
        }
        set
    }
}

/// Run an external decision procedure on `goal`; true iff it answers `proved`.
async fn run_plugin(command: &[String], goal: &str, timeout: Duration) -> bool {
    let Some((prog, args)) = command.split_first() else {
        return false;
    };
    let mut cmd = Command::new(prog);
    cmd.args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .process_group(0)
        .kill_on_drop(true);
    let mut child = match cmd.spawn() {
        Ok(c) => c,
        Err(e) => {
            tracing::warn!(plugin = %prog, error = %e, "cannot start tactic plug-in");
            return false;
        }
    };
    let _guard = GroupGuard(child.id());
    let run = async {
        let mut stdin = child.stdin.take()?;
        stdin.write_all(goal.as_bytes()).await.ok()?;
        stdin.write_all(b"\n").await.ok()?;
        drop(stdin);
        let mut line = String::new();
        tokio::io::BufReader::new(child.stdout.take()?).read_line(&mut line).await.ok()?;
        Some(line)
    };
    match tokio::time::timeout(timeout, run).await {
        Ok(Some(line)) => line.trim().to_ascii_lowercase().starts_with("proved"),
        _ => false,
    }
}

/// Answer `goal_text` with `advisor`, collecting the events.
pub async fn answer_query(advisor: &Advisor, goal_text: &str) -> AdviceOutcome {
    advisor.answer(goal_text, &mut |_| {}).await
}

/// Suggestion for a minimized label list, via the library's parent map.
pub fn suggest(library: &Library, labels: &[String]) -> Result<String, AdviseError> {
    emit_tactic(labels, |l| library.parent(l))
}
