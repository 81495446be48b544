use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Serialize;
use tokio::sync::Semaphore;

use hh_core::advise::{
    default_portfolio, parse_strategies, AdviceConfig, AdviceOutcome, Advisor, Event, ModelKey, StrategyInstance,
};
use hh_core::knowledge::{
    ingest, is_locked, list_projects, valid_project_name, CommonStore, IngestOptions, KnowledgeError, Project,
    ProjectStats, ProveOptions, ResponseCache, Stage,
};
use hh_core::provers::{Backend, MockProver, ProverPool};

use crate::config::ServiceConfig;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("unknown project {0}")]
    UnknownProject(String),
    #[error("invalid project name {0:?}")]
    InvalidName(String),
    #[error("project {0} is being ingested")]
    Locked(String),
    #[error("no project given")]
    NoProject,
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Knowledge(KnowledgeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<KnowledgeError> for ServiceError {
    fn from(e: KnowledgeError) -> Self {
        match e {
            KnowledgeError::UnknownProject(p) => ServiceError::UnknownProject(p),
            KnowledgeError::InvalidName(p) => ServiceError::InvalidName(p),
            KnowledgeError::Locked(p) => ServiceError::Locked(p),
            e => ServiceError::Knowledge(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Running,
    Done,
    Failed,
}

/// Progress of one ingest started over HTTP.
#[derive(Clone, Debug, Serialize)]
pub struct JobStatus {
    pub id: u64,
    pub project: String,
    pub state: JobState,
    /// Name of the stage currently running (or last reached).
    pub stage: Option<String>,
    pub stages: Vec<String>,
    pub error: Option<String>,
    pub stats: Option<ProjectStats>,
}

struct Loaded {
    advisor: Arc<Advisor>,
    stats: ProjectStats,
}

/// Shared state behind the TCP and HTTP front ends.
pub struct Service {
    pub config: ServiceConfig,
    pool: ProverPool,
    strategies: Vec<StrategyInstance>,
    queries: Arc<Semaphore>,
    loaded: tokio::sync::Mutex<HashMap<String, Arc<Loaded>>>,
    jobs: Mutex<BTreeMap<u64, JobStatus>>,
    ingesting: Mutex<HashSet<String>>,
    next_job: AtomicU64,
}

impl Service {
    pub fn new(config: ServiceConfig) -> Result<Service, ServiceError> {
        let mut backends: Vec<Backend> = config.prover.iter().cloned().map(Backend::External).collect();
        backends.extend(config.mock.iter().map(|m| Backend::Mock(MockProver::new(&m.name, m.config()))));
        let pool = match config.max_provers {
            Some(n) => ProverPool::new(backends, n),
            None => ProverPool::with_default_cap(backends),
        };
        let strategies = match &config.strategies {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                parse_strategies(&text).map_err(|e| ServiceError::Config(e.to_string()))?
            }
            None => pool.backends().iter().flat_map(|b| default_portfolio(b.name())).collect(),
        };
        if let Some(s) = strategies.iter().find(|s| pool.get(&s.prover).is_none()) {
            return Err(ServiceError::Config(format!("strategy {} names an unconfigured prover", s.id())));
        }
        Ok(Service {
            queries: Arc::new(Semaphore::new(config.max_concurrent_queries)),
            config,
            pool,
            strategies,
            loaded: tokio::sync::Mutex::new(HashMap::new()),
            jobs: Mutex::new(BTreeMap::new()),
            ingesting: Mutex::new(HashSet::new()),
            next_job: AtomicU64::new(1),
        })
    }

    pub fn pool(&self) -> &ProverPool {
        &self.pool
    }

    pub fn strategies(&self) -> &[StrategyInstance] {
        &self.strategies
    }

    /// Rankers the portfolio needs, trained at ingest time.
    pub fn model_keys(&self) -> Vec<ModelKey> {
        let mut keys: Vec<ModelKey> = self
            .strategies
            .iter()
            .map(|s| ModelKey { features: s.features, deps: s.deps, learner: s.learner })
            .collect();
        keys.sort();
        keys.dedup();
        keys
    }

    pub fn ingest_options(&self) -> IngestOptions {
        IngestOptions {
            common: Some(CommonStore::new(self.config.common_dir())),
            prove: self.config.prove_on_ingest.then(|| ProveOptions {
                pool: self.pool.clone(),
                timeout: Duration::from_secs_f64(self.config.ingest_prover_timeout_s),
            }),
            train: self.model_keys(),
            params: self.config.learner,
            ..IngestOptions::default()
        }
    }

    fn advice_config(&self) -> AdviceConfig {
        AdviceConfig {
            budget: Duration::from_secs_f64(self.config.budget_s),
            progress_interval: Duration::from_secs_f64(self.config.progress_interval_s),
            replay_token: self.config.replay_token.clone(),
            cutoff: None,
        }
    }

    async fn load(&self, name: &str) -> Result<Arc<Loaded>, ServiceError> {
        if !valid_project_name(name) {
            return Err(ServiceError::InvalidName(name.to_string()));
        }
        let mut loaded = self.loaded.lock().await;
        if let Some(l) = loaded.get(name) {
            return Ok(l.clone());
        }
        let root = self.config.root.clone();
        let n = name.to_string();
        let params = self.config.learner;
        let (library, stats, cache_dir) = tokio::task::spawn_blocking(move || {
            let p = Project::open(&root, &n)?;
            let lib = p.library(params)?;
            Ok::<_, KnowledgeError>((lib, p.stats(), p.cache_dir()))
        })
        .await
        .map_err(|e| ServiceError::Io(std::io::Error::other(e)))??;
        let advisor = Advisor {
            library: Arc::new(library),
            pool: self.pool.clone(),
            strategies: self.strategies.clone(),
            tactics: self.config.tactics(),
            config: self.advice_config(),
            cache: Some(ResponseCache::new(cache_dir)),
            scratch: self.config.scratch_dir(),
        };
        let l = Arc::new(Loaded { advisor: Arc::new(advisor), stats });
        loaded.insert(name.to_string(), l.clone());
        Ok(l)
    }

    pub async fn advisor(&self, project: &str) -> Result<Arc<Advisor>, ServiceError> {
        Ok(self.load(project).await?.advisor.clone())
    }

    /// Project used when a query names none.
    pub fn default_project(&self) -> Result<String, ServiceError> {
        if let Some(p) = &self.config.default_project {
            return Ok(p.clone());
        }
        match list_projects(&self.config.root)?.as_slice() {
            [only] => Ok(only.clone()),
            _ => Err(ServiceError::NoProject),
        }
    }

    /// Answer `goal` against `project`, waiting for a query slot first.
    pub async fn query(
        &self,
        project: &str,
        goal: &str,
        budget: Option<Duration>,
        sink: &mut (dyn FnMut(&Event) + Send),
    ) -> Result<AdviceOutcome, ServiceError> {
        let advisor = self.advisor(project).await?;
        let _slot = self.queries.acquire().await.expect("query semaphore is never closed");
        match budget {
            Some(b) => {
                let mut a = (*advisor).clone();
                a.config.budget = b;
                Ok(a.answer(goal, sink).await)
            }
            None => Ok(advisor.answer(goal, sink).await),
        }
    }

    pub async fn projects(&self) -> Result<Vec<ProjectStats>, ServiceError> {
        let mut out = Vec::new();
        for name in list_projects(&self.config.root)? {
            match self.load(&name).await {
                Ok(l) => out.push(l.stats.clone()),
                Err(e) => tracing::warn!(project = name, error = %e, "cannot load project"),
            }
        }
        Ok(out)
    }

    pub fn is_ingesting(&self, name: &str) -> bool {
        self.ingesting.lock().unwrap().contains(name) || is_locked(&self.config.root, name)
    }

    /// Start ingesting `files` as project `name` in the background.
    pub fn submit_ingest(self: &Arc<Self>, name: &str, files: Vec<(String, String)>) -> Result<u64, ServiceError> {
        if !valid_project_name(name) {
            return Err(ServiceError::InvalidName(name.to_string()));
        }
        {
            let mut running = self.ingesting.lock().unwrap();
            if running.contains(name) || is_locked(&self.config.root, name) {
                return Err(ServiceError::Locked(name.to_string()));
            }
            running.insert(name.to_string());
        }
        let id = self.next_job.fetch_add(1, Ordering::Relaxed);
        let status = JobStatus {
            id,
            project: name.to_string(),
            state: JobState::Running,
            stage: None,
            stages: Vec::new(),
            error: None,
            stats: None,
        };
        self.jobs.lock().unwrap().insert(id, status);
        let svc = self.clone();
        let name = name.to_string();
        tokio::spawn(async move {
            let worker = svc.clone();
            let n = name.clone();
            let result = tokio::task::spawn_blocking(move || {
                let opts = worker.ingest_options();
                let mut progress = |s: Stage| {
                    worker.update_job(id, |j| {
                        j.stage = Some(s.name().to_string());
                        j.stages.push(s.name().to_string());
                    })
                };
                ingest(&worker.config.root, &n, &files, &opts, &mut progress)
            })
            .await;
            svc.loaded.lock().await.remove(&name);
            svc.ingesting.lock().unwrap().remove(&name);
            match result {
                Ok(Ok(p)) => {
                    tracing::info!(project = name, "ingest finished");
                    svc.update_job(id, |j| {
                        j.state = JobState::Done;
                        j.stats = Some(p.stats());
                    })
                }
                Ok(Err(e)) => svc.update_job(id, |j| {
                    j.state = JobState::Failed;
                    j.error = Some(e.to_string());
                }),
                Err(e) => svc.update_job(id, |j| {
                    j.state = JobState::Failed;
                    j.error = Some(format!("ingest task failed: {}", e));
                }),
            }
        });
        Ok(id)
    }

    fn update_job(&self, id: u64, f: impl FnOnce(&mut JobStatus)) {
        if let Some(j) = self.jobs.lock().unwrap().get_mut(&id) {
            f(j);
        }
    }

    pub fn job(&self, id: u64) -> Option<JobStatus> {
        self.jobs.lock().unwrap().get(&id).cloned()
    }

    pub fn authorized(&self, token: &str) -> bool {
        self.config.tokens.iter().any(|t| t == token)
    }
}
