//! Projects: corpus ingest, content names, proof reuse, reports and the response cache.

mod cache;
mod content;
mod corpus;
mod html;
mod project;
mod report;
mod store;

pub use cache::{CacheError, FileLock, ResponseCache, StoreOutcome, DEFAULT_LOCK_TIMEOUT};
pub use content::{ContentNamer, HashAlgorithm};
pub use corpus::{
    check_records, parse_corpus, read_records, Conjunct, Corpus, Definition, Item, Position, Record, Theorem,
};
pub use project::{
    ingest, is_locked, list_projects, valid_project_name, IngestOptions, LabelInfo, Project, ProjectStats,
    ProveOptions, Stage, AUX_DIR, CACHE_DIR, DEPS_DIR, FEATURES_DIR, HTML_DIR, MODELS_DIR, USER_DIR,
};
pub use report::{duplicate_definitions, reuse_report, ReuseReport};
pub use store::{CommonStore, Proof};

use crate::advise::AdviseError;
use crate::learners::LearnError;

#[derive(Debug, thiserror::Error)]
pub enum KnowledgeError {
    #[error("{position}: {message}")]
    Corpus { position: String, message: String },
    #[error("invalid project name {0:?}")]
    InvalidName(String),
    #[error("unknown project {0}")]
    UnknownProject(String),
    #[error("project {0} is locked by a running ingest")]
    Locked(String),
    #[error("malformed project data: {0}")]
    Format(String),
    #[error(transparent)]
    Advise(#[from] AdviseError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
