//! Premise selectors: sparse naive Bayes and distance-weighted k-NN.

mod conjuncts;
pub mod daemon;
mod knn;
mod naive_bayes;
mod snapshot;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use conjuncts::split_conjuncts;
pub use knn::KnnModel;
pub use naive_bayes::NbModel;

#[derive(Debug, thiserror::Error)]
pub enum LearnError {
    #[error("cannot train on an empty example set")]
    EmptyTrainingSet,
    #[error("invalid model snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One theorem conjunct: its label, statement features and proof dependencies.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub label: u32,
    pub features: Vec<u32>,
    pub deps: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    NaiveBayes,
    Knn,
}

impl LearnerKind {
    pub fn name(self) -> &'static str {
        match self {
            LearnerKind::NaiveBayes => "nbayes",
            LearnerKind::Knn => "knn",
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LearnerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "bayes" | "nbayes" | "naivebayes" | "nb" => Ok(LearnerKind::NaiveBayes),
            "knn" => Ok(LearnerKind::Knn),
            other => Err(format!("unknown learner {:?}", other)),
        }
    }
}

/// Naive Bayes weights: prior, hit and miss weights and the miss penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    pub w_prior: f64,
    pub w_hit: f64,
    pub w_miss: f64,
    pub miss_penalty: f64,
}

impl Default for NbParams {
    fn default() -> Self {
        NbParams { w_prior: 1.0, w_hit: 1.0, w_miss: 1.0, miss_penalty: -15.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
    /// Extra weight of a neighbor's own label.
    pub self_weight: f64,
    /// Weight neighbors by (s_i - s_k) / (s_1 - s_k) instead of raw similarity.
    pub dudani: bool,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 40, self_weight: 2.0, dudani: false }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LearnerParams {
    #[serde(default)]
    pub nb: NbParams,
    #[serde(default)]
    pub knn: KnnParams,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RankerModel {
    NaiveBayes(NbModel),
    Knn(KnnModel),
}

impl RankerModel {
    pub fn kind(&self) -> LearnerKind {
        match self {
            RankerModel::NaiveBayes(_) => LearnerKind::NaiveBayes,
            RankerModel::Knn(_) => LearnerKind::Knn,
        }
    }

    pub fn rank(&self, query: &[u32]) -> Ranking {
        match self {
            RankerModel::NaiveBayes(m) => m.rank(query),
            RankerModel::Knn(m) => m.rank(query),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        snapshot::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<RankerModel, LearnError> {
        snapshot::decode(bytes)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), LearnError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<RankerModel, LearnError> {
        RankerModel::from_bytes(&std::fs::read(path)?)
    }
}

pub fn train(
    examples: &[TrainingExample],
    kind: LearnerKind,
    params: &LearnerParams,
) -> Result<RankerModel, LearnError> {
    if examples.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    Ok(match kind {
        LearnerKind::NaiveBayes => {
            let mut m = NbModel::new(params.nb);
            examples.iter().for_each(|e| m.add_example(e));
            RankerModel::NaiveBayes(m)
        }
        LearnerKind::Knn => {
            let mut m = KnnModel::new(params.knn);
            examples.iter().for_each(|e| m.add_example(e));
            RankerModel::Knn(m)
        }
    })
}

/// All known labels with scores, best first; ties broken by lower serial.
#[derive(Clone, Debug, PartialEq)]
pub struct Ranking(pub Vec<(u32, f64)>);

impl Ranking {
    pub(crate) fn from_scores(mut scores: Vec<(u32, f64)>) -> Ranking {
        scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ranking(scores)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.0
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Drop labels whose serial is not below `cutoff` (labels are numbered chronologically).
    pub fn before(mut self, cutoff: u32) -> Ranking {
        self.0.retain(|e| e.0 < cutoff);
        self
    }

    pub fn top(mut self, n: usize) -> Ranking {
        self.0.truncate(n);
        self
    }
}

/// Anything that can rank labels for a feature query: an in-process model
/// or a remote daemon.
pub trait Ranker: Send + Sync {
    fn ranking(&self, query: &[u32], limit: usize) -> Result<Ranking, LearnError>;
}

impl Ranker for RankerModel {
    fn ranking(&self, query: &[u32], limit: usize) -> Result<Ranking, LearnError> {
        let r = self.rank(query);
        Ok(if limit == 0 { r } else { r.top(limit) })
    }
}

fn sorted_unique(v: &[u32]) -> Vec<u32> {
    let mut v = v.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}
