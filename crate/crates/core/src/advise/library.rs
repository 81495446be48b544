use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::strategy::{DepChannel, LearnerSpec};
use super::AdviseError;
use crate::features::{extract_features, ExtractionMethod, FeatureTable};
use crate::learners::{train, LearnerKind, LearnerParams, RankerModel, TrainingExample};
use crate::term::{SymbolTable, Term};

/// One conjunct label as handed over by the project loader.
#[derive(Clone, Debug)]
pub struct LabelRecord {
    pub name: String,
    /// Theorem the conjunct belongs to.
    pub parent: String,
    pub statement: Term,
    /// Labels the HOL proof depends on.
    pub hol_deps: Vec<String>,
    /// Minimized ATP proofs, each a set of labels.
    pub atp_proofs: Vec<Vec<String>>,
}

#[derive(Clone, Debug)]
pub struct Label {
    pub name: String,
    pub parent: String,
    pub statement: Term,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModelKey {
    pub features: ExtractionMethod,
    pub deps: DepChannel,
    pub learner: LearnerSpec,
}

impl ModelKey {
    /// File-name friendly identifier, e.g. `standard-hol-nbayes`.
    pub fn id(&self) -> String {
        format!("{}-{}-{}", self.features.name(), self.deps.name(), self.learner)
    }
}

/// Everything a query needs from a project: labels in chronological order,
/// feature tables for every extraction method, dependency channels and
/// lazily trained rankers.
pub struct Library {
    pub project: String,
    pub symbols: SymbolTable,
    labels: Vec<Label>,
    index: HashMap<String, u32>,
    tables: BTreeMap<ExtractionMethod, FeatureTable>,
    label_features: BTreeMap<ExtractionMethod, Vec<Vec<u32>>>,
    hol_deps: Vec<Vec<u32>>,
    atp_proofs: Vec<Vec<Vec<u32>>>,
    params: LearnerParams,
    models: Mutex<HashMap<ModelKey, Arc<RankerModel>>>,
}

fn serials(index: &HashMap<String, u32>, names: &[String]) -> Result<Vec<u32>, AdviseError> {
    let mut v = names
        .iter()
        .map(|n| index.get(n).copied().ok_or_else(|| AdviseError::UnknownLabel(n.clone())))
        .collect::<Result<Vec<u32>, _>>()?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

impl Library {
    pub fn build(
        project: &str,
        symbols: SymbolTable,
        records: Vec<LabelRecord>,
        params: LearnerParams,
    ) -> Result<Library, AdviseError> {
        let mut index = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.name.clone(), i as u32).is_some() {
                return Err(AdviseError::Config(format!("label {} given twice", r.name)));
            }
        }
        let mut hol_deps = Vec::with_capacity(records.len());
        let mut atp_proofs = Vec::with_capacity(records.len());
        for r in &records {
            hol_deps.push(serials(&index, &r.hol_deps)?);
            atp_proofs.push(r.atp_proofs.iter().map(|p| serials(&index, p)).collect::<Result<Vec<_>, _>>()?);
        }
        let mut tables = BTreeMap::new();
        let mut label_features = BTreeMap::new();
        for m in ExtractionMethod::ALL {
            let mut table = FeatureTable::new();
            let fs: Vec<Vec<u32>> =
                records.iter().map(|r| table.intern(&extract_features(&r.statement, m, &symbols))).collect();
            tables.insert(m, table);
            label_features.insert(m, fs);
        }
        let labels =
            records.into_iter().map(|r| Label { name: r.name, parent: r.parent, statement: r.statement }).collect();
        Ok(Library {
            project: project.to_string(),
            symbols,
            labels,
            index,
            tables,
            label_features,
            hol_deps,
            atp_proofs,
            params,
            models: Mutex::new(HashMap::new()),
        })
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, serial: u32) -> Option<&Label> {
        self.labels.get(serial as usize)
    }

    pub fn serial(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<&Label> {
        self.serial(name).and_then(|s| self.label(s))
    }

    pub fn parent(&self, name: &str) -> Option<&str> {
        self.by_name(name).map(|l| l.parent.as_str())
    }

    pub fn table(&self, method: ExtractionMethod) -> &FeatureTable {
        &self.tables[&method]
    }

    /// Feature serials of every label, in label order.
    pub fn label_features(&self, method: ExtractionMethod) -> &[Vec<u32>] {
        &self.label_features[&method]
    }

    pub fn has_atp_proof(&self, serial: u32) -> bool {
        self.atp_proofs.get(serial as usize).is_some_and(|p| !p.is_empty())
    }

    /// Training examples for one feature method and dependency channel.
    /// ATP examples are one per proof; labels without one still train on
    /// their own statement.
    pub fn examples(&self, method: ExtractionMethod, channel: DepChannel) -> Vec<TrainingExample> {
        let fs = &self.label_features[&method];
        let mut out = Vec::new();
        for (i, features) in fs.iter().enumerate() {
            let ex =
                |deps: &Vec<u32>| TrainingExample { label: i as u32, features: features.clone(), deps: deps.clone() };
            let proofs = &self.atp_proofs[i];
            match channel {
                DepChannel::Hol => out.push(ex(&self.hol_deps[i])),
                DepChannel::Atp if proofs.is_empty() => out.push(ex(&Vec::new())),
                DepChannel::Combined if proofs.is_empty() => out.push(ex(&self.hol_deps[i])),
                DepChannel::Atp | DepChannel::Combined => out.extend(proofs.iter().map(ex)),
            }
        }
        out
    }

    /// The ranker for `key`, training it on first use.
    pub fn model(&self, key: ModelKey) -> Result<Arc<RankerModel>, AdviseError> {
        if let Some(m) = self.models.lock().expect("model table").get(&key) {
            return Ok(m.clone());
        }
        let mut params = self.params;
        if key.learner.kind == LearnerKind::Knn {
            params.knn.k = key.learner.k;
        }
        let model = Arc::new(train(&self.examples(key.features, key.deps), key.learner.kind, &params)?);
        Ok(self.models.lock().expect("model table").entry(key).or_insert(model).clone())
    }

    /// Install a previously trained ranker, e.g. one loaded from a snapshot.
    pub fn insert_model(&self, key: ModelKey, model: RankerModel) {
        self.models.lock().expect("model table").insert(key, Arc::new(model));
    }

    pub fn trained_models(&self) -> Vec<(ModelKey, Arc<RankerModel>)> {
        let mut v: Vec<_> = self.models.lock().expect("model table").iter().map(|(k, m)| (*k, m.clone())).collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    /// Labels ranked for `goal`, best first, at most `n`, all before `cutoff` if given.
    pub fn advise(&self, key: ModelKey, goal: &Term, n: usize, cutoff: Option<u32>) -> Result<Vec<u32>, AdviseError> {
        if self.labels.is_empty() {
            return Ok(Vec::new());
        }
        let query = self.table(key.features).lookup(&extract_features(goal, key.features, &self.symbols));
        let mut ranking = self.model(key)?.rank(&query);
        if let Some(c) = cutoff {
            ranking = ranking.before(c);
        }
        Ok(ranking.top(n).labels().collect())
    }

    pub fn premises(&self, serials: &[u32]) -> Vec<(String, Term)> {
        serials.iter().filter_map(|s| self.label(*s)).map(|l| (l.name.clone(), l.statement.clone())).collect()
    }
}
