use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::cache::{CacheError, FileLock};
use super::content::{ContentNamer, HashAlgorithm};
use super::corpus::{parse_corpus, Corpus, Item};
use super::store::{CommonStore, Proof};
use super::{html, KnowledgeError};
use crate::advise::{minimize, LabelRecord, Library, ModelKey};
use crate::features::{write_feature_lines, ExtractionMethod, FeatureTable};
use crate::fof::encode_problem_with;
use crate::learners::{LearnerParams, RankerModel};
use crate::provers::ProverPool;
use crate::term::{print_term, PrintOptions, Term, VarMode};

pub const USER_DIR: &str = "user";
pub const FEATURES_DIR: &str = "features";
pub const DEPS_DIR: &str = "deps";
pub const CACHE_DIR: &str = "cache";
pub const AUX_DIR: &str = "aux";
pub const HTML_DIR: &str = "html";
pub const MODELS_DIR: &str = "models";
const META_FILE: &str = "project.json";

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Ingest stages in execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Parse,
    Statements,
    Features,
    HolDeps,
    Import,
    AtpProofs,
    Html,
    Train,
    Done,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Parse => "parse and typecheck",
            Stage::Statements => "export statements with content hashes",
            Stage::Features => "export features",
            Stage::HolDeps => "record HOL dependencies",
            Stage::Import => "import compatible proofs",
            Stage::AtpProofs => "ATP proofs of HOL dependencies",
            Stage::Html => "HTML pages",
            Stage::Train => "train rankers",
            Stage::Done => "done",
        }
    }
}

/// Project names double as directory names.
pub fn valid_project_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && !name.starts_with('.')
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.')
}

#[derive(Clone, Debug)]
pub struct LabelInfo {
    pub label: String,
    pub parent: String,
    pub statement: Term,
    /// Content name of the conjunct.
    pub content: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProjectStats {
    pub name: String,
    pub theorems: usize,
    pub labels: usize,
    pub definitions: usize,
    pub atp_proved: usize,
    pub atp_proofs: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    name: String,
    files: Vec<String>,
    sha256: bool,
    models: Vec<ModelKey>,
}

/// Prover settings for proving theorems from their HOL dependencies during ingest.
#[derive(Clone, Debug)]
pub struct ProveOptions {
    pub pool: ProverPool,
    pub timeout: Duration,
}

#[derive(Clone, Debug, Default)]
pub struct IngestOptions {
    pub algorithm: HashAlgorithm,
    pub common: Option<CommonStore>,
    pub prove: Option<ProveOptions>,
    /// Rankers to train and snapshot.
    pub train: Vec<ModelKey>,
    pub params: LearnerParams,
}

#[derive(Debug)]
pub struct Project {
    pub name: String,
    pub dir: PathBuf,
    pub corpus: Corpus,
    pub algorithm: HashAlgorithm,
    /// Conjunct labels in chronological order.
    pub labels: Vec<LabelInfo>,
    /// Whole-statement content names of theorems.
    pub theorem_content: BTreeMap<String, String>,
    /// `(symbol, content name)` of definitions in order.
    pub definition_content: Vec<(String, String)>,
    /// HOL dependencies per label (as labels).
    pub hol_deps: Vec<Vec<String>>,
    /// ATP proofs per label (as labels).
    pub atp_proofs: BTreeMap<String, Vec<Vec<String>>>,
    files: Vec<String>,
    models: Vec<(ModelKey, RankerModel)>,
    index: HashMap<String, usize>,
}

impl Project {
    /// Name everything and expand dependencies to conjunct labels.
    pub fn from_corpus(
        name: &str,
        dir: PathBuf,
        corpus: Corpus,
        algorithm: HashAlgorithm,
    ) -> Result<Project, KnowledgeError> {
        let mut namer = ContentNamer::new(algorithm);
        let mut labels = Vec::new();
        let mut theorem_content = BTreeMap::new();
        let mut definition_content = Vec::new();
        let mut labels_of: HashMap<&str, Vec<String>> = HashMap::new();
        let mut hol_deps = Vec::new();
        let mut index = HashMap::new();
        for item in &corpus.items {
            match item {
                Item::Primitive(_) => {}
                Item::Definition(d) => definition_content.push((d.symbol.clone(), namer.define(&d.symbol, &d.body))),
                Item::Theorem(t) => {
                    theorem_content.insert(t.name.clone(), namer.name_of(&t.statement));
                    let deps: Vec<String> = t.deps.iter().flat_map(|d| labels_of[d.as_str()].clone()).collect();
                    for c in &t.conjuncts {
                        if index.insert(c.label.clone(), labels.len()).is_some() {
                            return Err(KnowledgeError::Corpus {
                                position: t.name.clone(),
                                message: format!("label {} is used twice", c.label),
                            });
                        }
                        labels.push(LabelInfo {
                            label: c.label.clone(),
                            parent: t.name.clone(),
                            statement: c.statement.clone(),
                            content: namer.name_of(&c.statement),
                        });
                        hol_deps.push(deps.clone());
                    }
                    labels_of.insert(&t.name, t.conjuncts.iter().map(|c| c.label.clone()).collect());
                }
            }
        }
        Ok(Project {
            name: name.to_string(),
            dir,
            corpus,
            algorithm,
            labels,
            theorem_content,
            definition_content,
            hol_deps,
            atp_proofs: BTreeMap::new(),
            files: Vec::new(),
            models: Vec::new(),
            index,
        })
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn stats(&self) -> ProjectStats {
        ProjectStats {
            name: self.name.clone(),
            theorems: self.corpus.theorems().count(),
            labels: self.labels.len(),
            definitions: self.definition_content.len(),
            atp_proved: self.atp_proofs.values().filter(|p| !p.is_empty()).count(),
            atp_proofs: self.atp_proofs.values().map(Vec::len).sum(),
        }
    }

    pub fn display(&self, t: &Term) -> String {
        print_term(t, PrintOptions { mode: VarMode::Diff, annotate: false }, &self.corpus.symbols)
    }

    /// Add a proof unless already present. Dependencies must precede the label.
    pub fn add_atp_proof(&mut self, label: &str, deps: Vec<String>) -> bool {
        let (Some(pos), true) = (self.position(label), deps.iter().all(|d| self.position(d).is_some())) else {
            return false;
        };
        if deps.iter().any(|d| self.position(d).unwrap() >= pos) {
            return false;
        }
        let mut deps = deps;
        deps.sort_by_key(|d| self.position(d));
        deps.dedup();
        let proofs = self.atp_proofs.entry(label.to_string()).or_default();
        if proofs.contains(&deps) {
            return false;
        }
        proofs.push(deps);
        true
    }

    /// Import every stored proof whose dependencies all occur in this
    /// project before the proved conjunct. Returns the number imported.
    pub fn reuse_compatible(&mut self, store: &CommonStore) -> Result<usize, KnowledgeError> {
        let mut first_with: HashMap<&str, usize> = HashMap::new();
        for (i, l) in self.labels.iter().enumerate() {
            first_with.entry(l.content.as_str()).or_insert(i);
        }
        let mut imports = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            for proof in store.proofs(&l.content)? {
                let deps: Option<Vec<usize>> = proof.iter().map(|c| first_with.get(c.as_str()).copied()).collect();
                match deps {
                    Some(deps) if deps.iter().all(|d| *d < i) => {
                        imports.push((l.label.clone(), deps.iter().map(|d| self.labels[*d].label.clone()).collect()))
                    }
                    _ => {}
                }
            }
        }
        let mut n = 0;
        for (label, deps) in imports {
            n += self.add_atp_proof(&label, deps) as usize;
        }
        debug_assert!(self.proofs_respect_chronology());
        Ok(n)
    }

    /// Every ATP dependency precedes the conjunct it proves, so the proof
    /// graph is acyclic.
    pub fn proofs_respect_chronology(&self) -> bool {
        self.atp_proofs.iter().all(|(l, ps)| {
            let pos = self.position(l);
            pos.is_some() && ps.iter().flatten().all(|d| self.position(d).is_some_and(|p| Some(p) < pos))
        })
    }

    /// ATP proofs keyed and expressed by content names.
    pub fn content_proofs(&self) -> BTreeMap<String, Vec<Proof>> {
        let mut out: BTreeMap<String, Vec<Proof>> = BTreeMap::new();
        for (label, proofs) in &self.atp_proofs {
            let content = &self.labels[self.index[label]].content;
            let entry = out.entry(content.clone()).or_default();
            for p in proofs {
                let cp: Proof = p.iter().map(|d| self.labels[self.index[d]].content.clone()).collect();
                if !entry.contains(&cp) {
                    entry.push(cp);
                }
            }
        }
        out
    }

    pub fn export_proofs(&self, store: &CommonStore) -> Result<usize, KnowledgeError> {
        store.add(&self.content_proofs())
    }

    /// Try to prove every conjunct from its HOL dependencies and keep the
    /// minimized proofs. Returns the number of new proofs.
    pub async fn prove_hol_problems(&mut self, opts: &ProveOptions) -> Result<usize, KnowledgeError> {
        let scratch = self.dir.join(AUX_DIR).join("atp");
        let mut found = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            let deps = &self.hol_deps[i];
            if deps.is_empty() || self.atp_proofs.contains_key(&l.label) {
                continue;
            }
            let premises: Vec<(String, Term)> =
                deps.iter().map(|d| (d.clone(), self.labels[self.index[d]].statement.clone())).collect();
            let header = vec![format!("hh: project={} strategy=hol-deps", self.name)];
            let build = |set: &BTreeSet<String>| {
                let ps: Vec<(String, Term)> = premises.iter().filter(|(n, _)| set.contains(n)).cloned().collect();
                encode_problem_with(&l.statement, &ps, header.clone())
            };
            let all: BTreeSet<String> = deps.iter().cloned().collect();
            let deadline = std::time::Instant::now() + opts.timeout * 4;
            let m = minimize(&opts.pool, build, all, opts.timeout, deadline, &scratch, |_| {}).await;
            if m.verified {
                found.push((l.label.clone(), m.premises.into_iter().collect::<Vec<_>>()));
            }
        }
        let mut n = 0;
        for (label, deps) in found {
            n += self.add_atp_proof(&label, deps) as usize;
        }
        Ok(n)
    }

    /// Label records for the query-side library.
    pub fn label_records(&self) -> Vec<LabelRecord> {
        self.labels
            .iter()
            .zip(&self.hol_deps)
            .map(|(l, deps)| LabelRecord {
                name: l.label.clone(),
                parent: l.parent.clone(),
                statement: l.statement.clone(),
                hol_deps: deps.clone(),
                atp_proofs: self.atp_proofs.get(&l.label).cloned().unwrap_or_default(),
            })
            .collect()
    }

    /// The query-side view, with snapshotted rankers installed.
    pub fn library(&self, params: LearnerParams) -> Result<Library, KnowledgeError> {
        let lib = Library::build(&self.name, self.corpus.symbols.clone(), self.label_records(), params)?;
        for (k, m) in &self.models {
            lib.insert_model(*k, m.clone());
        }
        Ok(lib)
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.dir.join(CACHE_DIR)
    }

    pub fn html_dir(&self) -> PathBuf {
        self.dir.join(HTML_DIR)
    }

    fn write_files(
        &self,
        dir: &Path,
        user_files: &[(String, String)],
        library: &Library,
    ) -> Result<(), KnowledgeError> {
        for sub in [USER_DIR, FEATURES_DIR, DEPS_DIR, CACHE_DIR, AUX_DIR, HTML_DIR, MODELS_DIR] {
            fs::create_dir_all(dir.join(sub))?;
        }
        for (name, text) in user_files {
            fs::write(dir.join(USER_DIR).join(name), text)?;
        }

        let namer = ContentNamer::new(self.algorithm);
        let mut statements = String::new();
        for l in &self.labels {
            statements.push_str(&format!("{}\t{}\t{}\n", l.content, l.label, namer.normalized(&l.statement)));
        }
        fs::write(dir.join(AUX_DIR).join("statements.tsv"), statements)?;
        let mut theorems = String::new();
        for t in self.corpus.theorems() {
            theorems.push_str(&format!("{}\t{}\n", self.theorem_content[&t.name], t.name));
        }
        fs::write(dir.join(AUX_DIR).join("theorems.tsv"), theorems)?;
        let mut defs = String::new();
        for (s, c) in &self.definition_content {
            defs.push_str(&format!("{}\t{}\n", c, s));
        }
        fs::write(dir.join(AUX_DIR).join("definitions.tsv"), defs)?;

        let mut label_table = FeatureTable::new();
        for l in &self.labels {
            label_table.insert(&l.label);
        }
        label_table.save(&dir.join(FEATURES_DIR).join("labels.table"))?;
        for m in ExtractionMethod::ALL {
            library.table(m).save(&dir.join(FEATURES_DIR).join(format!("{}.table", m.name())))?;
            let records: Vec<(u32, Vec<u32>)> =
                library.label_features(m).iter().enumerate().map(|(i, f)| (i as u32, f.clone())).collect();
            let w = BufWriter::new(fs::File::create(dir.join(FEATURES_DIR).join(format!("{}.features", m.name())))?);
            write_feature_lines(w, &records)?;
        }

        let mut hol = String::new();
        for (l, deps) in self.labels.iter().zip(&self.hol_deps) {
            hol.push_str(&format!("{}: {}\n", l.label, deps.join(" ")));
        }
        fs::write(dir.join(DEPS_DIR).join("hol.deps"), hol)?;
        fs::write(dir.join(DEPS_DIR).join("atp.deps"), self.atp_text())?;

        html::write_site(self, &dir.join(HTML_DIR))?;
        Ok(())
    }

    fn atp_text(&self) -> String {
        let mut atp = String::new();
        for l in &self.labels {
            for p in self.atp_proofs.get(&l.label).into_iter().flatten() {
                atp.push_str(&format!("{}: {}\n", l.label, p.join(" ")));
            }
        }
        atp
    }

    fn write_models(&self, dir: &Path) -> Result<(), KnowledgeError> {
        for (k, m) in &self.models {
            m.save(&dir.join(MODELS_DIR).join(format!("{}.model", k.id())))?;
        }
        Ok(())
    }

    fn write_meta(&self, dir: &Path) -> Result<(), KnowledgeError> {
        let meta = Meta {
            name: self.name.clone(),
            files: self.files.clone(),
            sha256: self.algorithm == HashAlgorithm::Sha256,
            models: self.models.iter().map(|(k, _)| *k).collect(),
        };
        fs::write(dir.join(META_FILE), serde_json::to_string_pretty(&meta).expect("metadata serializes"))?;
        Ok(())
    }

    /// Persist newly found ATP proofs of an existing project.
    pub fn save_atp_proofs(&self) -> Result<(), KnowledgeError> {
        fs::write(self.dir.join(DEPS_DIR).join("atp.deps"), self.atp_text())?;
        Ok(())
    }

    /// Reload a project written by [`ingest`].
    pub fn open(root: &Path, name: &str) -> Result<Project, KnowledgeError> {
        if !valid_project_name(name) {
            return Err(KnowledgeError::InvalidName(name.to_string()));
        }
        let dir = root.join(name);
        let meta_text = match fs::read_to_string(dir.join(META_FILE)) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(KnowledgeError::UnknownProject(name.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        let meta: Meta = serde_json::from_str(&meta_text).map_err(|e| KnowledgeError::Format(e.to_string()))?;
        let mut files = Vec::new();
        for f in &meta.files {
            files.push((f.clone(), fs::read_to_string(dir.join(USER_DIR).join(f))?));
        }
        let algorithm = if meta.sha256 { HashAlgorithm::Sha256 } else { HashAlgorithm::Md5 };
        let mut p = Project::from_corpus(name, dir.clone(), parse_corpus(&files)?, algorithm)?;
        p.files = meta.files;
        let atp = fs::read_to_string(dir.join(DEPS_DIR).join("atp.deps"))?;
        for line in atp.lines() {
            let (label, deps) =
                line.split_once(':').ok_or_else(|| KnowledgeError::Format(format!("bad proof line {:?}", line)))?;
            p.add_atp_proof(label.trim(), deps.split_whitespace().map(str::to_string).collect());
        }
        for k in meta.models {
            let path = dir.join(MODELS_DIR).join(format!("{}.model", k.id()));
            p.models.push((k, RankerModel::load(&path)?));
        }
        Ok(p)
    }
}

/// Project directories under `root`, sorted.
pub fn list_projects(root: &Path) -> std::io::Result<Vec<String>> {
    let mut out = Vec::new();
    let rd = match fs::read_dir(root) {
        Ok(rd) => rd,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(e),
    };
    for e in rd {
        let e = e?;
        let name = e.file_name().to_string_lossy().into_owned();
        if valid_project_name(&name) && e.path().join(META_FILE).exists() {
            out.push(name);
        }
    }
    out.sort();
    Ok(out)
}

fn lock_path(root: &Path, name: &str) -> PathBuf {
    root.join(format!(".{}.lock", name))
}

/// Whether an ingest of `name` currently holds the project lock.
pub fn is_locked(root: &Path, name: &str) -> bool {
    matches!(FileLock::acquire(&lock_path(root, name), true, Duration::ZERO), Err(CacheError::LockTimeout(_)))
}

fn user_file_name(i: usize, name: &str) -> String {
    let base = Path::new(name).file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let clean: String =
        base.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect();
    format!("{:02}-{}", i, if clean.is_empty() { "corpus.jsonl".to_string() } else { clean })
}

/// Create or replace project `name` under `root` from corpus files given as
/// `(file name, text)`. All output is built in a scratch directory and only
/// swapped in when every stage succeeded.
pub fn ingest(
    root: &Path,
    name: &str,
    files: &[(String, String)],
    opts: &IngestOptions,
    progress: &mut dyn FnMut(Stage),
) -> Result<Project, KnowledgeError> {
    if !valid_project_name(name) {
        return Err(KnowledgeError::InvalidName(name.to_string()));
    }
    fs::create_dir_all(root)?;
    let _lock = FileLock::acquire(&lock_path(root, name), true, Duration::ZERO).map_err(|e| match e {
        CacheError::LockTimeout(_) => KnowledgeError::Locked(name.to_string()),
        CacheError::Io(e) => KnowledgeError::Io(e),
    })?;
    let tmp =
        root.join(format!(".{}.tmp-{}-{}", name, std::process::id(), TMP_COUNTER.fetch_add(1, Ordering::Relaxed)));
    let result = build(&tmp, root, name, files, opts, progress);
    let project = match result {
        Ok(p) => p,
        Err(e) => {
            let _ = fs::remove_dir_all(&tmp);
            return Err(e);
        }
    };
    let dir = root.join(name);
    let old = root.join(format!(".{}.old-{}", name, std::process::id()));
    if dir.exists() {
        fs::rename(&dir, &old)?;
    }
    fs::rename(&tmp, &dir)?;
    let _ = fs::remove_dir_all(&old);
    let mut project = project;
    project.dir = dir;
    progress(Stage::Done);
    Ok(project)
}

fn build(
    tmp: &Path,
    root: &Path,
    name: &str,
    files: &[(String, String)],
    opts: &IngestOptions,
    progress: &mut dyn FnMut(Stage),
) -> Result<Project, KnowledgeError> {
    progress(Stage::Parse);
    let corpus = parse_corpus(files)?;
    progress(Stage::Statements);
    let mut p = Project::from_corpus(name, root.join(name), corpus, opts.algorithm)?;
    p.dir = tmp.to_path_buf();
    p.files = files.iter().enumerate().map(|(i, (n, _))| user_file_name(i, n)).collect();
    progress(Stage::Features);
    progress(Stage::HolDeps);
    progress(Stage::Import);
    if let Some(store) = &opts.common {
        let n = p.reuse_compatible(store)?;
        tracing::info!(project = name, imported = n, "reused proofs from the common store");
    }
    progress(Stage::AtpProofs);
    if let Some(prove) = &opts.prove {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        let n = rt.block_on(p.prove_hol_problems(prove))?;
        tracing::info!(project = name, proved = n, "proved from HOL dependencies");
    }
    if let Some(store) = &opts.common {
        p.export_proofs(store)?;
    }
    progress(Stage::Html);
    let library = p.library(opts.params)?;
    let user: Vec<(String, String)> = p.files.iter().cloned().zip(files.iter().map(|(_, t)| t.clone())).collect();
    p.write_files(tmp, &user, &library)?;
    progress(Stage::Train);
    for k in opts.train.iter().filter(|_| !p.labels.is_empty()) {
        let m = library.model(*k)?;
        p.models.push((*k, (*m).clone()));
    }
    p.write_models(tmp)?;
    p.write_meta(tmp)?;
    Ok(p)
}
