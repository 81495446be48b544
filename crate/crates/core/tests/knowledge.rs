use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use hh_core::advise::{DepChannel, LearnerSpec, ModelKey};
use hh_core::features::ExtractionMethod;
use hh_core::knowledge::{
    duplicate_definitions, ingest, is_locked, list_projects, parse_corpus, reuse_report, CommonStore, ContentNamer,
    FileLock, HashAlgorithm, IngestOptions, KnowledgeError, Project, ProveOptions, ResponseCache, Stage, StoreOutcome,
};
use hh_core::learners::LearnerParams;
use hh_core::provers::{Backend, MockConfig, MockProver, ProverPool};
use hh_core::term::{canonical_print, parse_term, SymbolTable, VarMode};
use hh_core::testkit::{generated_corpus, toy_corpus};

fn files(text: &str) -> Vec<(String, String)> {
    vec![("corpus.jsonl".to_string(), text.to_string())]
}

fn no_progress() -> impl FnMut(Stage) {
    |_| {}
}

fn plain(root: &Path, name: &str, text: &str) -> Project {
    ingest(root, name, &files(text), &IngestOptions::default(), &mut no_progress()).unwrap()
}

/// A mock that proves anything mentioning ADD_SYM from ADD_SYM alone.
fn add_sym_prover() -> ProveOptions {
    let mock = MockProver::new("M", MockConfig::new(&["ADD_SYM"], &["ADD_ASSOC"], 0.0));
    ProveOptions { pool: ProverPool::new(vec![Backend::Mock(mock)], 4), timeout: Duration::from_secs(2) }
}

fn proved(root: &Path, name: &str, text: &str, store: &CommonStore) -> Project {
    let opts = IngestOptions { common: Some(store.clone()), prove: Some(add_sym_prover()), ..IngestOptions::default() };
    ingest(root, name, &files(text), &opts, &mut no_progress()).unwrap()
}

fn def(symbol: &str, ty: &str, body: &str) -> String {
    serde_json::json!({"kind": "def", "symbol": symbol, "type": ty, "body": body}).to_string() + "\n"
}

fn thm(name: &str, statement: &str, deps: &[&str]) -> String {
    serde_json::json!({"kind": "thm", "name": name, "statement": statement, "deps": deps}).to_string() + "\n"
}

fn definition_names(text: &str) -> BTreeMap<String, String> {
    let corpus = parse_corpus(&files(text)).unwrap();
    let p = Project::from_corpus("p", "/nonexistent".into(), corpus, HashAlgorithm::Md5).unwrap();
    p.definition_content.into_iter().collect()
}

// ---------------------------------------------------------------- content names

#[test]
fn alpha_and_whitespace_variants_share_a_content_name() {
    let a = definition_names(&def("d", "num->num->num", "\\x y. x + y * 2"));
    let b = definition_names(&def("d", "num->num->num", "\\a   b.a+b*2"));
    assert_eq!(a["d"], b["d"]);
    assert_eq!(a["d"].len(), 32);
    assert!(a["d"].bytes().all(|c| c.is_ascii_hexdigit()));
    let c = definition_names(&def("d", "num->num->num", "\\x y. x * y * 2"));
    assert_ne!(a["d"], c["d"]);
}

#[test]
fn renaming_a_dependency_keeps_the_content_name_of_its_user() {
    let v1 = def("d1", "num->num", "\\x. x + 1") + &def("d2", "num->num", "\\x. d1 (d1 x)");
    let v2 = def("succ1", "num->num", "\\y. y + 1") + &def("d2", "num->num", "\\z. succ1 (succ1 z)");
    let (a, b) = (definition_names(&v1), definition_names(&v2));
    assert_eq!(a["d2"], b["d2"]);
    assert_eq!(a["d1"], b["succ1"]);
}

#[test]
fn theorem_statements_hash_modulo_variable_names() {
    let symbols = SymbolTable::prelude();
    let namer = ContentNamer::new(HashAlgorithm::Md5);
    let a = parse_term("!m n. m + n = n + m", &symbols).unwrap();
    let b = parse_term("!p q.p+q=q+p", &symbols).unwrap();
    assert_eq!(namer.name_of(&a), namer.name_of(&b));
    let sha = ContentNamer::new(HashAlgorithm::Sha256);
    assert_eq!(sha.name_of(&a).len(), 64);
}

#[test]
fn same_records_give_same_names_in_two_projects() {
    let dir = tempfile::tempdir().unwrap();
    let a = plain(dir.path(), "alpha", &toy_corpus());
    let b = plain(dir.path(), "beta", &toy_corpus());
    assert_eq!(a.theorem_content, b.theorem_content);
    let names = |p: &Project| p.labels.iter().map(|l| l.content.clone()).collect::<Vec<_>>();
    assert_eq!(names(&a), names(&b));
}

// ---------------------------------------------------------------- reuse

#[test]
fn appended_theorem_keeps_everything_reusable() {
    let dir = tempfile::tempdir().unwrap();
    let store = CommonStore::new(dir.path().join("common"));
    let v1 = proved(dir.path(), "v1", &toy_corpus(), &store);
    // Hand tally: ADD_0, ADD_AC_1, ADD_AC_2 and MUL_ADD mention ADD_SYM among
    // their HOL dependencies, and ADD_AC's conjuncts repeat ADD_SYM and ADD_ASSOC.
    assert_eq!(v1.stats().atp_proofs, 4);
    assert_eq!(store.len().unwrap(), 4);

    let text = toy_corpus() + &thm("MUL_0", "!n. n * 0 = 0", &["MUL_SYM"]);
    let opts = IngestOptions { common: Some(store.clone()), ..IngestOptions::default() };
    let v2 = ingest(dir.path(), "v2", &files(&text), &opts, &mut no_progress()).unwrap();
    assert!(v2.proofs_respect_chronology());

    let r = reuse_report(&v2, &v1);
    assert_eq!((r.unique, r.previous_unique, r.in_previous), (10, 9, 9));
    assert_eq!((r.atp_proofs, r.reusable), (4, 4));
    assert_eq!(r.in_previous_pct(), Some(100.0));
    assert_eq!(r.reusable_pct(), Some(100.0));
    assert_eq!(r.atp_proved, 4);
}

#[test]
fn moving_a_dependency_after_its_user_blocks_the_import() {
    let dir = tempfile::tempdir().unwrap();
    let store = CommonStore::new(dir.path().join("common"));
    proved(dir.path(), "v1", &toy_corpus(), &store);

    let reordered = [
        thm("ADD_ASSOC", "!m n p. m + (n + p) = (m + n) + p", &[]),
        thm("ADD_0", "!n. n + 0 = n", &[]),
        thm("MUL_SYM", "!m n. m * n = n * m", &[]),
        thm("ADD_SYM", "!m n. m + n = n + m", &[]),
        thm("MUL_ADD", "!m n p. m * (n + p) = m * n + m * p", &["MUL_SYM", "ADD_SYM"]),
    ]
    .concat();
    let opts = IngestOptions { common: Some(store.clone()), ..IngestOptions::default() };
    let v3 = ingest(dir.path(), "v3", &files(&reordered), &opts, &mut no_progress()).unwrap();
    assert!(v3.proofs_respect_chronology());
    assert!(!v3.atp_proofs.contains_key("ADD_0"));
    assert_eq!(v3.atp_proofs.get("MUL_ADD"), Some(&vec![vec!["ADD_SYM".to_string()]]));
    assert_eq!(v3.atp_proofs.get("ADD_ASSOC"), None);
}

#[test]
fn missing_dependency_blocks_the_import() {
    let dir = tempfile::tempdir().unwrap();
    let store = CommonStore::new(dir.path().join("common"));
    proved(dir.path(), "v1", &toy_corpus(), &store);
    let text = thm("ADD_0", "!n. n + 0 = n", &[]);
    let opts = IngestOptions { common: Some(store), ..IngestOptions::default() };
    let p = ingest(dir.path(), "lone", &files(&text), &opts, &mut no_progress()).unwrap();
    assert!(p.atp_proofs.is_empty());
}

#[test]
fn report_on_identical_and_disjoint_projects() {
    let dir = tempfile::tempdir().unwrap();
    let store = CommonStore::new(dir.path().join("common"));
    let v1 = proved(dir.path(), "v1", &toy_corpus(), &store);
    let same = reuse_report(&v1, &v1);
    assert_eq!(same.in_previous_pct(), Some(100.0));
    assert_eq!(same.reusable_pct(), Some(100.0));

    let other = plain(dir.path(), "other", &(thm("A", "!x. x <= x", &[]) + &thm("B", "!x. x < SUC x", &["A"])));
    let r = reuse_report(&other, &v1);
    assert_eq!(r.in_previous, 0);
    assert_eq!(r.in_previous_pct(), Some(0.0));
    assert_eq!(r.reusable, 0);
    assert_eq!(r.reusable_pct(), None);
    assert!(r.row().contains("N/A"));
}

#[test]
fn atp_dependencies_are_smaller_than_hol_dependencies() {
    let dir = tempfile::tempdir().unwrap();
    let store = CommonStore::new(dir.path().join("common"));
    let p = proved(dir.path(), "v1", &toy_corpus(), &store);
    let (mut atp, mut hol) = (Vec::new(), Vec::new());
    for (i, l) in p.labels.iter().enumerate() {
        for proof in p.atp_proofs.get(&l.label).into_iter().flatten() {
            atp.push(proof.len() as f64);
            hol.push(p.hol_deps[i].len() as f64);
        }
    }
    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(!atp.is_empty());
    assert!(avg(&atp) <= avg(&hol), "atp {} hol {}", avg(&atp), avg(&hol));
    assert!(avg(&atp) < avg(&hol));
}

#[test]
fn common_store_grows_monotonically_and_reexport_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let store = CommonStore::new(dir.path().join("common"));
    let v1 = proved(dir.path(), "v1", &toy_corpus(), &store);
    let before = store.len().unwrap();
    assert_eq!(v1.export_proofs(&store).unwrap(), 0);
    assert_eq!(store.len().unwrap(), before);
    let snapshot: Vec<_> = fs::read_dir(store.dir())
        .unwrap()
        .flatten()
        .filter(|e| e.path().extension().is_some_and(|x| x == "deps"))
        .map(|e| (e.file_name(), fs::read(e.path()).unwrap()))
        .collect();
    proved(dir.path(), "again", &toy_corpus(), &store);
    assert_eq!(store.len().unwrap(), before);
    for (name, bytes) in snapshot {
        let now = fs::read(store.dir().join(name)).unwrap();
        assert!(now.starts_with(&bytes));
    }
}

// ---------------------------------------------------------------- duplicates

#[test]
fn aliased_definitions_are_grouped() {
    let dir = tempfile::tempdir().unwrap();
    let two = def("ID", "A->A", "\\x. x") + &def("SUCC", "num->num", "\\n. n + 1") + &def("ALIAS", "B->B", "\\y. y");
    let p = plain(dir.path(), "two", &two);
    assert_eq!(duplicate_definitions(&p), vec![vec!["ID".to_string(), "ALIAS".to_string()]]);

    let three = def("ID", "A->A", "\\x. x") + &def("LET_END", "A->A", "\\t. t") + &def("mark_term", "A->A", "\\x. x");
    let p = plain(dir.path(), "three", &three);
    assert_eq!(duplicate_definitions(&p), vec![vec!["ID".to_string(), "LET_END".to_string(), "mark_term".to_string()]]);

    let none = def("ONE", "num->num", "\\n. n + 1") + &def("TWO", "num->num", "\\n. n + 2");
    assert!(duplicate_definitions(&plain(dir.path(), "none", &none)).is_empty());
}

// ---------------------------------------------------------------- ingest

fn all_models() -> Vec<ModelKey> {
    let mut keys = Vec::new();
    for features in ExtractionMethod::ALL {
        for learner in [LearnerSpec::NAIVE_BAYES, LearnerSpec::knn(40)] {
            keys.push(ModelKey { features, deps: DepChannel::Combined, learner });
        }
    }
    keys
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in walk(dir) {
        out.insert(e.strip_prefix(dir).unwrap().to_string_lossy().into_owned(), fs::read(&e).unwrap());
    }
    out
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap().flatten() {
        if e.path().is_dir() {
            out.extend(walk(&e.path()));
        } else {
            out.push(e.path());
        }
    }
    out
}

#[test]
fn eight_theorem_ingest_writes_the_project_layout() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = toy_corpus().lines().take(8).map(|l| format!("{}\n", l)).collect();
    let mut stages = Vec::new();
    let opts = IngestOptions { train: all_models(), ..IngestOptions::default() };
    let p = ingest(dir.path(), "toy", &files(&text), &opts, &mut |s| stages.push(s)).unwrap();
    assert_eq!(p.stats().theorems, 8);
    assert_eq!(stages.first(), Some(&Stage::Parse));
    assert_eq!(stages.last(), Some(&Stage::Done));

    let root = dir.path().join("toy");
    for sub in ["user", "features", "deps", "cache", "aux", "html", "models"] {
        assert!(root.join(sub).is_dir(), "{}", sub);
    }
    for m in ExtractionMethod::ALL {
        assert!(root.join("features").join(format!("{}.features", m.name())).is_file());
        assert!(root.join("features").join(format!("{}.table", m.name())).is_file());
    }
    let hol = fs::read_to_string(root.join("deps/hol.deps")).unwrap();
    assert!(hol.contains("ADD_AC_1: ADD_SYM ADD_ASSOC"));
    assert_eq!(fs::read_dir(root.join("models")).unwrap().count(), 6);
    let index = fs::read_to_string(root.join("html/index.html")).unwrap();
    assert!(index.contains("thm/ADD_5fSYM.html"));
    let page = fs::read_to_string(root.join("html/thm/ADD_5f0.html")).unwrap();
    assert!(page.contains("href=\"../thm/ADD_5fSYM.html\""));
    assert!(page.contains(&p.theorem_content["ADD_0"]));
    assert_eq!(list_projects(dir.path()).unwrap(), vec!["toy".to_string()]);
}

#[test]
fn reingest_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let opts = IngestOptions { train: all_models(), ..IngestOptions::default() };
    ingest(dir.path(), "toy", &files(&toy_corpus()), &opts, &mut no_progress()).unwrap();
    let first = tree(&dir.path().join("toy"));
    ingest(dir.path(), "toy", &files(&toy_corpus()), &opts, &mut no_progress()).unwrap();
    assert_eq!(first, tree(&dir.path().join("toy")));
}

#[test]
fn forward_dependency_is_rejected_with_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let text = thm("A", "!n. n + 0 = n", &["B"]) + &thm("B", "!n. 0 + n = n", &[]);
    let err = ingest(dir.path(), "bad", &files(&text), &IngestOptions::default(), &mut no_progress()).unwrap_err();
    match err {
        KnowledgeError::Corpus { position, message } => {
            assert_eq!(position, "corpus.jsonl:1");
            assert!(message.contains('B'), "{}", message);
        }
        e => panic!("unexpected {:?}", e),
    }
    assert!(!dir.path().join("bad").exists());
    assert!(list_projects(dir.path()).unwrap().is_empty());
}

#[test]
fn failed_reingest_keeps_the_old_project() {
    let dir = tempfile::tempdir().unwrap();
    plain(dir.path(), "toy", &toy_corpus());
    let before = tree(&dir.path().join("toy"));
    let bad = toy_corpus() + "{\"kind\":\"thm\",\"name\":\"X\",\"statement\":\"!n. n +\"}\n";
    assert!(ingest(dir.path(), "toy", &files(&bad), &IngestOptions::default(), &mut no_progress()).is_err());
    assert_eq!(before, tree(&dir.path().join("toy")));
}

#[test]
fn ingest_is_exclusive_per_project() {
    let dir = tempfile::tempdir().unwrap();
    let lock = FileLock::acquire(&dir.path().join(".toy.lock"), true, Duration::ZERO).unwrap();
    assert!(is_locked(dir.path(), "toy"));
    let err =
        ingest(dir.path(), "toy", &files(&toy_corpus()), &IngestOptions::default(), &mut no_progress()).unwrap_err();
    assert!(matches!(err, KnowledgeError::Locked(_)));
    drop(lock);
    assert!(!is_locked(dir.path(), "toy"));
    plain(dir.path(), "toy", &toy_corpus());
}

#[test]
fn invalid_and_unknown_project_names() {
    let dir = tempfile::tempdir().unwrap();
    let err =
        ingest(dir.path(), "../x", &files(&toy_corpus()), &IngestOptions::default(), &mut no_progress()).unwrap_err();
    assert!(matches!(err, KnowledgeError::InvalidName(_)));
    assert!(matches!(Project::open(dir.path(), "nope"), Err(KnowledgeError::UnknownProject(_))));
}

#[test]
fn hundred_theorem_ingest_and_reload_are_fast() {
    let dir = tempfile::tempdir().unwrap();
    let text = generated_corpus(100, 7);
    let opts = IngestOptions { train: all_models(), ..IngestOptions::default() };
    let start = Instant::now();
    let p = ingest(dir.path(), "big", &files(&text), &opts, &mut no_progress()).unwrap();
    let ingest_s = start.elapsed().as_secs_f64();
    assert_eq!(p.stats().theorems, 100);
    assert!(ingest_s < 30.0, "ingest took {:.2}s", ingest_s);

    let start = Instant::now();
    let q = Project::open(dir.path(), "big").unwrap();
    let lib = q.library(LearnerParams::default()).unwrap();
    assert!(start.elapsed() < Duration::from_secs(10));
    assert_eq!(lib.trained_models().len(), 6);
    assert_eq!(q.theorem_content, p.theorem_content);
}

// ---------------------------------------------------------------- cache

#[test]
fn cache_store_then_lookup() {
    let dir = tempfile::tempdir().unwrap();
    let cache = ResponseCache::new(dir.path());
    let lines = vec!["{\"kind\":\"read_ok\"}".to_string(), "{\"kind\":\"no_proof\"}".to_string()];
    let key = ResponseCache::key("toy", "x = x");
    assert_eq!(cache.lookup(&key).unwrap(), None);
    assert_eq!(cache.store(&key, &lines).unwrap(), StoreOutcome::Written);
    assert_eq!(cache.lookup(&key).unwrap(), Some(lines.clone()));
    assert_eq!(cache.store(&key, &["other".to_string()]).unwrap(), StoreOutcome::AlreadyPresent);
    assert_eq!(cache.lookup(&key).unwrap(), Some(lines));
    assert_eq!(cache.clear().unwrap(), 1);
    assert_eq!(cache.lookup(&key).unwrap(), None);
    assert_ne!(ResponseCache::key("toy", "x = x"), ResponseCache::key("other", "x = x"));
}

#[test]
fn whitespace_variants_share_a_key() {
    let symbols = SymbolTable::prelude();
    let key = |s: &str| {
        ResponseCache::key("toy", &canonical_print(&parse_term(s, &symbols).unwrap(), VarMode::Diff, &symbols))
    };
    assert_eq!(key("!m n. m + n = n + m"), key("!m   n.\tm+n = n+m"));
    assert_ne!(key("!m n. m + n = n + m"), key("!m n. m * n = n * m"));
}

#[test]
fn concurrent_writers_leave_one_entry() {
    let dir = tempfile::tempdir().unwrap();
    let key = ResponseCache::key("toy", "goal");
    let writers = 16;
    let barrier = Arc::new(Barrier::new(writers));
    let handles: Vec<_> = (0..writers)
        .map(|i| {
            let cache = ResponseCache::new(dir.path());
            let barrier = barrier.clone();
            let key = key.clone();
            std::thread::spawn(move || {
                let lines: Vec<String> =
                    (0..200).map(|j| format!("writer {} line {} {}", i, j, "x".repeat(64))).collect();
                barrier.wait();
                cache.store(&key, &lines).unwrap()
            })
        })
        .collect();
    let outcomes: Vec<StoreOutcome> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(outcomes.iter().filter(|o| **o == StoreOutcome::Written).count(), 1);
    let cache = ResponseCache::new(dir.path());
    assert_eq!(cache.entries().unwrap().len(), 1);
    let lines = cache.lookup(&key).unwrap().unwrap();
    let writer = lines[0].split(' ').nth(1).unwrap().to_string();
    assert_eq!(lines.len(), 200);
    assert!(lines.iter().all(|l| l.split(' ').nth(1) == Some(writer.as_str())));
}

#[test]
fn held_lock_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut cache = ResponseCache::new(dir.path());
    cache.lock_timeout = Duration::from_millis(50);
    let key = ResponseCache::key("toy", "goal");
    cache.store(&key, &["a".to_string()]).unwrap();
    let _held = FileLock::acquire(&dir.path().join(format!("{}.lock", key)), true, Duration::ZERO).unwrap();
    assert!(cache.lookup(&key).is_err());
    assert!(cache.store(&ResponseCache::key("toy", "goal"), &["b".to_string()]).is_err());
}
