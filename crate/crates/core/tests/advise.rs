use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::{Duration, Instant};

use proptest::prelude::*;

use hh_core::advise::taut::{abstract_atoms, is_valid, Prop};
use hh_core::advise::{
    answer_query, emit_tactic, greedy_cover, is_transcript_line, minimize, parse_strategies, sample_portfolio,
    taut_check, AdviceConfig, AdviceStatus, AdviseError, Advisor, DepChannel, Event, LearnerSpec, Library,
    StrategyInstance, TacticBackend, TautResult, DEFAULT_PORTFOLIO_SIZE,
};
use hh_core::features::ExtractionMethod;
use hh_core::fof::{encode_problem, FofProblem};
use hh_core::knowledge::ResponseCache;
use hh_core::learners::LearnerParams;
use hh_core::provers::{Backend, MockConfig, MockProver, ProverPool, ProverSpec};
use hh_core::term::{parse_term, SymbolTable};
use hh_core::testkit::{processes_matching, toy_records};

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------- TAUT

/// Render a propositional skeleton with atoms `p0..p3` as surface syntax.
fn show(p: &Prop) -> String {
    match p {
        Prop::Const(true) => "T".into(),
        Prop::Const(false) => "F".into(),
        Prop::Atom(i) => format!("p{}", i),
        Prop::Not(a) => format!("~({})", show(a)),
        Prop::And(a, b) => format!("({}) /\\ ({})", show(a), show(b)),
        Prop::Or(a, b) => format!("({}) \\/ ({})", show(a), show(b)),
        Prop::Imp(a, b) => format!("({}) ==> ({})", show(a), show(b)),
        Prop::Iff(a, b) => format!("({}) <=> ({})", show(a), show(b)),
    }
}

fn truth_table(p: &Prop, atoms: usize) -> bool {
    (0..1u32 << atoms).all(|bits| {
        let v: Vec<bool> = (0..atoms).map(|i| bits >> i & 1 == 1).collect();
        p.eval(&v)
    })
}

fn formulas(depth: u32) -> Vec<Prop> {
    let mut leaves: Vec<Prop> = (0..4).map(Prop::Atom).collect();
    leaves.push(Prop::Const(true));
    leaves.push(Prop::Const(false));
    if depth == 0 {
        return leaves;
    }
    let sub = formulas(depth - 1);
    let mut out = sub.clone();
    let bx = Box::new;
    for a in &sub {
        out.push(Prop::Not(bx(a.clone())));
        for b in &sub {
            out.push(Prop::And(bx(a.clone()), bx(b.clone())));
            out.push(Prop::Or(bx(a.clone()), bx(b.clone())));
            out.push(Prop::Imp(bx(a.clone()), bx(b.clone())));
            out.push(Prop::Iff(bx(a.clone()), bx(b.clone())));
        }
    }
    out
}

#[test]
fn taut_examples() {
    let s = SymbolTable::prelude();
    let t = |x: &str| taut_check(&parse_term(x, &s).unwrap(), Duration::from_secs(5));
    assert_eq!(t("(A ==> B ==> C) ==> (A ==> B) ==> (A ==> C)"), TautResult::Proved);
    assert_eq!(t("A ==> B"), TautResult::Unknown);
    assert_eq!(t("x = y \\/ ~(x = y)"), TautResult::Proved);
    assert_eq!(t("(!x. P x) ==> (!x. P x)"), TautResult::Proved);
    assert_eq!(t("(!x. P x) ==> (!y. P y)"), TautResult::Unknown);
    assert_eq!(t("(p <=> q) ==> (q <=> p)"), TautResult::Proved);
}

#[test]
fn taut_matches_truth_table_on_all_depth_two_formulas() {
    let all = formulas(2);
    assert!(all.len() > 90_000);
    let far = Instant::now() + Duration::from_secs(3600);
    let mut valid = 0;
    for p in &all {
        let expected = truth_table(p, 4);
        assert_eq!(is_valid(p, 4, far), Some(expected), "{}", show(p));
        valid += expected as usize;
    }
    assert!(valid > 1000);
}

#[test]
fn taut_gives_up_on_too_many_atoms() {
    let s = SymbolTable::prelude();
    let big: Vec<String> = (0..30).map(|i| format!("(q{} \\/ ~q{})", i, i)).collect();
    let t = parse_term(&big.join(" /\\ "), &s).unwrap();
    assert_eq!(taut_check(&t, Duration::from_secs(5)), TautResult::Unknown);
}

fn arb_prop() -> impl Strategy<Value = Prop> {
    let leaf = prop_oneof![(0usize..4).prop_map(Prop::Atom), any::<bool>().prop_map(Prop::Const)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Prop::Not(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Prop::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Prop::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Prop::Imp(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Prop::Iff(Box::new(a), Box::new(b))),
        ]
    })
}

proptest! {
    /// Through the parser, with atoms that are equations rather than variables.
    #[test]
    fn taut_on_parsed_terms_matches_oracle(p in arb_prop()) {
        let s = SymbolTable::prelude();
        let text = show(&p).replace("p0", "(x = y)").replace("p1", "(f x = 0)").replace("p2", "b").replace("p3", "(y < 2)");
        let term = parse_term(&text, &s).unwrap();
        let (_, atoms) = abstract_atoms(&term);
        prop_assert!(atoms.len() <= 4);
        let expected = if truth_table(&p, 4) { TautResult::Proved } else { TautResult::Unknown };
        prop_assert_eq!(taut_check(&term, Duration::from_secs(5)), expected);
    }
}

// ---------------------------------------------------------------- tactics

#[test]
fn tactic_uses_parent_theorems() {
    let parent = |l: &str| match l {
        "T_1" | "T_2" => Some("T"),
        "S" => Some("S"),
        _ => None,
    };
    let labels = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    assert_eq!(emit_tactic(&labels(&["T_1", "T_2", "S"]), parent).unwrap(), "MESON_TAC[T;S]");
    assert_eq!(emit_tactic(&[], parent).unwrap(), "MESON_TAC[]");
    assert_eq!(emit_tactic(&labels(&["S"]), parent).unwrap(), "MESON_TAC[S]");
    assert!(matches!(emit_tactic(&labels(&["U"]), parent), Err(AdviseError::UnknownLabel(l)) if l == "U"));
}

// ---------------------------------------------------------------- minimization

fn build(set: &BTreeSet<String>) -> Result<FofProblem, hh_core::fof::FofError> {
    let s = SymbolTable::prelude();
    let t = parse_term("T", &s).unwrap();
    let premises: Vec<(String, _)> = set.iter().map(|n| (n.clone(), t.clone())).collect();
    encode_problem(&t, &premises)
}

fn mock_pool(configs: Vec<MockConfig>) -> (ProverPool, Vec<MockProver>) {
    let mocks: Vec<MockProver> =
        configs.into_iter().enumerate().map(|(i, c)| MockProver::new(&format!("M{}", i), c)).collect();
    (ProverPool::new(mocks.iter().cloned().map(Backend::Mock).collect(), 8), mocks)
}

async fn run_min(pool: &ProverPool, start: BTreeSet<String>, per_run: f64) -> (hh_core::advise::Minimized, Vec<usize>) {
    let dir = tempfile::tempdir().unwrap();
    let mut seen = Vec::new();
    let deadline = Instant::now() + Duration::from_secs(10);
    let m =
        minimize(pool, build, start, Duration::from_secs_f64(per_run), deadline, dir.path(), |k| seen.push(k)).await;
    (m, seen)
}

#[tokio::test]
async fn minimization_reaches_the_answer() {
    let (pool, _) = mock_pool(vec![MockConfig::new(&["A"], &["B"], 0.0)]);
    let (m, seen) = run_min(&pool, set(&["A", "B", "C"]), 1.0).await;
    assert_eq!(m.premises, set(&["A"]));
    assert!(m.verified);
    assert_eq!(seen, vec![2, 1]);
    assert_eq!(m.steps, vec![2, 1]);
    assert!(m.iterations <= 3, "{} iterations", m.iterations);
}

#[tokio::test]
async fn minimal_set_is_confirmed_once() {
    let (pool, mocks) = mock_pool(vec![MockConfig::new(&["A"], &[], 0.0)]);
    let (m, seen) = run_min(&pool, set(&["A"]), 1.0).await;
    assert_eq!(m.premises, set(&["A"]));
    assert!(m.verified && seen.is_empty());
    assert_eq!((m.iterations, mocks[0].calls()), (1, 1));
}

#[tokio::test]
async fn flaky_rerun_keeps_verified_set() {
    let mut cfg = MockConfig::new(&["A"], &["B"], 0.0);
    cfg.latency = vec![0.0, f64::INFINITY];
    let (pool, _) = mock_pool(vec![cfg]);
    let (m, _) = run_min(&pool, set(&["A", "B", "C"]), 0.2).await;
    assert_eq!(m.premises, set(&["A", "B", "C"]));
    assert!(m.verified);

    let (pool, _) = mock_pool(vec![MockConfig::hanging()]);
    let (m, _) = run_min(&pool, set(&["A", "B"]), 0.1).await;
    assert_eq!(m.premises, set(&["A", "B"]));
    assert!(!m.verified);
}

#[tokio::test]
async fn cross_minimization_takes_the_smallest() {
    let (pool, _) = mock_pool(vec![MockConfig::new(&["A", "B"], &[], 0.0), MockConfig::new(&["C"], &[], 0.0)]);
    let (m, _) = run_min(&pool, set(&["A", "B", "C", "D"]), 1.0).await;
    assert_eq!(m.premises, set(&["C"]));
}

#[test]
fn minimization_property_over_random_mocks() {
    use rand::{Rng, SeedableRng};
    let rt = tokio::runtime::Runtime::new().unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let universe: Vec<String> = (0..8).map(|i| format!("L{}", i)).collect();
    for _ in 0..100 {
        let pick = |rng: &mut rand_chacha::ChaCha8Rng, p: f64| -> BTreeSet<String> {
            universe.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
        };
        let n = rng.gen_range(1..=3);
        let configs: Vec<MockConfig> = (0..n)
            .map(|_| MockConfig { answer: pick(&mut rng, 0.2), extras: pick(&mut rng, 0.3), latency: vec![0.0] })
            .collect();
        let mut start = pick(&mut rng, 0.5);
        start.extend(configs[0].answer.iter().cloned());
        let (pool, _) = mock_pool(configs.clone());
        let (m, seen) = rt.block_on(run_min(&pool, start.clone(), 1.0));
        assert!(m.verified);
        assert!(m.premises.is_subset(&start));
        assert!(configs.iter().any(|c| c.verdict(&m.premises).0 == hh_core::provers::ProofStatus::Proved));
        assert!(seen.windows(2).all(|w| w[1] < w[0]));
        assert!(m.iterations <= start.len() + 1);
        if n == 1 {
            assert!(m.iterations <= 3);
        }
        // fixpoint: no backend reports a strictly smaller set
        assert!(configs.iter().all(|c| {
            let (st, used) = c.verdict(&m.premises);
            st != hh_core::provers::ProofStatus::Proved || used.len() >= m.premises.len()
        }));
    }
}

// ---------------------------------------------------------------- strategies

#[test]
fn strategy_lines_parse() {
    let s = StrategyInstance::parse("nbayes, ATP2, 128, standard, Epar").unwrap();
    assert_eq!(
        (s.learner, s.deps, s.variant.as_str(), s.premises),
        (LearnerSpec::NAIVE_BAYES, DepChannel::Atp, "2", 128)
    );
    assert_eq!(s.limit_s, 30.0);
    assert_eq!(s.id(), "nbayes-atp2-128-standard-Epar");
    let s = StrategyInstance::parse("40-NN,HOL0+ATP0,32,all-vars-diff,Z3,12.5").unwrap();
    assert_eq!(
        (s.learner, s.deps, s.features, s.limit_s),
        (LearnerSpec::knn(40), DepChannel::Combined, ExtractionMethod::AllVarsDiff, 12.5)
    );
    let s = StrategyInstance::parse("knn160,ATP1_V_pref,512,standard,Z3").unwrap();
    assert_eq!((s.deps, s.variant.as_str()), (DepChannel::Atp, "1_V_pref"));
    for bad in [
        "nbayes,ATP2,0,standard,E",
        "svm,ATP2,1,standard,E",
        "nbayes,SINE,1,standard,E",
        "nbayes,hol,1,standard",
        "nbayes,hol,1,weird,E",
        "nbayes,hol,1,standard,E,-1",
    ] {
        assert!(parse_strategies(bad).is_err(), "{}", bad);
    }
    assert_eq!(parse_strategies("# comment\n\nnbayes,hol,4,standard,E # trailing\n").unwrap().len(), 1);
}

#[test]
fn sample_portfolio_has_25_rows() {
    let p = sample_portfolio();
    assert_eq!(p.len(), 25);
    let provers: BTreeSet<&str> = p.iter().map(|s| s.prover.as_str()).collect();
    assert_eq!(provers, ["Epar", "Vampire", "Z3"].into_iter().collect());
    assert_eq!(p.iter().filter(|s| s.learner.kind == hh_core::learners::LearnerKind::Knn).count(), 2);
    assert_eq!(hh_core::advise::default_portfolio("E").len(), DEFAULT_PORTFOLIO_SIZE);
}

#[test]
fn greedy_cover_picks_by_marginal_gain() {
    let solved = vec![set(&["a", "b", "c"]), set(&["a", "b"]), set(&["d", "e"]), set(&["c", "d"]), set(&["f"])];
    assert_eq!(greedy_cover(&solved, 7), vec![0, 2, 4]);
    assert_eq!(greedy_cover(&solved, 2), vec![0, 2]);
    assert!(greedy_cover(&[set(&[])], 3).is_empty());
    // ties go to the earlier instance
    assert_eq!(greedy_cover(&[set(&["x"]), set(&["y"])], 1), vec![0]);
}

// ---------------------------------------------------------------- coordinator

const GOAL: &str = "a + b = b + a";

fn library() -> Arc<Library> {
    let s = SymbolTable::prelude();
    let records = toy_records(&s);
    Arc::new(Library::build("toy", s, records, LearnerParams::default()).unwrap())
}

fn advisor(backends: Vec<Backend>, strategies: Vec<StrategyInstance>, scratch: &std::path::Path) -> Advisor {
    Advisor {
        library: library(),
        pool: ProverPool::new(backends, 16),
        strategies,
        tactics: vec![TacticBackend::Taut],
        config: AdviceConfig { budget: Duration::from_secs(5), ..AdviceConfig::default() },
        cache: None,
        scratch: scratch.to_path_buf(),
    }
}

fn strategy(prover: &str, n: usize) -> StrategyInstance {
    StrategyInstance::new(LearnerSpec::NAIVE_BAYES, DepChannel::Hol, n, ExtractionMethod::Standard, prover)
}

#[tokio::test]
async fn provable_goal_yields_full_transcript() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockProver::new("M", MockConfig::new(&["ADD_SYM"], &["ADD_0", "MUL_SYM"], 0.0));
    let adv = advisor(vec![Backend::Mock(mock)], vec![strategy("M", 16)], dir.path());
    let out = answer_query(&adv, GOAL).await;
    assert_eq!(out.status, AdviceStatus::Proved);
    assert_eq!(out.tactic.as_deref(), Some("MESON_TAC[ADD_SYM]"));
    assert_eq!(out.premises, vec!["ADD_SYM"]);
    let kinds: Vec<&str> = out
        .events
        .iter()
        .map(|e| match e {
            Event::ReadOk => "read",
            Event::Theorem { .. } => "theorem",
            Event::Minimizing { .. } => "min",
            Event::Result { .. } => "result",
            Event::Replaying { .. } => "replay",
            _ => "other",
        })
        .collect();
    assert_eq!(kinds, ["read", "theorem", "min", "min", "result", "replay"]);
    assert_eq!(out.events[2], Event::Minimizing { current: 3 });
    assert_eq!(out.events[3], Event::Minimizing { current: 1 });
    match &out.events[1] {
        Event::Theorem { hints, strategy, prover, .. } => {
            assert_eq!((*hints, prover.as_str()), (11, "M"));
            assert_eq!(strategy, "nbayes-hol-16-standard-M");
        }
        e => panic!("{:?}", e),
    }
    for line in out.transcript().lines() {
        assert!(is_transcript_line(line), "{:?}", line);
    }
}

#[tokio::test]
async fn conjunct_labels_map_back_to_theorems() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockProver::new("M", MockConfig::new(&["ADD_AC_1", "ADD_AC_2", "MUL_SYM"], &[], 0.0));
    let adv = advisor(vec![Backend::Mock(mock)], vec![strategy("M", 100)], dir.path());
    let out = answer_query(&adv, "a + (b + c) = (c + b) + a").await;
    assert_eq!(out.status, AdviceStatus::Proved);
    assert_eq!(out.names.len(), 2);
    assert!(out.tactic.unwrap().contains("ADD_AC;") || out.names == ["MUL_SYM", "ADD_AC"]);
}

#[tokio::test]
async fn unparseable_goal_reports_one_error() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockProver::new("M", MockConfig::new(&["ADD_SYM"], &[], 0.0));
    let adv = advisor(vec![Backend::Mock(mock.clone())], vec![strategy("M", 16)], dir.path());
    let out = answer_query(&adv, "((a").await;
    assert_eq!(out.status, AdviceStatus::Error);
    assert_eq!(out.events.len(), 1);
    assert!(out.transcript().starts_with("* Error: parse error"), "{}", out.transcript());
    assert_eq!(mock.calls(), 0);
    let out = answer_query(&adv, "   ").await;
    assert_eq!(out.transcript(), "* Error: empty query\n");
}

#[tokio::test]
async fn tautologies_are_answered_by_taut() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockProver::new("M", MockConfig::new(&["ADD_SYM"], &[], 2.0));
    let adv = advisor(vec![Backend::Mock(mock)], vec![strategy("M", 16)], dir.path());
    let out = answer_query(&adv, "(A ==> B ==> C) ==> (A ==> B) ==> (A ==> C)").await;
    assert_eq!(out.tactic.as_deref(), Some("CONV_TAC TAUT"));
    assert_eq!(out.strategy.as_deref(), Some("TAUT"));
    assert!(out.timings.total_s < 1.0);
}

#[tokio::test]
async fn fastest_strategy_wins() {
    for _ in 0..5 {
        let dir = tempfile::tempdir().unwrap();
        let slow = MockProver::new("Slow", MockConfig::new(&["ADD_SYM"], &[], 0.4));
        let fast = MockProver::new("Fast", MockConfig::new(&["ADD_SYM"], &[], 0.05));
        let adv = advisor(
            vec![Backend::Mock(slow), Backend::Mock(fast)],
            vec![strategy("Slow", 16), strategy("Fast", 16)],
            dir.path(),
        );
        let out = answer_query(&adv, GOAL).await;
        assert_eq!(out.strategy.as_deref(), Some("nbayes-hol-16-standard-Fast"));
        assert_eq!(out.prover.as_deref(), Some("Fast"));
    }
}

#[tokio::test]
async fn repeated_query_comes_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let mock = MockProver::new("M", MockConfig::new(&["ADD_SYM"], &["MUL_1"], 0.0));
    let mut adv = advisor(vec![Backend::Mock(mock.clone())], vec![strategy("M", 16)], dir.path());
    adv.cache = Some(ResponseCache::new(dir.path().join("cache")));
    let first = answer_query(&adv, GOAL).await;
    let calls = mock.calls();
    assert!(calls > 0);
    let second = answer_query(&adv, "a+b   =  b + a").await;
    assert!(second.cached && !first.cached);
    assert_eq!(second.transcript(), first.transcript());
    assert_eq!(second.tactic, first.tactic);
    assert_eq!(mock.calls(), calls);
    assert_eq!(adv.cache.as_ref().unwrap().entries().unwrap().len(), 1);
}

#[tokio::test]
async fn hanging_backends_respect_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let marker = format!("hh-hang-{}", std::process::id());
    let script = dir.path().join(format!("{}.sh", marker));
    std::fs::write(&script, "#!/bin/sh\nsleep 1000 &\nsleep 1000\n").unwrap();
    let spec = ProverSpec::new("Hang", &format!("sh {} {{file}} {{cpu}}", script.display()), 60.0).unwrap();
    let mut adv = advisor(
        vec![Backend::External(spec), Backend::Mock(MockProver::new("M", MockConfig::hanging()))],
        vec![strategy("Hang", 16), strategy("M", 16), strategy("Hang", 4)],
        dir.path(),
    );
    adv.config.budget = Duration::from_secs(1);
    adv.config.progress_interval = Duration::from_millis(200);
    let mut ticks = 0;
    let start = Instant::now();
    let out = adv.answer(GOAL, &mut |e| ticks += e.is_progress() as usize).await;
    assert!(start.elapsed() < Duration::from_secs(3), "{:?}", start.elapsed());
    assert_eq!(out.status, AdviceStatus::NoProof);
    assert_eq!(out.transcript(), "* Read OK\n* NoProof\n");
    assert!(ticks >= 3);
    tokio::time::sleep(Duration::from_millis(100)).await;
    assert!(processes_matching(&marker).is_empty());
}

#[tokio::test]
async fn external_tactic_plugin() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("arith.sh");
    std::fs::write(&script, "#!/bin/sh\nread goal\ncase \"$goal\" in *\"+\"*) echo PROVED;; *) echo unknown;; esac\n")
        .unwrap();
    let mut adv =
        advisor(vec![Backend::Mock(MockProver::new("M", MockConfig::hanging()))], vec![strategy("M", 4)], dir.path());
    adv.config.budget = Duration::from_secs(2);
    adv.tactics.push(TacticBackend::External {
        name: "ARITH".into(),
        command: vec!["sh".into(), script.display().to_string()],
        tactic: "ARITH_TAC".into(),
    });
    let out = answer_query(&adv, "1 + 1 = 2").await;
    assert_eq!(out.tactic.as_deref(), Some("ARITH_TAC"));
    let out = answer_query(&adv, "1 = 2").await;
    assert_eq!(out.status, AdviceStatus::NoProof);
}

#[test]
fn library_channels() {
    let lib = library();
    assert_eq!(lib.labels().len(), 11);
    assert_eq!(lib.parent("ADD_AC_2"), Some("ADD_AC"));
    let hol = lib.examples(ExtractionMethod::Standard, DepChannel::Hol);
    let ac = hol.iter().find(|e| e.label == lib.serial("LT_ADD").unwrap()).unwrap();
    assert_eq!(ac.deps, vec![lib.serial("ADD_0").unwrap(), lib.serial("LT_REFL").unwrap()]);
    let atp = lib.examples(ExtractionMethod::Standard, DepChannel::Atp);
    assert!(atp.iter().all(|e| e.deps.is_empty()));
    assert_eq!(lib.examples(ExtractionMethod::Standard, DepChannel::Combined), hol);
}
