use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hh_core::testkit::toy_corpus;

struct Env {
    dir: tempfile::TempDir,
    config: PathBuf,
}

impl Env {
    fn new() -> Env {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("hh.toml");
        let text = format!(
            "root = {:?}\nscratch = {:?}\nbudget_s = 5\n\n[[mock]]\nname = \"M\"\nanswer = [\"ADD_SYM\"]\nextras = [\"ADD_0\"]\n",
            dir.path().join("projects"),
            dir.path().join("scratch"),
        );
        std::fs::write(&config, text).unwrap();
        Env { dir, config }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn project(&self, name: &str) -> PathBuf {
        self.dir.path().join("projects").join(name)
    }

    fn hh(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_hh"))
            .arg("--config")
            .arg(&self.config)
            .args(args)
            .env_remove("HH_CONFIG")
            .env_remove("HH_ROOT")
            .output()
            .unwrap()
    }

    fn ingest(&self, name: &str, corpus: &Path) -> Output {
        let out = self.hh(&["ingest", self.project(name).to_str().unwrap(), corpus.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out
    }
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn ingest_then_query_and_advice() {
    let env = Env::new();
    let corpus = env.file("toy.jsonl", &toy_corpus());
    let out = env.ingest("toy", &corpus);
    assert!(stdout(&out).starts_with("toy: 10 theorems, 11 conjuncts"), "{}", stdout(&out));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train rankers"));

    let out = env.hh(&["query", "-p", "toy", "a + b = b + a"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let t = stdout(&out);
    assert!(t.starts_with("* Read OK\n"), "{}", t);
    assert!(t.contains("* Result: ADD_SYM\n"));
    assert!(t.ends_with("MESON_TAC[ADD_SYM]\n"));

    let out = env.hh(&["advice", "-p", "toy", "a + b = b + a"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "MESON_TAC[ADD_SYM]\n");

    let out = env.hh(&["advice", "-p", "toy", "p \\/ ~p"]);
    assert_eq!(stdout(&out), "CONV_TAC TAUT\n");

    let out = env.hh(&["query", "-p", "toy", "a + "]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("* Error: parse error"));
}

#[test]
fn missing_project_exits_with_2() {
    let env = Env::new();
    for args in [
        vec!["query", "-p", "nope", "x = x"],
        vec!["advice", "-p", "nope", "x = x"],
        vec!["report", "dupes", "nope"],
        vec!["report", "reuse", "nope", "other"],
    ] {
        let out = env.hh(&args);
        assert_eq!(out.status.code(), Some(2), "{:?}", args);
        assert!(String::from_utf8_lossy(&out.stderr).contains("unknown project nope"));
    }
}

#[test]
fn reports() {
    let env = Env::new();
    let def = |s: &str, body: &str| {
        serde_json::json!({"kind": "def", "symbol": s, "type": "A->A", "body": body}).to_string() + "\n"
    };
    let aliases =
        env.file("alias.jsonl", &(def("I2", "\\x. x") + &def("LET_END", "\\y. y") + &def("mark_term", "\\z. z")));
    env.ingest("alias", &aliases);
    let out = env.hh(&["report", "dupes", "alias"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "I2 / LET_END / mark_term\n");

    env.ingest("v1", &env.file("v1.jsonl", &toy_corpus()));
    let extra = serde_json::json!({"kind": "thm", "name": "MUL_0", "statement": "!n. n * 0 = 0", "deps": ["MUL_SYM"]});
    env.ingest("v2", &env.file("v2.jsonl", &format!("{}{}\n", toy_corpus(), extra)));
    let out = env.hh(&["report", "reuse", "v2", "v1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("Project\tUnique thms\tIn previous (%)"));
    assert_eq!(rows[1].split('\t').take(3).collect::<Vec<_>>(), ["v2", "10", "9 (100%)"]);
}

#[test]
fn bad_arguments_fail() {
    let env = Env::new();
    let out = env.hh(&["ingest", env.project("x").to_str().unwrap(), "/no/such/file.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot read /no/such/file.jsonl"));
    let out = env.hh(&["query", "-p", "toy", "x = x", "--budget", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = env.hh(&["frobnicate"]);
    assert!(!out.status.success());
}
