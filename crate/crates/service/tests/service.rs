mod common;

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use hh_core::advise::is_transcript_line;
use hh_core::knowledge::FileLock;
use hh_service::config::MockEntry;
use hh_service::tcp::{split_project, MAX_QUERY_BYTES};
use hh_service::{ServiceConfig, ServiceError};

use common::*;

fn lines(t: &str) -> Vec<&str> {
    t.lines().collect()
}

fn assert_grammar(t: &str) {
    for l in t.lines() {
        assert!(is_transcript_line(l), "line outside the grammar: {:?}", l);
    }
}

// ---------------------------------------------------------------- config

#[test]
fn config_file_and_environment() {
    let c = ServiceConfig::parse(
        r#"
        tcp_port = 9000
        tokens = ["a"]
        [[mock]]
        name = "M"
        answer = ["X"]
        [[prover]]
        name = "E"
        command = "eprover --cpu-limit={cpu} {file}"
        "#,
    )
    .unwrap();
    assert_eq!(c.tcp_port, 9000);
    assert_eq!(c.http_port, 8081);
    assert_eq!(c.budget_s, 30.0);
    assert_eq!(c.mock[0].answer, vec!["X".to_string()]);
    c.validate().unwrap();

    let mut c = ServiceConfig::default();
    assert_eq!(c.tcp_port, 8080);
    let env = |k: &str| match k {
        "HH_TCP_PORT" => Some("7000".to_string()),
        "HH_TOKENS" => Some("x, y,".to_string()),
        "HH_BUDGET" => Some("2.5".to_string()),
        _ => None,
    };
    c.apply_env(env).unwrap();
    assert_eq!((c.tcp_port, c.budget_s), (7000, 2.5));
    assert_eq!(c.tokens, vec!["x".to_string(), "y".to_string()]);
    assert!(c.apply_env(|k| (k == "HH_HTTP_PORT").then(|| "many".to_string())).is_err());
}

#[test]
fn config_validation() {
    let ok = ServiceConfig::default();
    ok.validate().unwrap();
    for bad in [
        ServiceConfig { http_port: 8080, ..ServiceConfig::default() },
        ServiceConfig { budget_s: 0.0, ..ServiceConfig::default() },
        ServiceConfig { max_concurrent_queries: 0, ..ServiceConfig::default() },
        ServiceConfig { replay_token: "MAYBE".into(), ..ServiceConfig::default() },
        ServiceConfig {
            mock: vec![MockEntry { name: "two words".into(), answer: vec![], extras: vec![], latency: vec![] }],
            ..ServiceConfig::default()
        },
    ] {
        assert!(bad.validate().is_err(), "{:?}", bad);
    }
    assert!(ServiceConfig::parse("no_such_key = 1").is_err());
}

#[test]
fn project_prefix() {
    assert_eq!(split_project("project:toy;a = a"), Ok((Some("toy"), "a = a")));
    assert_eq!(split_project("a = a"), Ok((None, "a = a")));
    assert!(split_project("project:toy a = a").is_err());
}

// ---------------------------------------------------------------- TCP

#[tokio::test]
async fn tcp_transcript_for_a_provable_goal() {
    let dir = tempdir();
    let mut c = config(dir.path());
    single_strategy(dir.path(), &mut c);
    let server = start(service(c)).await;
    let t = tcp_query(server.tcp, &format!("project:toy;{}", GOAL)).await;
    assert_grammar(&t);
    let l = lines(&t);
    assert_eq!(l[0], "* Read OK");
    assert!(
        l[1].starts_with("* Theorem! Time: ") && l[1].ends_with(" Prover: M Hints: 11 Str: nbayes-hol-16-standard-M"),
        "{}",
        l[1]
    );
    assert_eq!(&l[2..4], ["* Minimizing, current no: 3", "* Minimizing, current no: 1"]);
    assert_eq!(l[4], "* Result: ADD_SYM");
    assert!(l[5].starts_with("* Replaying: SUGGESTED (") && l[5].ends_with("): MESON_TAC[ADD_SYM]"), "{}", l[5]);
    assert_eq!(l.len(), 6);

    let again = tcp_query(server.tcp, &format!("project:toy;{}", GOAL)).await;
    assert_eq!(t, again);
    server.stop().await;
}

#[tokio::test]
async fn tcp_default_project_and_errors() {
    let dir = tempdir();
    let server = start(service(config(dir.path()))).await;
    let t = tcp_query(server.tcp, "p \\/ ~p").await;
    assert!(t.contains("* Replaying: SUGGESTED (0.00s): CONV_TAC TAUT"), "{}", t);

    assert_eq!(tcp_query(server.tcp, "").await, "* Error: empty query\n");
    assert_eq!(tcp_query(server.tcp, "project:toy;   ").await, "* Error: empty query\n");
    assert_eq!(tcp_query(server.tcp, "project:nope;x = x").await, "* Error: unknown project nope\n");
    assert_eq!(tcp_query(server.tcp, "project:../x;x = x").await, "* Error: invalid project name \"../x\"\n");
    let t = tcp_query(server.tcp, "a + ").await;
    assert!(t.starts_with("* Error: parse error at offset"), "{}", t);
    assert_grammar(&t);

    let big = vec![b'a'; MAX_QUERY_BYTES + 10];
    let t = tcp_raw(server.tcp, &big).await;
    assert_eq!(t, format!("* Error: query longer than {} bytes\n", MAX_QUERY_BYTES));
    let t = tcp_raw(server.tcp, &[0xff, 0xfe, b'\n']).await;
    assert_eq!(t, "* Error: query is not valid UTF-8\n");
    server.stop().await;
}

#[tokio::test]
async fn tcp_status_trailer_and_replay_token() {
    let dir = tempdir();
    let c = ServiceConfig { status_trailer: true, replay_token: "SUCCESS".into(), ..config(dir.path()) };
    let server = start(service(c)).await;
    let t = tcp_query(server.tcp, "project:toy;p ==> p").await;
    assert_grammar(&t);
    let l = lines(&t);
    assert!(l[l.len() - 2].starts_with("* Replaying: SUCCESS"));
    assert!(l[l.len() - 1].starts_with("* Loadavg: "));
    server.stop().await;
}

#[tokio::test]
async fn tcp_progress_dots_stream_while_proving() {
    let dir = tempdir();
    let mut c = config(dir.path());
    c.mock = vec![MockEntry { latency: vec![0.35], ..toy_mock() }];
    c.progress_interval_s = 0.1;
    single_strategy(dir.path(), &mut c);
    let server = start(service(c)).await;
    let t = tcp_query(server.tcp, GOAL).await;
    assert_grammar(&t);
    let theorem = t.lines().find(|l| l.contains("Theorem!")).unwrap();
    assert!(theorem.starts_with("..."), "{}", theorem);
    server.stop().await;
}

#[tokio::test]
async fn concurrent_sessions_are_isolated() {
    let dir = tempdir();
    let server = start(service(config(dir.path()))).await;
    let n = 24;
    let mut tasks = Vec::new();
    for i in 0..n {
        let addr = server.tcp;
        let goal = match i % 3 {
            0 => GOAL.to_string(),
            1 => format!("{}+", "a + ".repeat(i + 1)),
            _ => format!("project:missing{};x = x", i),
        };
        tasks.push(tokio::spawn(async move { (i, tcp_query(addr, &goal).await) }));
    }
    for t in tasks {
        let (i, t) = t.await.unwrap();
        assert_grammar(&t);
        match i % 3 {
            0 => {
                assert!(t.starts_with("* Read OK\n"), "{}", t);
                assert!(t.ends_with("MESON_TAC[ADD_SYM]\n"), "{}", t);
                assert_eq!(t.matches("* Theorem!").count(), 1);
            }
            1 => {
                let offset = 4 * (i + 1);
                assert_eq!(t.lines().count(), 1, "{}", t);
                assert!(t.starts_with(&format!("* Error: parse error at offset {}:", offset)), "{} {}", i, t);
            }
            _ => assert_eq!(t, format!("* Error: unknown project missing{}\n", i)),
        }
    }
    server.stop().await;
}

#[tokio::test]
async fn hanging_provers_hit_the_budget() {
    let dir = tempdir();
    let mut c = config(dir.path());
    c.mock = vec![MockEntry { latency: vec![f64::INFINITY], ..toy_mock() }];
    c.budget_s = 1.0;
    let server = start(service(c)).await;
    let start = Instant::now();
    let t = tcp_query(server.tcp, GOAL).await;
    assert!(start.elapsed() < Duration::from_secs(3));
    assert!(t.ends_with("* NoProof\n"), "{}", t);
    server.stop().await;
}

// ---------------------------------------------------------------- HTTP

#[tokio::test]
async fn http_projects_and_queries() {
    let dir = tempdir();
    let server = start(service(config(dir.path()))).await;
    let http = reqwest::Client::new();

    let projects: Value = http.get(server.url("/projects")).send().await.unwrap().json().await.unwrap();
    assert_eq!(projects[0]["name"], "toy");
    assert_eq!(projects[0]["theorems"], 10);
    assert_eq!(projects[0]["labels"], 11);

    let r = http.post(server.url("/query")).json(&json!({"project": "toy", "goal": GOAL})).send().await.unwrap();
    assert_eq!(r.status(), 200);
    let events: Vec<Value> = r.json().await.unwrap();
    assert_eq!(events[0]["kind"], "read_ok");
    let last = events.last().unwrap();
    assert_eq!(last["kind"], "replaying");
    assert_eq!(last["tactic"], "MESON_TAC[ADD_SYM]");
    assert!(events.iter().all(|e| is_transcript_line(e["line"].as_str().unwrap())));

    let r = http.post(server.url("/query")).json(&json!({"project": "nope", "goal": GOAL})).send().await.unwrap();
    assert_eq!(r.status(), 404);
    let r = http.post(server.url("/query")).body("{not json").send().await.unwrap();
    assert_eq!(r.status(), 400);
    let r = http.post(server.url("/query")).json(&json!({"project": "toy"})).send().await.unwrap();
    assert_eq!(r.status(), 400);
    let r = http
        .post(server.url("/query"))
        .json(&json!({"project": "toy", "goal": GOAL, "budget": -1}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 400);
    let r = http.get(server.url("/job/12345")).send().await.unwrap();
    assert_eq!(r.status(), 404);
    server.stop().await;
}

#[tokio::test]
async fn http_html_pages() {
    let dir = tempdir();
    let server = start(service(config(dir.path()))).await;
    let http = reqwest::Client::new();
    let r = http.get(server.url("/project/toy/html/")).send().await.unwrap();
    assert_eq!(r.status(), 200);
    assert!(r.text().await.unwrap().contains("thm/ADD_5fSYM.html"));
    let r = http.get(server.url("/project/toy/html/thm/ADD_5f0.html")).send().await.unwrap();
    assert_eq!(r.status(), 200);
    assert!(r.headers()["content-type"].to_str().unwrap().starts_with("text/html"));
    assert!(r.text().await.unwrap().contains("../thm/ADD_5fSYM.html"));
    assert_eq!(http.get(server.url("/project/toy/html/thm/NOPE.html")).send().await.unwrap().status(), 404);
    assert_eq!(http.get(server.url("/project/nope/html/")).send().await.unwrap().status(), 404);
    assert_eq!(http.get(server.url("/project/toy/html/..%2F..%2Fproject.json")).send().await.unwrap().status(), 400);
    server.stop().await;
}

fn upload_body() -> Value {
    json!({"files": [{"name": "toy.jsonl", "text": hh_core::testkit::toy_corpus()}]})
}

#[tokio::test]
async fn upload_requires_a_token() {
    let dir = tempdir();
    let svc = service(config(dir.path()));
    let root = svc.config.root.clone();
    let server = start(svc).await;
    let http = reqwest::Client::new();
    let r = http.post(server.url("/project/fresh")).json(&upload_body()).send().await.unwrap();
    assert_eq!(r.status(), 401);
    let r = http.post(server.url("/project/fresh")).bearer_auth("wrong").json(&upload_body()).send().await.unwrap();
    assert_eq!(r.status(), 401);
    assert!(!root.join("fresh").exists());
    let r = http.post(server.url("/project/.hidden")).bearer_auth(TOKEN).json(&upload_body()).send().await.unwrap();
    assert_eq!(r.status(), 400);
    let r = http.post(server.url("/project/fresh")).bearer_auth(TOKEN).body("[]").send().await.unwrap();
    assert_eq!(r.status(), 400);
    server.stop().await;
}

#[tokio::test]
async fn upload_poll_query_lifecycle() {
    let dir = tempdir();
    let server = start(service(config(dir.path()))).await;
    let http = reqwest::Client::new();
    let r = http.post(server.url("/project/fresh")).bearer_auth(TOKEN).json(&upload_body()).send().await.unwrap();
    assert_eq!(r.status(), 202);
    let job: Value = r.json().await.unwrap();
    let id = job["job"].as_u64().unwrap();

    let deadline = Instant::now() + Duration::from_secs(30);
    let status = loop {
        let s: Value = http.get(server.url(&format!("/job/{}", id))).send().await.unwrap().json().await.unwrap();
        if s["state"] != "running" {
            break s;
        }
        assert!(Instant::now() < deadline, "ingest did not finish");
        tokio::time::sleep(Duration::from_millis(50)).await;
    };
    assert_eq!(status["state"], "done", "{}", status);
    assert_eq!(status["stage"], "done");
    assert_eq!(status["stages"][0], "parse and typecheck");
    assert_eq!(status["stats"]["theorems"], 10);

    let r = http.post(server.url("/query")).json(&json!({"project": "fresh", "goal": GOAL})).send().await.unwrap();
    assert_eq!(r.status(), 200);
    let events: Vec<Value> = r.json().await.unwrap();
    assert_eq!(events.last().unwrap()["kind"], "replaying");

    let failed = json!({"files": [{"name": "bad.jsonl", "text": "{\"kind\":\"thm\",\"name\":\"A\",\"statement\":\"x\",\"deps\":[\"B\"]}\n"}]});
    let r = http.post(server.url("/project/broken")).bearer_auth(TOKEN).json(&failed).send().await.unwrap();
    let id = r.json::<Value>().await.unwrap()["job"].as_u64().unwrap();
    let status = loop {
        let s: Value = http.get(server.url(&format!("/job/{}", id))).send().await.unwrap().json().await.unwrap();
        if s["state"] != "running" {
            break s;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(status["state"], "failed");
    assert!(status["error"].as_str().unwrap().contains("bad.jsonl:1"), "{}", status);
    server.stop().await;
}

#[tokio::test]
async fn upload_while_ingesting_conflicts() {
    let dir = tempdir();
    let svc = service(config(dir.path()));
    let lock = FileLock::acquire(&svc.config.root.join(".toy.lock"), true, Duration::ZERO).unwrap();
    let server = start(svc).await;
    let http = reqwest::Client::new();
    let r = http.post(server.url("/project/toy")).bearer_auth(TOKEN).json(&upload_body()).send().await.unwrap();
    assert_eq!(r.status(), 409);
    drop(lock);
    let r = http.post(server.url("/project/toy")).bearer_auth(TOKEN).json(&upload_body()).send().await.unwrap();
    assert_eq!(r.status(), 202);
    server.stop().await;
}

#[tokio::test]
async fn service_errors() {
    let dir = tempdir();
    let svc = service(config(dir.path()));
    let mut sink = |_: &hh_core::advise::Event| {};
    assert!(matches!(svc.query("nope", GOAL, None, &mut sink).await, Err(ServiceError::UnknownProject(_))));
    assert_eq!(svc.default_project().unwrap(), "toy");
    common::ingest_toy(&svc, "second");
    assert!(matches!(svc.default_project(), Err(ServiceError::NoProject)));

    let mut c = config(dir.path());
    c.strategies = Some(dir.path().join("s.txt"));
    std::fs::write(dir.path().join("s.txt"), "nbayes,hol,16,standard,Nowhere\n").unwrap();
    assert!(matches!(hh_service::Service::new(c), Err(ServiceError::Config(_))));
}
