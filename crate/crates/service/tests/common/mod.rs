#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use tempfile::TempDir;
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

use hh_core::knowledge::ingest;
use hh_core::testkit::toy_corpus;
use hh_service::config::MockEntry;
use hh_service::{Service, ServiceConfig};

pub const GOAL: &str = "a + b = b + a";
pub const TOKEN: &str = "s3cret";

/// Proves anything whose premises include ADD_SYM, reporting two extras
/// while it can.
pub fn toy_mock() -> MockEntry {
    MockEntry {
        name: "M".into(),
        answer: vec!["ADD_SYM".into()],
        extras: vec!["ADD_0".into(), "MUL_SYM".into()],
        latency: vec![0.0],
    }
}

pub fn config(dir: &Path) -> ServiceConfig {
    ServiceConfig {
        root: dir.join("projects"),
        scratch: Some(dir.join("scratch")),
        tokens: vec![TOKEN.into()],
        budget_s: 5.0,
        tcp_port: 0,
        http_port: 0,
        mock: vec![toy_mock()],
        ..ServiceConfig::default()
    }
}

/// One strategy, so the winning strategy id is fixed.
pub fn single_strategy(dir: &Path, config: &mut ServiceConfig) {
    let path = dir.join("strategies.txt");
    std::fs::write(&path, "nbayes,hol,16,standard,M\n").unwrap();
    config.strategies = Some(path);
}

pub fn ingest_toy(svc: &Service, name: &str) {
    let files = vec![("toy.jsonl".to_string(), toy_corpus())];
    ingest(&svc.config.root, name, &files, &svc.ingest_options(), &mut |_| {}).unwrap();
}

pub fn service(config: ServiceConfig) -> Arc<Service> {
    let svc = Arc::new(Service::new(config).unwrap());
    ingest_toy(&svc, "toy");
    svc
}

pub struct Running {
    pub tcp: SocketAddr,
    pub http: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl Running {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.http, path)
    }

    pub async fn stop(mut self) {
        let _ = self.stop.take().unwrap().send(());
        self.task.await.unwrap().unwrap();
    }
}

pub async fn start(svc: Arc<Service>) -> Running {
    let tcp = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let http = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let (tcp_addr, http_addr) = (tcp.local_addr().unwrap(), http.local_addr().unwrap());
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(hh_service::run(svc, tcp, http, async {
        let _ = rx.await;
    }));
    Running { tcp: tcp_addr, http: http_addr, stop: Some(tx), task }
}

/// Send one raw line and read until the server closes the connection.
pub async fn tcp_raw(addr: SocketAddr, bytes: &[u8]) -> String {
    let mut s = TcpStream::connect(addr).await.unwrap();
    s.write_all(bytes).await.unwrap();
    let mut out = Vec::new();
    s.read_to_end(&mut out).await.unwrap();
    String::from_utf8(out).unwrap()
}

pub async fn tcp_query(addr: SocketAddr, line: &str) -> String {
    tcp_raw(addr, format!("{}\n", line).as_bytes()).await
}

pub fn tempdir() -> TempDir {
    tempfile::tempdir().unwrap()
}

/// Replace `12.34s` style durations so transcripts can be compared.
pub fn mask_times(transcript: &str) -> String {
    let mut out = String::new();
    for line in transcript.lines() {
        let words: Vec<String> = line
            .split(' ')
            .map(|w| {
                let (core, close) = match w.strip_suffix("):") {
                    Some(c) => (c.trim_start_matches('('), true),
                    None => (w, false),
                };
                let is_time = core.strip_suffix('s').and_then(|n| n.split_once('.')).is_some_and(|(a, b)| {
                    !a.is_empty()
                        && a.bytes().all(|c| c.is_ascii_digit())
                        && b.len() == 2
                        && b.bytes().all(|c| c.is_ascii_digit())
                });
                match (is_time, close) {
                    (true, true) => "(T):".to_string(),
                    (true, false) => "T".to_string(),
                    _ => w.to_string(),
                }
            })
            .collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}
