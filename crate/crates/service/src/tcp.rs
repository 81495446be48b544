//! The line protocol: one query line in, a `* ...` transcript out, then close.
//!
//! A query may start with `project:NAME;` to pick a project; otherwise the
//! configured default (or the only project) is used.

use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use tokio::io::{AsyncBufReadExt, AsyncRead, AsyncReadExt, AsyncWrite, AsyncWriteExt, BufReader};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tokio::task::JoinSet;

use hh_core::advise::Event;

use crate::service::{Service, ServiceError};

pub const MAX_QUERY_BYTES: usize = 64 * 1024;
pub const PROJECT_PREFIX: &str = "project:";

/// Split an optional `project:NAME;` prefix off a query line.
pub fn split_project(line: &str) -> Result<(Option<&str>, &str), String> {
    match line.strip_prefix(PROJECT_PREFIX) {
        None => Ok((None, line)),
        Some(rest) => match rest.split_once(';') {
            Some((name, goal)) => Ok((Some(name.trim()), goal)),
            None => Err("project prefix must end with ';'".into()),
        },
    }
}

fn loadavg() -> String {
    std::fs::read_to_string("/proc/loadavg")
        .ok()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unavailable".into())
}

async fn read_query<R: AsyncRead + Unpin>(reader: R) -> Result<String, String> {
    let mut buf = Vec::new();
    let mut limited = BufReader::new(reader).take(MAX_QUERY_BYTES as u64 + 1);
    limited.read_until(b'\n', &mut buf).await.map_err(|e| format!("cannot read query: {}", e))?;
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    if buf.len() > MAX_QUERY_BYTES {
        return Err(format!("query longer than {} bytes", MAX_QUERY_BYTES));
    }
    if buf.last() == Some(&b'\r') {
        buf.pop();
    }
    String::from_utf8(buf).map_err(|_| "query is not valid UTF-8".to_string())
}

/// Serve one connection.
pub async fn session<S: AsyncRead + AsyncWrite + Unpin>(svc: &Service, stream: S) -> std::io::Result<()> {
    let (reader, mut writer) = tokio::io::split(stream);
    let line = match read_query(reader).await {
        Ok(l) => l,
        Err(m) => return finish(svc, &mut writer, &Event::error(m)).await,
    };
    let (project, goal) = match split_project(&line) {
        Ok(x) => x,
        Err(m) => return finish(svc, &mut writer, &Event::error(m)).await,
    };
    if goal.trim().is_empty() {
        return finish(svc, &mut writer, &Event::error("empty query")).await;
    }
    let project = match project.map(str::to_string).map_or_else(|| svc.default_project(), Ok) {
        Ok(p) => p,
        Err(e) => return finish(svc, &mut writer, &Event::error(e.to_string())).await,
    };

    let (tx, mut rx) = mpsc::unbounded_channel::<Event>();
    let answer = async move {
        let mut sink = |e: &Event| {
            let _ = tx.send(e.clone());
        };
        let r = svc.query(&project, goal, None, &mut sink).await;
        if let Err(e) = &r {
            let _ = tx.send(Event::error(e.to_string()));
        }
        r
    };
    tokio::pin!(answer);
    let mut answered = false;
    loop {
        tokio::select! {
            r = &mut answer, if !answered => {
                answered = true;
                if let Err(ServiceError::Io(e)) = r {
                    tracing::warn!(error = %e, "query failed");
                }
            }
            e = rx.recv() => match e {
                Some(e) => write_event(&mut writer, &e).await?,
                None => break,
            },
        }
    }
    trailer(svc, &mut writer).await
}

async fn write_event<W: AsyncWrite + Unpin>(w: &mut W, e: &Event) -> std::io::Result<()> {
    let text = match e {
        Event::Progress => ".".to_string(),
        e => e.line() + "\n",
    };
    w.write_all(text.as_bytes()).await?;
    w.flush().await
}

async fn trailer<W: AsyncWrite + Unpin>(svc: &Service, w: &mut W) -> std::io::Result<()> {
    if svc.config.status_trailer {
        w.write_all(format!("* Loadavg: {}\n", loadavg()).as_bytes()).await?;
    }
    w.flush().await?;
    w.shutdown().await
}

async fn finish<W: AsyncWrite + Unpin>(svc: &Service, w: &mut W, e: &Event) -> std::io::Result<()> {
    write_event(w, e).await?;
    trailer(svc, w).await
}

/// Accept connections until `shutdown` resolves, then give running sessions
/// one budget (plus a little) to finish.
pub async fn serve_tcp(listener: TcpListener, svc: Arc<Service>, shutdown: impl Future<Output = ()>) {
    let mut sessions = JoinSet::new();
    tokio::pin!(shutdown);
    loop {
        tokio::select! {
            _ = &mut shutdown => break,
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    let svc = svc.clone();
                    sessions.spawn(async move {
                        if let Err(e) = session(&svc, stream).await {
                            tracing::debug!(%peer, error = %e, "session ended early");
                        }
                    });
                }
                Err(e) => {
                    tracing::warn!(error = %e, "accept failed");
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
            },
            Some(_) = sessions.join_next(), if !sessions.is_empty() => {}
        }
    }
    drop(listener);
    let grace = Duration::from_secs_f64(svc.config.budget_s + 2.0);
    let drained = tokio::time::timeout(grace, async { while sessions.join_next().await.is_some() {} }).await;
    if drained.is_err() {
        tracing::warn!(left = sessions.len(), "aborting sessions after shutdown grace period");
        sessions.shutdown().await;
    }
}
