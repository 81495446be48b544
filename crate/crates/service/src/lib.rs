//! The advice service: TCP line protocol, HTTP API and shared state.

pub mod config;
pub mod http;
pub mod service;
pub mod tcp;

use std::future::Future;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::sync::watch;

pub use config::{ConfigError, ServiceConfig};
pub use service::{JobState, JobStatus, Service, ServiceError};

/// Run both front ends on already bound listeners until `shutdown` resolves.
pub async fn run(
    svc: Arc<Service>,
    tcp: TcpListener,
    http: TcpListener,
    shutdown: impl Future<Output = ()>,
) -> std::io::Result<()> {
    let (tx, rx) = watch::channel(false);
    let wait = |mut rx: watch::Receiver<bool>| async move {
        let _ = rx.wait_for(|stop| *stop).await;
    };
    let tcp_task = tokio::spawn(tcp::serve_tcp(tcp, svc.clone(), wait(rx.clone())));
    let app = http::router(svc);
    let http_task = tokio::spawn(async move { axum::serve(http, app).with_graceful_shutdown(wait(rx)).await });
    shutdown.await;
    let _ = tx.send(true);
    let _ = tcp_task.await;
    match http_task.await {
        Ok(r) => r,
        Err(e) => Err(std::io::Error::other(e)),
    }
}
