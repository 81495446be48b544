//! JSON API used by the web console.
//!
//! | route | |
//! |---|---|
//! | `GET /projects` | project list with statistics |
//! | `POST /query` | `{project, goal, budget}` to an array of events |
//! | `POST /project/{name}` | bearer token, `{files: [{name, text}]}`, starts an ingest job |
//! | `GET /job/{id}` | ingest progress |
//! | `GET /project/{name}/html/{path}` | generated HTML pages |

use std::path::{Component, Path};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hh_core::advise::Event;
use hh_core::knowledge::{valid_project_name, HTML_DIR};

use crate::service::{Service, ServiceError};

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError { status, message: message.into() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownProject(_) => StatusCode::NOT_FOUND,
            ServiceError::InvalidName(_) | ServiceError::NoProject => StatusCode::BAD_REQUEST,
            ServiceError::Locked(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError::new(status, e.to_string())
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request: {}", e)))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryRequest {
    #[serde(default)]
    pub project: Option<String>,
    pub goal: String,
    /// Seconds; capped at the configured budget.
    #[serde(default)]
    pub budget: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadFile {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct UploadRequest {
    pub files: Vec<UploadFile>,
}

pub fn router(svc: Arc<Service>) -> Router {
    Router::new()
        .route("/projects", get(projects))
        .route("/query", post(query))
        .route("/project/{name}", post(upload))
        .route("/job/{id}", get(job))
        .route("/project/{name}/html", get(html_index))
        .route("/project/{name}/html/", get(html_index))
        .route("/project/{name}/html/{*path}", get(html_page))
        .with_state(svc)
}

async fn projects(State(svc): State<Arc<Service>>) -> Result<Json<Value>, ApiError> {
    Ok(Json(serde_json::to_value(svc.projects().await?).expect("stats serialize")))
}

async fn query(State(svc): State<Arc<Service>>, body: Bytes) -> Result<Json<Vec<Value>>, ApiError> {
    let req: QueryRequest = parse_body(&body)?;
    let budget = match req.budget {
        None => None,
        Some(b) if b > 0.0 && b.is_finite() => Some(Duration::from_secs_f64(b.min(svc.config.budget_s))),
        Some(b) => return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("budget must be positive, got {}", b))),
    };
    let project = match req.project {
        Some(p) => p,
        None => svc.default_project()?,
    };
    let mut events = Vec::new();
    let mut sink = |e: &Event| events.push(e.to_json());
    svc.query(&project, &req.goal, budget, &mut sink).await?;
    Ok(Json(events))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers.get(header::AUTHORIZATION)?.to_str().ok()?.strip_prefix("Bearer ").map(str::trim)
}

async fn upload(
    State(svc): State<Arc<Service>>,
    UrlPath(name): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    if !bearer(&headers).is_some_and(|t| svc.authorized(t)) {
        return Err(ApiError::new(StatusCode::UNAUTHORIZED, "missing or invalid token"));
    }
    if !valid_project_name(&name) {
        return Err(ServiceError::InvalidName(name).into());
    }
    let req: UploadRequest = parse_body(&body)?;
    if req.files.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "no files uploaded"));
    }
    let files = req.files.into_iter().map(|f| (f.name, f.text)).collect();
    let id = svc.submit_ingest(&name, files)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "job": id, "project": name }))))
}

async fn job(State(svc): State<Arc<Service>>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let id: u64 = id.parse().map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "job ids are numbers"))?;
    let j = svc.job(id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown job {}", id)))?;
    Ok(Json(serde_json::to_value(j).expect("job serializes")))
}

async fn html_index(State(svc): State<Arc<Service>>, UrlPath(name): UrlPath<String>) -> Result<Response, ApiError> {
    serve_page(&svc, &name, "index.html").await
}

async fn html_page(
    State(svc): State<Arc<Service>>,
    UrlPath((name, path)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    serve_page(&svc, &name, if path.is_empty() { "index.html" } else { &path }).await
}

async fn serve_page(svc: &Service, name: &str, page: &str) -> Result<Response, ApiError> {
    if !valid_project_name(name) {
        return Err(ServiceError::InvalidName(name.to_string()).into());
    }
    let project_dir = svc.config.root.join(name);
    if !project_dir.join(HTML_DIR).is_dir() {
        return Err(ServiceError::UnknownProject(name.to_string()).into());
    }
    let rel = Path::new(page);
    if !rel.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad page path"));
    }
    let file = project_dir.join(HTML_DIR).join(rel);
    let bytes =
        tokio::fs::read(&file).await.map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("no page {}", page)))?;
    let mime = if page.ends_with(".html") { "text/html; charset=utf-8" } else { "application/octet-stream" };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}
