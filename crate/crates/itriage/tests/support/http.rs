//! In-process HTTP helpers over the service router.

#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use chrono::{Duration, TimeZone, Utc};
use http_body_util::BodyExt;
use itriage::service::{router, AppState};
use itriage_core::default_knowledge_base;
use itriage_core::session::{Clock, ManualClock};
use serde_json::Value;
use tower::ServiceExt;

pub const KB_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/kb/default.itkb");

pub fn clock() -> Arc<dyn Clock> {
    Arc::new(ManualClock::ticking(Utc.with_ymd_and_hms(2025, 6, 2, 8, 0, 0).unwrap(), Duration::seconds(3)))
}

pub fn app(dir: Option<&Path>) -> Router {
    app_with_clock(dir, clock())
}

pub fn app_with_clock(dir: Option<&Path>, clock: Arc<dyn Clock>) -> Router {
    let state = AppState::new(default_knowledge_base(), clock, dir.map(Path::to_path_buf)).unwrap();
    router(Arc::new(state))
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call_raw(app, method, uri, body).await;
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap_or(Value::Null) };
    (status, value)
}

pub async fn call_raw(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

pub async fn create(app: &Router, tree: &str) -> Value {
    let (status, v) = call(app, Method::POST, "/sessions", Some(serde_json::json!({ "tree": tree }))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v
}

pub async fn ack(app: &Router, id: &str) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/advance"), Some(serde_json::json!({ "acknowledge": true }))).await
}

pub async fn answer(app: &Router, id: &str, label: &str) -> (StatusCode, Value) {
    call(app, Method::POST, &format!("/sessions/{id}/advance"), Some(serde_json::json!({ "answer": label }))).await
}

/// Acknowledges non-decision prompts and feeds `answers` to decisions,
/// returning the last view.
pub async fn drive(app: &Router, id: &str, answers: &[&str]) -> Value {
    let (_, mut view) = call(app, Method::GET, &format!("/sessions/{id}"), None).await;
    let mut answers = answers.iter();
    while view["status"] == "active" {
        let (status, next) = if view["prompt"]["kind"] == "decision" {
            match answers.next() {
                Some(a) => answer(app, id, a).await,
                None => break,
            }
        } else if answers.len() == 0 {
            break;
        } else {
            ack(app, id).await
        };
        assert_eq!(status, StatusCode::OK, "{next}");
        view = next;
    }
    view
}

pub fn prompt_text(view: &Value) -> &str {
    view["prompt"]["text"].as_str().unwrap_or_default()
}
