use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use folkrag::corpus::save_index;
use folkrag::service::{build_app, write_snapshot, AppConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

mod common;
use common::{fixture, fixture_index};

fn app_with(extra: &str, composer: &str) -> (Router, std::sync::Arc<folkrag::service::AppState>, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    save_index(&fixture_index(), dir.path().join("corpus.idx")).unwrap();
    let text = format!(
        "corpus_index = \"corpus.idx\"\n{extra}\n\
         [retrieval_model]\nbackend = \"mock\"\nmock_rules = [{{ contains = \"\", reply = \"{{jig}}\" }}]\n\
         [composer_model]\nbackend = \"mock\"\n{composer}\n"
    );
    let cfg = AppConfig::from_toml(&text, dir.path()).unwrap();
    let (state, app) = build_app(&cfg).unwrap();
    (app, state, dir)
}

const REPLY: &str = "mock_rules = [{ contains = \"\", reply = \"Fine.\\n```\\nX:1\\nM:6/8\\nK:D\\nABc def|\\n```\" }]";

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, axum::http::HeaderMap, Value) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let (parts, body) = resp.into_parts();
    let bytes = axum::body::to_bytes(body, usize::MAX).await.unwrap();
    let v = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (parts.status, parts.headers, v)
}

fn post(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap()
}

async fn new_session(app: &Router) -> String {
    let (st, _, body) = send(app, Request::post("/api/sessions").body(Body::empty()).unwrap()).await;
    assert_eq!(st, StatusCode::CREATED);
    body["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn cors_allows_configured_origin() {
    let (app, _, _dir) = app_with("cors_origins = [\"http://localhost:5173\"]", REPLY);
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/sessions")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .body(Body::empty())
        .unwrap();
    let (_, headers, _) = send(&app, req).await;
    assert_eq!(headers["access-control-allow-origin"], "http://localhost:5173");

    let req = Request::get("/healthz")
        .header("origin", "http://evil.example")
        .body(Body::empty())
        .unwrap();
    let (st, headers, _) = send(&app, req).await;
    assert_eq!(st, StatusCode::OK);
    assert!(headers.get("access-control-allow-origin").is_none());
}

#[tokio::test]
async fn slow_turn_times_out_without_side_effects() {
    let composer = format!("mock_delay_ms = 500\n{REPLY}");
    let (app, state, _dir) = app_with("request_timeout_ms = 50", &composer);
    let id = new_session(&app).await;
    let (st, _, body) = send(&app, post(&format!("/api/sessions/{id}/messages"), json!({"text": "a jig"}))).await;
    assert_eq!(st, StatusCode::GATEWAY_TIMEOUT);
    assert_eq!(body["code"], "timeout");
    let sessions = state.sessions();
    assert_eq!(sessions[0].transcript.len(), 1);
    // The abandoned turn released the session.
    let (st, _, _) = send(&app, post(&format!("/api/sessions/{id}/messages"), json!({"text": "again"}))).await;
    assert_eq!(st, StatusCode::GATEWAY_TIMEOUT);
}

#[tokio::test]
async fn turn_reports_validation_and_snapshot_saves_sessions() {
    let (app, state, dir) = app_with("", REPLY);
    let id = new_session(&app).await;
    let (st, _, turn) = send(&app, post(&format!("/api/sessions/{id}/messages"), json!({"text": "a jig"}))).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(turn["tune_found"], true);
    assert_eq!(turn["extracted_tags"], json!(["jig"]));
    assert_eq!(turn["validation"], json!([]));
    let path = dir.path().join("sessions.json");
    write_snapshot(&state, &path).unwrap();
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(saved[0]["id"], id.as_str());
    assert_eq!(saved[0]["transcript"].as_array().unwrap().len(), 3);
}

#[tokio::test]
async fn validate_rejects_empty_and_wrong_content_type() {
    let (app, _, _dir) = app_with("", REPLY);
    let (st, _, body) = send(&app, post("/api/validate", json!({"abc": "  "}))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "parse_error");
    let req = Request::post("/api/validate").body(Body::from("{\"abc\":\"K:D\"}")).unwrap();
    let (st, _, body) = send(&app, req).await;
    assert_eq!(st, StatusCode::UNSUPPORTED_MEDIA_TYPE);
    assert_eq!(body["code"], "bad_request");
}

#[tokio::test]
async fn sessions_are_independent() {
    let (app, _, _dir) = app_with("", REPLY);
    let (a, b) = (new_session(&app).await, new_session(&app).await);
    assert_ne!(a, b);
    send(&app, post(&format!("/api/sessions/{a}/messages"), json!({"text": "a jig"}))).await;
    let (_, _, sb) = send(&app, Request::get(format!("/api/sessions/{b}")).body(Body::empty()).unwrap()).await;
    assert_eq!(sb["transcript"].as_array().unwrap().len(), 1);
    tokio::time::sleep(Duration::from_millis(1)).await;
}

#[test]
fn shipped_configs_parse() {
    for name in ["mock.toml", "live.toml"] {
        AppConfig::load(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
