//! Kept in its own test binary because it sets the API key variable.

use axum::body::Body;
use axum::http::{HeaderMap, Request, StatusCode};
use axum::routing::post;
use axum::Router;
use folkrag::corpus::save_index;
use folkrag::llm::API_KEY_ENV;
use folkrag::service::{build_app, AppConfig};
use serde_json::json;
use tower::ServiceExt;

mod common;
use common::fixture_index;

const KEY: &str = "sk-test-0123456789";
const UPSTREAM_SECRET: &str = "internal upstream detail 42";

#[tokio::test]
async fn upstream_failure_is_sanitized() {
    std::env::set_var(API_KEY_ENV, KEY);
    let upstream = Router::new().route(
        "/v1/chat/completions",
        post(|headers: HeaderMap| async move {
            assert_eq!(headers["authorization"], format!("Bearer {KEY}").as_str());
            (StatusCode::UNAUTHORIZED, format!("{{\"error\": \"{UPSTREAM_SECRET}\"}}"))
        }),
    );
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, upstream).await.unwrap() });

    let dir = tempfile::tempdir().unwrap();
    save_index(&fixture_index(), dir.path().join("corpus.idx")).unwrap();
    let text = format!(
        "corpus_index = \"corpus.idx\"\n\
         [retrieval_model]\nendpoint = \"http://{addr}/v1\"\nmodel = \"small\"\nretry_base_delay_ms = 1\n\
         [composer_model]\nendpoint = \"http://{addr}/v1\"\nmodel = \"big\"\n"
    );
    let cfg = AppConfig::from_toml(&text, dir.path()).unwrap();
    let (_, app) = build_app(&cfg).unwrap();

    let resp = app
        .clone()
        .oneshot(Request::post("/api/sessions").body(Body::empty()).unwrap())
        .await
        .unwrap();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let id = serde_json::from_slice::<serde_json::Value>(&bytes).unwrap()["session_id"]
        .as_str()
        .unwrap()
        .to_string();

    let req = Request::post(format!("/api/sessions/{id}/messages"))
        .header("content-type", "application/json")
        .body(Body::from(json!({"text": "a jig"}).to_string()))
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_GATEWAY);
    let body = String::from_utf8(axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec()).unwrap();
    assert!(body.contains("\"upstream_error\""), "{body}");
    assert!(body.contains("HTTP 401"), "{body}");
    assert!(!body.contains(KEY), "{body}");
    assert!(!body.contains(UPSTREAM_SECRET), "{body}");
}
