use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use clap::Parser;
use http_body_util::BodyExt;
use mbd::cli::{execute, Cli};
use mbd::service::{router, AppState, SessionView};
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("models").join(name)
}

fn fixture_json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap()
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    call(app, Method::POST, uri, Some(body)).await
}

async fn load(app: &Router, fixture_name: &str) -> String {
    let (status, body) = post(app, "/models", fixture_json(fixture_name)).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["model_id"].as_str().unwrap().to_string()
}

async fn open(app: &Router, model_id: &str, rule: &str, strategy: &str) -> String {
    let (status, body) =
        post(app, "/sessions", json!({"model_id": model_id, "rule": rule, "mode": "nonint", "strategy": strategy})).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    assert_eq!(body["status"], "active");
    assert_eq!(body["evidence"], json!([]));
    body["id"].as_str().unwrap().to_string()
}

async fn measure(app: &Router, session: &str, component: &str, value: Value) -> (StatusCode, Value) {
    post(app, &format!("/sessions/{session}/measurements"), json!({"component": component, "time": 0, "value": value})).await
}

fn focus_members(view: &Value) -> Vec<Vec<String>> {
    view["focuses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["members"].as_array().unwrap().iter().map(|m| m.as_str().unwrap().to_string()).collect())
        .collect()
}

fn app() -> Router {
    router(Arc::new(AppState::new()))
}

async fn full_adder_session(app: &Router) -> (String, Value) {
    let m = load(app, "fulladder.json").await;
    let s = open(app, &m, "r2", "halving").await;
    let mut last = Value::Null;
    for (c, v) in [("a", true), ("b", false), ("cin", true), ("xor2", false), ("or1", false)] {
        let (status, view) = measure(app, &s, c, json!(v)).await;
        assert_eq!(status, StatusCode::OK, "{view}");
        last = view;
    }
    (s, last)
}

#[tokio::test]
async fn full_adder_session_reaches_diagnosis() {
    let app = app();
    let (s, view) = full_adder_session(&app).await;
    assert_eq!(view["status"], "active");
    assert_eq!(focus_members(&view), [["and2", "or1"]]);
    assert_eq!(view["advice"]["probe"], "and2");
    assert_eq!(view["evidence"].as_array().unwrap().len(), 2);

    let (status, view) = measure(&app, &s, "and2", json!(false)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(view["status"], "diagnosed");
    assert_eq!(view["diagnosis"], json!(["and2"]));
    assert!(view.get("advice").is_none());
    assert_eq!(view["transcript"].as_array().unwrap().len(), 6);
    assert_eq!(view["observations"].as_array().unwrap().len(), 6);

    let (status, again) = call(&app, Method::GET, &format!("/sessions/{s}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(again, view);

    let (status, err) = measure(&app, &s, "xor1", json!(true)).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(err["error"], "session_closed");
}

#[tokio::test]
async fn flipflop_session_measures_nand5_first() {
    let app = app();
    let m = load(&app, "flipflop.json").await;
    let s = open(&app, &m, "r2", "entropy").await;
    let mut view = Value::Null;
    for (c, v) in [("D", false), ("S", false), ("E", true), ("and6", false), ("and7", false)] {
        view = measure(&app, &s, c, json!(v)).await.1;
    }
    assert_eq!(focus_members(&view), [["output(nand5)=0"], ["output(nand5)=1"]]);
    assert_eq!(view["advice"]["probe"], "nand5");
    let (status, view) = measure(&app, &s, "nand5", json!(true)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(focus_members(&view), [["and7"]]);
    assert_eq!(view["status"], "diagnosed");
}

#[tokio::test]
async fn replaying_observations_through_the_cli_agrees() {
    let app = app();
    let (s, view) = full_adder_session(&app).await;
    let (_, view2) = measure(&app, &s, "and2", json!(false)).await;
    for v in [view, view2] {
        let dir = tempfile::tempdir().unwrap();
        let obs = dir.path().join("obs.json");
        std::fs::write(&obs, v["observations"].to_string()).unwrap();
        let cli = Cli::parse_from([
            "mbd",
            "diagnose",
            "--model",
            fixture("fulladder.json").to_str().unwrap(),
            "--observations",
            obs.to_str().unwrap(),
            "--rule",
            "r2",
            "--strategy",
            "halving",
        ]);
        let mut out = Vec::new();
        execute(cli, &mut out, &mut Vec::new()).unwrap();
        let report: Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(report["focuses"], v["focuses"]);
        assert_eq!(report.get("advice"), v.get("advice"));
        let status = match report["status"].as_str().unwrap() {
            "open" | "healthy" => "active",
            other => other,
        };
        assert_eq!(status, v["status"]);
    }
}

#[tokio::test]
async fn model_round_trips() {
    let app = app();
    let m = load(&app, "delay.json").await;
    let (status, doc) = call(&app, Method::GET, &format!("/models/{m}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc, fixture_json("delay.json"));
}

#[tokio::test]
async fn errors_carry_codes() {
    let app = app();
    let (status, err) = call(&app, Method::GET, "/models/m99", None).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_model")));
    let (status, err) = call(&app, Method::GET, "/sessions/s99", None).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_session")));
    let (status, err) = post(&app, "/sessions", json!({"model_id": "m7"})).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::NOT_FOUND, Some("unknown_model")));
    let (status, err) = post(&app, "/models", json!({"components": 3})).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));
    let unconnected = json!({"components": [{"id": "g", "type": "function", "inputs": ["in1"],
        "function": {"branches": [{"expr": "in1"}]}}]});
    let (status, err) = post(&app, "/models", unconnected).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("invalid_model")));

    let m = load(&app, "flipflop.json").await;
    let s = open(&app, &m, "r1", "entropy").await;
    let (status, err) = measure(&app, &s, "nand4", json!(true)).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("not_observable")));
    let (status, err) = measure(&app, &s, "zz", json!(true)).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("unknown_component")));
    let (status, err) = measure(&app, &s, "and6", json!(5)).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("value_out_of_domain")));
    assert_eq!(measure(&app, &s, "and6", json!(false)).await.0, StatusCode::OK);
    let (status, err) = measure(&app, &s, "and6", json!(true)).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::CONFLICT, Some("duplicate_measurement")));
    // rejected measurements leave no trace
    let (_, view) = call(&app, Method::GET, &format!("/sessions/{s}"), None).await;
    assert_eq!(view["observations"].as_array().unwrap().len(), 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_measurements_are_serialized_per_session() {
    let app = app();
    let m = load(&app, "fulladder.json").await;
    let sessions: Vec<String> = futures_join(
        (0..4).map(|_| {
            let app = app.clone();
            let m = m.clone();
            async move { open(&app, &m, "r2", "entropy").await }
        }),
    )
    .await;
    // the same measurement raced 8 times on each session: exactly one wins
    let mut tasks = Vec::new();
    for s in &sessions {
        for _ in 0..8 {
            let app = app.clone();
            let s = s.clone();
            tasks.push(tokio::spawn(async move { measure(&app, &s, "a", json!(true)).await.0 }));
        }
    }
    let mut ok = 0;
    for t in tasks {
        match t.await.unwrap() {
            StatusCode::OK => ok += 1,
            StatusCode::CONFLICT => {}
            other => panic!("{other}"),
        }
    }
    assert_eq!(ok, sessions.len());
    for s in &sessions {
        let (_, view) = call(&app, Method::GET, &format!("/sessions/{s}"), None).await;
        assert_eq!(view["observations"].as_array().unwrap().len(), 1);
    }
}

async fn futures_join<F: std::future::Future<Output = T> + Send + 'static, T: Send + 'static>(
    futures: impl Iterator<Item = F>,
) -> Vec<T> {
    let handles: Vec<_> = futures.map(tokio::spawn).collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

#[tokio::test]
async fn journal_recovers_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::with_journal(dir.path()));
    let app = router(state.clone());
    let (s, _) = full_adder_session(&app).await;
    let before: SessionView = serde_json::from_value(call(&app, Method::GET, &format!("/sessions/{s}"), None).await.1).unwrap();
    // a rejected measurement is not journaled
    assert_eq!(measure(&app, &s, "or1", json!(true)).await.0, StatusCode::CONFLICT);
    drop(app);
    drop(state);

    let recovered = Arc::new(AppState::recover(dir.path()).unwrap());
    let app = router(recovered);
    let (status, after) = call(&app, Method::GET, &format!("/sessions/{s}"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_value::<SessionView>(after).unwrap(), before);

    // journaling continues and new ids do not collide
    let (status, view) = measure(&app, &s, "and2", json!(false)).await;
    assert_eq!((status, view["status"].as_str()), (StatusCode::OK, Some("diagnosed")));
    let m = load(&app, "bulbs.json").await;
    assert_ne!(m, before.model_id);
    let s2 = open(&app, &m, "r1", "entropy").await;
    assert_ne!(s2, s);
    let again = AppState::recover(dir.path()).unwrap();
    assert_eq!(again.view(&s).unwrap().status, "diagnosed");
}
