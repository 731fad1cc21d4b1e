use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use fiqh_app::catalog::Catalog;
use fiqh_app::cli;
use fiqh_app::service::{router, AppState};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn app_with(log_dir: Option<PathBuf>) -> Router {
    router(AppState::new(Catalog::load(data_dir()).unwrap(), log_dir))
}

fn app() -> Router {
    app_with(None)
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    if body.is_some() {
        req = req.header("content-type", "application/json");
    }
    let req = req.body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty)).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, bytes)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let text = body.map(|b| b.to_string());
    let (status, bytes) = send(app, method, uri, text.as_deref()).await;
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value)
}

fn run_cli(args: &[&str]) -> (i32, String) {
    let data = data_dir();
    let mut full = vec!["fiqh".to_string(), "--data".into(), data.display().to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap())
}

const CHILD_TRAVELING: [(&str, &str); 11] = [
    ("gender", "child"),
    ("health", "sick"),
    ("travel", "traveling"),
    ("intention", "for_prayer"),
    ("material", "water"),
    ("tool", "pure"),
    ("water", "available"),
    ("impurity", "minor"),
    ("site", "private_parts"),
    ("prayer", "due"),
    ("method", "wudu"),
];

fn bindings(pairs: &[(&str, &str)]) -> Value {
    Value::Object(pairs.iter().map(|(a, v)| (a.to_string(), json!(v))).collect())
}

async fn new_session(app: &Router, automaton: &str) -> String {
    let (status, v) = call(app, "POST", "/sessions", Some(json!({ "automaton": automaton }))).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn event(app: &Router, id: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", &format!("/sessions/{id}/events"), Some(body)).await
}

#[tokio::test]
async fn lists_spaces_and_automata() {
    let app = app();
    let (status, v) = call(&app, "GET", "/spaces", None).await;
    assert_eq!(status, StatusCode::OK);
    let spaces = v.as_array().unwrap();
    assert_eq!(spaces.len(), 1);
    assert_eq!(spaces[0]["id"], "taymammum");
    assert_eq!(spaces[0]["question_count"], 6912);
    assert_eq!(spaces[0]["attributes"].as_array().unwrap().len(), 11);
    let rbs: Vec<&str> = spaces[0]["rulebases"].as_array().unwrap().iter().map(|r| r["id"].as_str().unwrap()).collect();
    assert_eq!(rbs, ["tahara", "tayammum-basic"]);

    let (status, v) = call(&app, "GET", "/automata", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|a| a["id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["wudu-hanafi", "wudu-shafii"]);

    let (status, v) = call(&app, "GET", "/automata/wudu", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["id"], "wudu-shafii");
    assert_eq!(v["deterministic"], true);
    assert_eq!(v["obligatory"], json!(["intention", "face", "arms", "head", "feet"]));

    for uri in ["/spaces/nope", "/automata/nope", "/sessions/nope", "/sessions/nope/log"] {
        let (status, v) = call(&app, "GET", uri, None).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(v["error"], "not-found");
    }
}

#[tokio::test]
async fn query_matches_cli_text() {
    let app = app();
    let body = json!({ "rulebase": "tayammum-basic", "bindings": bindings(&CHILD_TRAVELING) });
    let (status, v) = call(&app, "POST", "/query", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["verdict"]["status"], "excluded");
    let text = v["text"].as_str().unwrap();
    assert!(text.starts_with("excluded: combination not valid"), "{text}");

    let mut args = vec!["ask", "--rules", "tayammum-basic"];
    let sets: Vec<String> = CHILD_TRAVELING.iter().map(|(a, v)| format!("{a}={v}")).collect();
    for s in &sets {
        args.extend(["--set", s.as_str()]);
    }
    let (code, out) = run_cli(&args);
    assert_eq!(code, 0);
    assert_eq!(out, text);
}

#[tokio::test]
async fn query_validation() {
    let app = app();
    // two rulebases on the space, none named
    let body = json!({ "space": "taymammum", "bindings": bindings(&CHILD_TRAVELING) });
    let (status, v) = call(&app, "POST", "/query", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["fields"][0]["field"], "rulebase");

    let mut pairs = CHILD_TRAVELING.to_vec();
    pairs[0] = ("gender", "robot");
    pairs.pop();
    pairs.push(("colour", "red"));
    let body = json!({ "rulebase": "tahara", "bindings": bindings(&pairs) });
    let (status, v) = call(&app, "POST", "/query", Some(body)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let fields: Vec<&str> = v["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    assert!(fields.contains(&"bindings.gender"), "{fields:?}");
    assert!(fields.contains(&"bindings.colour"), "{fields:?}");
    assert!(fields.contains(&"bindings.method"), "{fields:?}");

    let (status, v) = call(&app, "POST", "/query", Some(json!({ "rulebase": "tahara", "bindings": {}, "x": 1 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["fields"][0]["field"], "x");

    let (status, v) = call(&app, "POST", "/query", Some(json!({ "rulebase": "nope", "bindings": {} }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND, "{v}");

    let (status, v) = send(&app, "POST", "/query", Some("{not json")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let v: Value = serde_json::from_slice(&v).unwrap();
    assert_eq!(v["error"], "malformed");

    let (status, _) = send(&app, "POST", "/query", Some("[1, 2]")).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn session_out_of_order_then_recovery() {
    let app = app();
    let id = new_session(&app, "wudu-shafii").await;
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["status"], "in-progress");
    assert_eq!(v["step_count"], 0);

    let (status, v) = event(&app, &id, json!({ "event": "washing face" })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["advice"]["kind"], "out-of-order");
    assert_eq!(v["advice"]["expected_action"], "intention");
    assert_eq!(v["performed"][0]["credited"], false);

    for e in ["intention", "face", "arms", "head", "feet"] {
        let (status, v) = event(&app, &id, json!({ "event": e })).await;
        assert_eq!(status, StatusCode::OK, "{v}");
    }
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["status"], "valid", "{v}");
    assert_eq!(v["step_count"], 6);
    assert!(v["missing"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn invalidation_resets_progress() {
    let app = app();
    let id = new_session(&app, "wudu").await;
    for e in ["intention", "face"] {
        event(&app, &id, json!({ "event": e })).await;
    }
    let (_, v) = event(&app, &id, json!({ "event": "passing wind" })).await;
    assert_eq!(v["status"], "invalidated");
    assert_eq!(v["advice"]["kind"], "invalidated");
    assert!(v["progress"].as_array().unwrap().iter().all(|p| p["credited"] == false));
    assert_eq!(v["enabled"], json!(["intention"]));
}

#[tokio::test]
async fn stale_ordinal_is_idempotent() {
    let app = app();
    let id = new_session(&app, "wudu-shafii").await;
    let (_, first) = event(&app, &id, json!({ "event": "intention", "ordinal": 5 })).await;
    assert_eq!(first["applied"], true);
    assert_eq!(first["step_count"], 1);
    for n in [5, 3] {
        let (status, v) = event(&app, &id, json!({ "event": "face", "ordinal": n })).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(v["applied"], false);
        assert_eq!(v["step_count"], 1);
        assert_eq!(v["updated"], first["updated"]);
    }
    let (_, v) = event(&app, &id, json!({ "event": "face", "ordinal": 6 })).await;
    assert_eq!(v["applied"], true);
    assert_eq!(v["step_count"], 2);
    assert_eq!(v["performed"][1]["ordinal"], 6);
}

#[tokio::test]
async fn event_validation() {
    let app = app();
    let id = new_session(&app, "wudu-shafii").await;
    let (status, v) = event(&app, &id, json!({ "event": "jumping" })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["fields"][0]["field"], "event");
    let (status, v) = event(&app, &id, json!({ "event": "face", "ordinal": -1 })).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["fields"][0]["field"], "ordinal");
    let (status, _) = event(&app, &id, json!({})).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = event(&app, "nope", json!({ "event": "face" })).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(&app, "POST", "/sessions", Some(json!({ "automaton": "nope" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, v) = call(&app, "POST", "/sessions", Some(json!({}))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["fields"][0]["field"], "automaton");

    let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["step_count"], 0, "rejected events must not step");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_posts_are_serialized() {
    let app = app();
    let id = Arc::new(new_session(&app, "wudu-hanafi").await);
    let events = ["intention", "face", "arms", "head", "feet", "mouth", "ears", "basmala"];
    let mut tasks = Vec::new();
    for _ in 0..4 {
        for e in events {
            let (app, id) = (app.clone(), Arc::clone(&id));
            tasks.push(tokio::spawn(async move {
                let (status, _) = event(&app, &id, json!({ "event": e })).await;
                assert_eq!(status, StatusCode::OK);
            }));
        }
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, v) = call(&app, "GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(v["step_count"], 32);
    assert_eq!(v["status"], "valid", "{v}");
    let (_, log) = send(&app, "GET", &format!("/sessions/{id}/log"), None).await;
    let seqs: Vec<u64> = String::from_utf8(log)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(seqs, (1..=32).collect::<Vec<_>>());
}

#[tokio::test]
async fn sessions_are_independent() {
    let app = app();
    let a = new_session(&app, "wudu-shafii").await;
    let b = new_session(&app, "wudu-shafii").await;
    assert_ne!(a, b);
    event(&app, &a, json!({ "event": "intention" })).await;
    let (_, v) = call(&app, "GET", &format!("/sessions/{b}"), None).await;
    assert_eq!(v["step_count"], 0);
}

#[tokio::test]
async fn exported_log_replays_to_same_text() {
    let dir = tempfile::tempdir().unwrap();
    let app = app_with(Some(dir.path().to_path_buf()));
    let id = new_session(&app, "wudu-shafii").await;
    for e in ["intention", "face", "head", "arms", "passing wind", "intention", "rinsing the mouth", "face"] {
        let (status, v) = event(&app, &id, json!({ "event": e })).await;
        assert_eq!(status, StatusCode::OK, "{v}");
    }
    let (status, log) = send(&app, "GET", &format!("/sessions/{id}/log"), None).await;
    assert_eq!(status, StatusCode::OK);
    let (_, report) = call(&app, "GET", &format!("/sessions/{id}"), None).await;

    let exported = dir.path().join("exported.log");
    std::fs::write(&exported, &log).unwrap();
    let persisted = dir.path().join(format!("{id}.log"));
    let persisted_text = std::fs::read_to_string(&persisted).unwrap();
    assert!(persisted_text.starts_with("# automaton wudu-shafii\n"));
    assert!(persisted_text.ends_with(std::str::from_utf8(&log).unwrap()));

    for path in [&exported, &persisted] {
        let (code, out) = run_cli(&["fsm", "replay", "--automaton", "wudu-shafii", "--log", path.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(out, report["text"].as_str().unwrap());
    }
}
