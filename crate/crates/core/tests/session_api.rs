mod common;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use common::{reference_walkers, walker_cycles};
use scomo::model::{fit_normative_model, fit_participant_model, participant_to_json};
use scomo::pipeline::demo::WalkerSpec;
use scomo::session::{router, AppState, SessionService};

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn alpha_keys(v: &Value, path: &str, out: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if k.to_lowercase().contains("alpha") || k.to_lowercase().contains("scomo") {
                    out.push(format!("{path}.{k}"));
                }
                alpha_keys(x, &format!("{path}.{k}"), out);
            }
        }
        Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| alpha_keys(x, &format!("{path}[{i}]"), out)),
        _ => {}
    }
}

fn app() -> Router {
    let nm = fit_normative_model(&reference_walkers(4)).unwrap();
    router(AppState::new(SessionService::in_memory()).with_normative(nm))
}

async fn run_day_one(app: &Router, pm: &Value) -> Vec<Value> {
    let mut client_bound = Vec::new();
    let (st, _) = call(app, Method::POST, "/sessions", Some(json!({"participant_id": "P07", "day": 1, "session_index": 1}))).await;
    assert_eq!(st, StatusCode::OK);
    for i in 1..=6 {
        let (st, v) = call(app, Method::POST, "/sessions/P07-d1-s1/trials", Some(json!({"index": i, "handrail_free": true}))).await;
        assert_eq!(st, StatusCode::OK, "{v}");
    }
    let (st, slots) = call(app, Method::POST, "/sessions/P07-d1-s1/evaluation", Some(json!({"seed": 4, "participant_model": pm}))).await;
    assert_eq!(st, StatusCode::OK, "{slots}");
    assert_eq!(slots.as_array().unwrap().len(), 18);
    client_bound.push(slots.clone());
    for (n, slot) in slots.as_array().unwrap().iter().enumerate() {
        let id = slot["slot_id"].as_str().unwrap();
        let (st, frames) = call(app, Method::GET, &format!("/slots/{id}/frames?pos=0.25"), None).await;
        assert_eq!(st, StatusCode::OK, "{frames}");
        if n == 0 {
            assert!(!frames["frames"].as_array().unwrap().is_empty());
            client_bound.push(frames);
        }
        let (st, ack) = call(app, Method::POST, &format!("/slots/{id}/selection"), Some(json!({"pos": 0.6, "timestamp_ms": 1000 + n}))).await;
        assert_eq!(st, StatusCode::OK, "{ack}");
        assert_eq!(ack["remaining_slots"].as_u64().unwrap() as usize, 17 - n);
        client_bound.push(ack);
    }
    client_bound
}

#[tokio::test]
async fn full_evaluation_over_http_never_exposes_alpha() {
    let app = app();
    let pm = fit_participant_model(&walker_cycles(&WalkerSpec::default(), 3)).unwrap();
    let pm: Value = serde_json::from_str(&participant_to_json(&pm).unwrap()).unwrap();
    let payloads = run_day_one(&app, &pm).await;
    let last = payloads.last().unwrap();
    assert_eq!(last["phase"], "complete");
    assert!(last["next_slot"].is_null());
    let mut leaks = Vec::new();
    for p in &payloads {
        alpha_keys(p, "$", &mut leaks);
    }
    assert!(leaks.is_empty(), "{leaks:?}");

    let (st, _) = call(&app, Method::POST, "/participants/P07/confidence", Some(json!({"day": 1, "rating": 7}))).await;
    assert_eq!(st, StatusCode::NO_CONTENT);
    let (st, report) = call(&app, Method::GET, "/participants/P07/report", None).await;
    assert_eq!(st, StatusCode::OK, "{report}");
    assert_eq!(report["participant_id"], "P07");
    assert_eq!(report["sessions"].as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn protocol_errors_map_to_status_codes() {
    let app = app();
    let (st, _) = call(&app, Method::POST, "/sessions", Some(json!({"participant_id": "P01", "day": 2, "session_index": 1}))).await;
    assert_eq!(st, StatusCode::OK);
    let (st, dup) = call(&app, Method::POST, "/sessions", Some(json!({"participant_id": "P01", "day": 2, "session_index": 1}))).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(dup["error"], "protocol");

    let (st, _) = call(&app, Method::GET, "/sessions/P09-d1-s1/slots", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = call(&app, Method::POST, "/sessions/P01-d2-s1/speed-request", Some(json!({"direction": 1}))).await;
    assert_eq!(st, StatusCode::CONFLICT);

    for (i, free) in [true, false, true].into_iter().enumerate() {
        call(&app, Method::POST, "/sessions/P01-d2-s1/trials", Some(json!({"index": i + 1, "handrail_free": free}))).await;
    }
    let (st, d) = call(&app, Method::POST, "/sessions/P01-d2-s1/speed-request", Some(json!({"direction": 1}))).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(d["granted"], true);
    let (st, _) = call(&app, Method::POST, "/sessions/P01-d2-s1/evaluation", None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    let (st, e) = call(&app, Method::POST, "/participants/P01/confidence", Some(json!({"day": 2, "rating": 11}))).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY, "{e}");
    let (st, _) = call(&app, Method::GET, "/participants/P01/report", None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
}
