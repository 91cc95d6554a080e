use std::sync::OnceLock;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use blinkscope_core::ear::EarVariant;
use blinkscope_core::io::{export_scores, stats_json};
use blinkscope_core::synth::{generate, SynthConfig};
use blinkscope_core::{DetectionParams, Recording};
use blinkscope_service::{router, AppState, ServiceConfig};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

fn fixture_csv() -> &'static str {
    static CSV: OnceLock<String> = OnceLock::new();
    CSV.get_or_init(|| {
        let synth = generate(&SynthConfig {
            duration_s: 90.0,
            seed: 11,
            ..Default::default()
        })
        .unwrap();
        String::from_utf8(export_scores(&synth.left, &synth.right, EarVariant::TwoD).unwrap()).unwrap()
    })
}

fn app(dir: &std::path::Path) -> Router {
    router(AppState::new(ServiceConfig {
        snapshot_dir: dir.to_path_buf(),
    }))
}

struct Reply {
    status: StatusCode,
    content_type: Option<String>,
    bytes: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.bytes).unwrap_or_else(|e| {
            panic!("{e}: {}", String::from_utf8_lossy(&self.bytes))
        })
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(serde_json::to_vec(&v).unwrap())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = res.status();
    let content_type = res
        .headers()
        .get(header::CONTENT_TYPE)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = res.into_body().collect().await.unwrap().to_bytes().to_vec();
    Reply { status, content_type, bytes }
}

async fn new_session(app: &Router) -> String {
    let r = call(app, Method::POST, "/api/v1/sessions", Some(json!({ "csv": fixture_csv(), "fps": 240.0 }))).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&r.bytes));
    r.json()["id"].as_str().unwrap().to_string()
}

async fn detected_session(app: &Router) -> String {
    let id = new_session(app).await;
    let r = call(app, Method::POST, &format!("/api/v1/sessions/{id}/detect"), None).await;
    assert_eq!(r.status, StatusCode::OK);
    id
}

#[tokio::test]
async fn create_reports_columns_and_auto_selection() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let r = call(&app, Method::POST, "/api/v1/sessions", Some(json!({ "csv": fixture_csv(), "fps": 240.0 }))).await;
    assert_eq!(r.status, StatusCode::CREATED);
    let info = r.json();
    assert_eq!(info["frames"], 21_600);
    assert_eq!(info["detected"], false);
    assert_eq!(info["version"], 0);

    let id = info["id"].as_str().unwrap();
    let cols = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/columns"), None).await.json();
    assert_eq!(cols["columns"], json!(["frame", "EAR2D6_l", "EAR2D6_r"]));
    assert_eq!(cols["auto_selection"], json!({ "left_column": "EAR2D6_l", "right_column": "EAR2D6_r" }));
    assert_eq!(cols["selection"], cols["auto_selection"]);
}

#[tokio::test]
async fn bad_uploads_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let missing = call(
        &app,
        Method::POST,
        "/api/v1/sessions",
        Some(json!({ "csv": fixture_csv(), "fps": 240.0, "left_column": "nope", "right_column": "EAR2D6_r" })),
    )
    .await;
    assert_eq!(missing.status, StatusCode::BAD_REQUEST);
    assert!(missing.json()["error"]["message"].as_str().unwrap().contains("nope"));

    let fps = call(&app, Method::POST, "/api/v1/sessions", Some(json!({ "csv": fixture_csv(), "fps": 0 }))).await;
    assert_eq!(fps.status, StatusCode::BAD_REQUEST);
    assert_eq!(fps.json()["error"]["fields"][0]["field"], "fps");

    let malformed = call(&app, Method::POST, "/api/v1/sessions", Some(json!({ "fps": 240 }))).await;
    assert_eq!(malformed.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_session_is_404() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    for (method, path) in [
        (Method::GET, ""),
        (Method::GET, "/columns"),
        (Method::POST, "/detect"),
        (Method::GET, "/events"),
        (Method::GET, "/stats"),
        (Method::GET, "/summary.svg"),
        (Method::DELETE, ""),
    ] {
        let r = call(&app, method, &format!("/api/v1/sessions/missing{path}"), None).await;
        assert_eq!(r.status, StatusCode::NOT_FOUND, "{path}");
        assert_eq!(r.json()["error"]["code"], "session_not_found");
    }
}

#[tokio::test]
async fn stats_before_detection_is_409() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    for path in ["stats", "summary", "events", "matches"] {
        let r = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/{path}"), None).await;
        assert_eq!(r.status, StatusCode::CONFLICT, "{path}");
    }
}

#[tokio::test]
async fn invalid_params_list_every_field() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    let uri = format!("/api/v1/sessions/{id}/params");
    let r = call(&app, Method::PUT, &uri, Some(json!({ "min_distance": "many", "rel_height": 2.0, "bogus": 1 }))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    let err = r.json()["error"].clone();
    assert_eq!(err["code"], "invalid_params");
    let mut fields: Vec<&str> = err["fields"].as_array().unwrap().iter().map(|f| f["field"].as_str().unwrap()).collect();
    fields.sort_unstable();
    // rel_height parses; its range is checked once the others are fixed
    assert_eq!(fields, ["bogus", "min_distance"]);

    let r = call(&app, Method::PUT, &uri, Some(json!({ "rel_height": 2.0 }))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
    assert_eq!(r.json()["error"]["fields"][0]["field"], "rel_height");

    let r = call(&app, Method::PUT, &uri, Some(json!({ "threshold_mode": "manual", "manual_threshold_left": 0.2 }))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);

    let ok = call(&app, Method::PUT, &uri, Some(json!({ "min_prominence": 0.08, "max_width": null }))).await;
    assert_eq!(ok.status, StatusCode::OK);
    let body = ok.json();
    assert_eq!(body["params"]["min_prominence"], 0.08);
    assert_eq!(body["params"]["min_distance"], 50);
    assert_eq!(body["version"], 1);
    let again = call(&app, Method::GET, &uri, None).await.json();
    assert_eq!(again, body);
}

#[tokio::test]
async fn stats_match_the_direct_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = detected_session(&app).await;
    let served = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/stats"), None).await.json();

    let (rec, _) = Recording::from_score_csv(fixture_csv().as_bytes(), None, 240.0).unwrap();
    let det = rec.detect(&DetectionParams::default()).unwrap();
    let direct = stats_json(&rec.statistics(&det).unwrap());
    assert_eq!(served["stats"], direct);

    let csv = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/stats.csv"), None).await;
    assert_eq!(csv.content_type.as_deref(), Some("text/csv"));
    assert!(String::from_utf8(csv.bytes).unwrap().starts_with("statistic,value,unit\n"));
}

#[tokio::test]
async fn patching_a_state_moves_one_blink_between_totals() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = detected_session(&app).await;
    let base = format!("/api/v1/sessions/{id}");
    let before = call(&app, Method::GET, &format!("{base}/stats"), None).await.json();

    let events = call(&app, Method::GET, &format!("{base}/events?eye=left&limit=10000"), None).await.json();
    let target = events["events"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["state"] == "complete")
        .unwrap()
        .clone();
    let eid = target["id"].as_u64().unwrap();
    let version = events["version"].as_u64().unwrap();

    let r = call(&app, Method::PATCH, &format!("{base}/events/{eid}"), Some(json!({ "state": "partial", "base_version": version }))).await;
    assert_eq!(r.status, StatusCode::OK);
    let patched = r.json();
    assert_eq!(patched["version"].as_u64().unwrap(), version + 1);
    assert_eq!(patched["dirty"], true);
    assert_eq!(patched["overwrote_newer"], false);
    assert_eq!(patched["event"]["state"], "partial");
    assert_eq!(patched["event"]["state_source"], "manual");

    let info = call(&app, Method::GET, &base, None).await.json();
    assert_eq!(info["dirty"], true);
    assert_eq!(info["manual_edits"], 1);

    let after = call(&app, Method::GET, &format!("{base}/stats"), None).await.json();
    let count = |v: &Value, k: &str| v["stats"][k].as_u64().unwrap();
    assert_eq!(count(&after, "Partial_Blink_Total_left"), count(&before, "Partial_Blink_Total_left") + 1);
    assert_eq!(count(&after, "Complete_Blink_Total_left"), count(&before, "Complete_Blink_Total_left") - 1);
    assert_eq!(after["stats"]["Partial_Blink_Total_right"], before["stats"]["Partial_Blink_Total_right"]);
    assert_eq!(call(&app, Method::GET, &base, None).await.json()["dirty"], false);

    // a stale base version still wins, but is reported
    let r = call(&app, Method::PATCH, &format!("{base}/events/{eid}"), Some(json!({ "state": "none", "base_version": version }))).await;
    assert_eq!(r.json()["overwrote_newer"], true);

    let r = call(&app, Method::PATCH, &format!("{base}/events/999999"), Some(json!({ "state": "none" }))).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
    let r = call(&app, Method::PATCH, &format!("{base}/events/{eid}"), Some(json!({ "state": "closed" }))).await;
    assert_eq!(r.status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn edits_survive_reads_but_not_redetection() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = detected_session(&app).await;
    let base = format!("/api/v1/sessions/{id}");
    call(&app, Method::PATCH, &format!("{base}/events/0"), Some(json!({ "state": "none" }))).await;
    for _ in 0..2 {
        let e = call(&app, Method::GET, &format!("{base}/events/0"), None).await.json();
        assert_eq!(e["event"]["state"], "none");
    }
    let r = call(&app, Method::POST, &format!("{base}/detect"), None).await.json();
    assert!(r["warning"].as_str().unwrap().contains("1 manual"));
    let e = call(&app, Method::GET, &format!("{base}/events/0"), None).await.json();
    assert_eq!(e["event"]["state_source"], "auto");
    let r = call(&app, Method::POST, &format!("{base}/detect"), None).await.json();
    assert!(r["warning"].is_null());
}

#[tokio::test]
async fn event_paging() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = detected_session(&app).await;
    let all = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/events?limit=10000"), None).await.json();
    let total = all["total"].as_u64().unwrap() as usize;
    assert!(total > 20);
    let mut paged = Vec::new();
    let mut offset = 0;
    while offset < total {
        let page = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/events?offset={offset}&limit=7"), None).await.json();
        paged.extend(page["events"].as_array().unwrap().iter().cloned());
        offset += 7;
    }
    assert_eq!(Value::Array(paged), all["events"]);

    let matches = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/matches"), None).await.json();
    let n: usize = matches["matches"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["left_id"].is_u64() as usize + m["right_id"].is_u64() as usize)
        .sum();
    assert_eq!(n, total);
}

#[tokio::test]
async fn identical_state_gives_identical_responses() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let a = detected_session(&app).await;
    let b = detected_session(&app).await;
    for path in ["stats", "summary", "events?limit=10000", "matches", "summary.svg", "series?eye=right&points=500"] {
        let x = call(&app, Method::GET, &format!("/api/v1/sessions/{a}/{path}"), None).await;
        let y = call(&app, Method::GET, &format!("/api/v1/sessions/{b}/{path}"), None).await;
        let z = call(&app, Method::GET, &format!("/api/v1/sessions/{a}/{path}"), None).await;
        assert_eq!(x.status, StatusCode::OK, "{path}");
        assert_eq!(x.bytes, y.bytes, "{path}");
        assert_eq!(x.bytes, z.bytes, "{path}");
    }
}

#[tokio::test]
async fn summary_svg_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = detected_session(&app).await;
    let svg = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/summary.svg"), None).await;
    assert_eq!(svg.content_type.as_deref(), Some("image/svg+xml"));
    assert!(String::from_utf8(svg.bytes).unwrap().contains("<svg "));

    let bundle = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/summary"), None).await.json();
    assert_eq!(bundle["summary"]["blinks_per_minute"].as_array().unwrap().len(), 2);

    let s = call(&app, Method::GET, &format!("/api/v1/sessions/{id}/series?eye=left&start=1000&end=3000&points=101"), None).await.json();
    let frames: Vec<u64> = s["frames"].as_array().unwrap().iter().map(|f| f.as_u64().unwrap()).collect();
    assert!(frames.len() <= 101);
    assert_eq!(frames[0], 1000);
    assert_eq!(*frames.last().unwrap(), 2999);
    assert!(frames.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(s["t"][0], 1000.0 / 240.0);
}

#[tokio::test]
async fn snapshot_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let app1 = app(dir.path());
    let id = detected_session(&app1).await;
    call(&app1, Method::PATCH, &format!("/api/v1/sessions/{id}/events/3"), Some(json!({ "state": "none" }))).await;
    let stats = call(&app1, Method::GET, &format!("/api/v1/sessions/{id}/stats"), None).await.json();
    let snap = call(&app1, Method::POST, &format!("/api/v1/sessions/{id}/snapshot"), None).await;
    assert_eq!(snap.status, StatusCode::OK);
    assert!(dir.path().join(format!("{id}.json")).exists());

    // a fresh service, as after a restart
    let app2 = app(dir.path());
    let r = call(&app2, Method::POST, &format!("/api/v1/snapshots/{id}/restore"), None).await;
    assert_eq!(r.status, StatusCode::CREATED);
    assert_eq!(r.json()["version"], stats["version"]);
    let restored = call(&app2, Method::GET, &format!("/api/v1/sessions/{id}/stats"), None).await.json();
    assert_eq!(restored, stats);
    let again = call(&app2, Method::POST, &format!("/api/v1/snapshots/{id}/restore"), None).await;
    assert_eq!(again.status, StatusCode::CONFLICT);
    let missing = call(&app2, Method::POST, "/api/v1/snapshots/nothing-here/restore", None).await;
    assert_eq!(missing.status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn delete_session() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    let r = call(&app, Method::DELETE, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(r.status, StatusCode::NO_CONTENT);
    let r = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await;
    assert_eq!(r.status, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_patches_are_serialized() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = detected_session(&app).await;
    let start = call(&app, Method::GET, &format!("/api/v1/sessions/{id}"), None).await.json()["version"].as_u64().unwrap();
    let mut tasks = Vec::new();
    for k in 0..32u64 {
        let app = app.clone();
        let uri = format!("/api/v1/sessions/{id}/events/{}", k % 4);
        let state = if k % 2 == 0 { "partial" } else { "complete" };
        tasks.push(tokio::spawn(async move {
            call(&app, Method::PATCH, &uri, Some(json!({ "state": state }))).await.json()["version"].as_u64().unwrap()
        }));
    }
    let mut versions = Vec::new();
    for t in tasks {
        versions.push(t.await.unwrap());
    }
    versions.sort_unstable();
    assert_eq!(versions, (start + 1..=start + 32).collect::<Vec<_>>());
}
