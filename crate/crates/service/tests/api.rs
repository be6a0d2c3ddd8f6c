use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use respi_core::history::NodeKind;
use respi_core::{alpha_tag_equal, scenarios, Configuration, MemoryGraph, RedexId, Trace};
use respi_service::{router, AppState, Redexes, StepEvent};
use serde_json::{json, Value};
use tower::ServiceExt;

async fn call(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

fn post_json(uri: &str, body: Value) -> Request<Body> {
    Request::post(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap()
}

async fn load(app: &Router, source: &str, types: Option<&str>) -> u64 {
    let (status, body) = call(app, post_json("/programs", json!({ "source": source, "types": types }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    body["id"].as_u64().unwrap()
}

async fn redexes(app: &Router, id: u64) -> Redexes {
    let (status, body) = call(app, get(&format!("/programs/{id}/redexes"))).await;
    assert_eq!(status, StatusCode::OK);
    serde_json::from_value(body).unwrap()
}

async fn step(app: &Router, id: u64, r: &RedexId) -> (StatusCode, Value) {
    call(app, post_json(&format!("/programs/{id}/step"), json!(r.to_string()))).await
}

fn config(body: &Value) -> Configuration {
    serde_json::from_value(body["configuration"]["ast"].clone()).unwrap()
}

fn app() -> Router {
    router(AppState::default())
}

#[tokio::test]
async fn providers_load_well_typed() {
    let app = app();
    let req = post_json("/programs", json!({ "source": scenarios::PROVIDERS, "types": scenarios::PROVIDERS_TYPES }));
    let (status, body) = call(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["types"]["verdict"], "well-typed");
    assert!(body["configuration"]["text"].as_str().unwrap().contains("t1 :"));
}

#[tokio::test]
async fn plain_text_nil_has_no_redexes() {
    let app = app();
    let req = Request::post("/programs").body(Body::from("0")).unwrap();
    let (status, body) = call(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["types"]["verdict"], "unchecked");
    let r = redexes(&app, body["id"].as_u64().unwrap()).await;
    assert!(r.forward.is_empty() && r.backward.is_empty());
}

#[tokio::test]
async fn garbage_is_rejected_with_a_span() {
    let app = app();
    let (status, body) = call(&app, Request::post("/programs").body(Body::from("t1 : x!<")).unwrap()).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["diagnostic"]["span"]["start"].is_u64(), "{body}");
}

#[tokio::test]
async fn ill_typed_program_is_rejected() {
    let app = app();
    let req = post_json(
        "/programs",
        json!({ "source": scenarios::PARALLEL_REQUESTS, "types": scenarios::PROVIDERS_TYPES }),
    );
    let (status, body) = call(&app, req).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(body["error"].as_str().unwrap().contains("linearity-violation"), "{body}");
}

#[tokio::test]
async fn unknown_program_is_404() {
    let app = app();
    for uri in ["/programs/9/redexes", "/programs/9/graph", "/programs/9/trace", "/programs/9/events"] {
        assert_eq!(call(&app, get(uri)).await.0, StatusCode::NOT_FOUND, "{uri}");
    }
    assert_eq!(step(&app, 9, &"fwd:If:t1:then".parse().unwrap()).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn init_adds_one_memory_node_and_stale_ids_conflict() {
    let app = app();
    let id = load(&app, scenarios::PROVIDERS, None).await;
    let r = redexes(&app, id).await;
    assert_eq!(r.forward.len(), 2);
    let (status, body) = step(&app, id, &r.forward[0]).await;
    assert_eq!(status, StatusCode::OK);
    let added: Vec<&Value> = body["graph_delta"]["added_nodes"].as_array().unwrap().iter().collect();
    assert_eq!(added.iter().filter(|n| n["kind"] == "memory").count(), 1);
    assert_eq!(added.iter().filter(|n| n["kind"] == "thread").count(), 2);
    // The competing Init shares the client thread.
    let (status, _) = step(&app, id, &r.forward[1]).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn forward_then_mirror_restores_the_configuration() {
    let app = app();
    let id = load(&app, scenarios::PROVIDERS, None).await;
    let mut prev = scenarios::providers();
    for _ in 0..3 {
        let r = redexes(&app, id).await.forward[0].clone();
        let (_, fwd) = step(&app, id, &r).await;
        let mirror: RedexId = serde_json::from_value(json!(
            serde_json::from_value::<respi_core::Step>(fwd["step"].clone()).unwrap().mirror()
        ))
        .unwrap();
        let (status, back) = step(&app, id, &mirror).await;
        assert_eq!(status, StatusCode::OK, "{back}");
        assert!(alpha_tag_equal(&config(&back), &prev));
        let (_, again) = step(&app, id, &redexes(&app, id).await.forward[0]).await;
        prev = config(&again);
    }
}

#[tokio::test]
async fn rollback_over_the_api() {
    let app = app();
    let id = load(&app, scenarios::PROVIDERS, None).await;
    let initial = scenarios::providers();
    let first = redexes(&app, id).await.forward[0].clone();
    step(&app, id, &first).await;
    for _ in 0..4 {
        let r = redexes(&app, id).await.forward[0].clone();
        step(&app, id, &r).await;
    }
    let (status, _) = call(&app, post_json(&format!("/programs/{id}/rollback"), json!("m999"))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let graph: MemoryGraph =
        serde_json::from_value(call(&app, get(&format!("/programs/{id}/graph"))).await.1["graph"].clone()).unwrap();
    let root = graph.memory_nodes().map(|n| n.id.clone()).min_by_key(|s| s[1..].parse::<u64>().unwrap()).unwrap();
    let (status, body) = call(&app, post_json(&format!("/programs/{id}/rollback"), json!({ "memory": root }))).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["trace"].as_array().unwrap().len(), 5);
    assert!(alpha_tag_equal(&config(&body), &initial));
    let (_, trace) = call(&app, get(&format!("/programs/{id}/trace"))).await;
    assert_eq!(trace["steps"].as_array().unwrap().len(), 10);
}

#[tokio::test]
async fn trace_and_graph_exports_parse() {
    let app = app();
    let id = load(&app, scenarios::PROVIDERS, None).await;
    let mut last = Value::Null;
    for _ in 0..5 {
        let r = redexes(&app, id).await.forward[0].clone();
        let (status, body) = step(&app, id, &r).await;
        assert_eq!(status, StatusCode::OK);
        last = body;
    }
    let (_, trace) = call(&app, get(&format!("/programs/{id}/trace"))).await;
    assert_eq!(trace["steps"].as_array().unwrap().len(), 5);
    let parsed = Trace::from_text(trace["text"].as_str().unwrap(), None).unwrap();
    assert_eq!(parsed.len(), 5);
    assert_eq!(parsed.final_configuration().unwrap(), config(&last));
    let (_, graph) = call(&app, get(&format!("/programs/{id}/graph"))).await;
    let dot = MemoryGraph::from_dot(graph["dot"].as_str().unwrap()).unwrap();
    let wire: MemoryGraph = serde_json::from_value(graph["graph"].clone()).unwrap();
    assert_eq!(dot, wire);
    assert_eq!(dot.nodes.iter().filter(|n| n.kind == NodeKind::Memory).count(), 5);
}

/// Reads server-sent events from a streaming response until `n` arrive.
async fn read_events(body: Body, n: usize) -> Vec<StepEvent> {
    let mut body = body;
    let mut buf = String::new();
    let mut out = Vec::new();
    while out.len() < n {
        let frame = body.frame().await.expect("stream ended early").unwrap();
        let Ok(data) = frame.into_data() else { continue };
        buf.push_str(std::str::from_utf8(&data).unwrap());
        while let Some(end) = buf.find("\n\n") {
            let record: String = buf.drain(..end + 2).collect();
            for line in record.lines() {
                if let Some(json) = line.strip_prefix("data: ") {
                    out.push(serde_json::from_str(json).unwrap());
                }
            }
        }
    }
    out
}

#[tokio::test]
async fn events_arrive_once_in_order() {
    let app = app();
    let id = load(&app, scenarios::PROVIDERS, None).await;
    for _ in 0..2 {
        let r = redexes(&app, id).await.forward[0].clone();
        step(&app, id, &r).await;
    }
    let res = app.clone().oneshot(get(&format!("/programs/{id}/events"))).await.unwrap();
    assert_eq!(res.status(), StatusCode::OK);
    assert!(res.headers()[header::CONTENT_TYPE].to_str().unwrap().starts_with("text/event-stream"));
    let mut applied = Vec::new();
    for _ in 0..3 {
        let r = redexes(&app, id).await.forward[0].clone();
        let (_, body) = step(&app, id, &r).await;
        applied.push(body["step"].clone());
    }
    let events = read_events(res.into_body(), 5).await;
    assert_eq!(events.iter().map(|e| e.index).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
    let (_, trace) = call(&app, get(&format!("/programs/{id}/trace"))).await;
    for (e, s) in events.iter().zip(trace["steps"].as_array().unwrap()) {
        assert_eq!(serde_json::to_value(&e.step).unwrap(), *s);
    }
    assert_eq!(serde_json::to_value(&events[4].step).unwrap(), applied[2]);
}

#[tokio::test]
async fn conflicting_steps_are_linearized() {
    for _ in 0..20 {
        let app = app();
        let id = load(&app, scenarios::PROVIDERS, None).await;
        let r = redexes(&app, id).await.forward;
        let (a, b) = (r[0].clone(), r[1].clone());
        let (app1, app2) = (app.clone(), app.clone());
        let h1 = tokio::spawn(async move { step(&app1, id, &a).await.0 });
        let h2 = tokio::spawn(async move { step(&app2, id, &b).await.0 });
        let mut codes = [h1.await.unwrap(), h2.await.unwrap()];
        codes.sort();
        assert_eq!(codes, [StatusCode::OK, StatusCode::CONFLICT]);
        let (_, trace) = call(&app, get(&format!("/programs/{id}/trace"))).await;
        assert_eq!(trace["steps"].as_array().unwrap().len(), 1);
    }
}
