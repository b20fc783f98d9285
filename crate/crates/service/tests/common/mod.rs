#![allow(dead_code)]

use axum::http::{Method, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use spineplan_core::BBox;
use spineplan_service::client::{call, Reply};
use spineplan_service::{router, AppState, Config};

pub fn app(config: Config) -> (Router, AppState) {
    let state = AppState::new(config);
    (router(state.clone()), state)
}

pub fn b(x1: f64, y1: f64, x2: f64, y2: f64, c: f64) -> BBox {
    BBox::new(x1, y1, x2, y2, c).unwrap()
}

/// Three lumbar levels per view; L4 is the pair used by the placement oracle.
pub fn ap_boxes() -> Vec<BBox> {
    vec![b(104.0, 130.0, 176.0, 190.0, 0.90), b(100.0, 200.0, 180.0, 260.0, 0.95), b(98.0, 270.0, 186.0, 335.0, 0.93)]
}

pub fn lp_boxes() -> Vec<BBox> {
    vec![b(44.0, 128.0, 138.0, 188.0, 0.88), b(40.0, 200.0, 140.0, 260.0, 0.94), b(42.0, 272.0, 146.0, 338.0, 0.90)]
}

pub async fn req(router: &Router, method: Method, uri: &str, body: Value) -> Reply {
    let body = (!body.is_null()).then_some(body);
    call(router, method, uri, body.as_ref()).await
}

pub fn create_body(id: &str) -> Value {
    json!({
        "id": id,
        "ap": { "image_ref": "ap.png", "width": 512, "height": 1024 },
        "lp": { "image_ref": "lp.png", "width": 512, "height": 1024 },
    })
}

/// Creates session `id` with boxes attached and L4 labeled in both views.
pub async fn labeled_session(router: &Router, id: &str) {
    let r = req(router, Method::POST, "/sessions", create_body(id)).await;
    assert_eq!(r.status, StatusCode::CREATED, "{}", r.text());
    for (view, boxes) in [("ap", ap_boxes()), ("lp", lp_boxes())] {
        let r = req(router, Method::PUT, &format!("/sessions/{id}/views/{view}/boxes"), json!({ "boxes": boxes })).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    }
    for (view, u, v) in [("ap", 140.0, 230.0), ("lp", 90.0, 230.0)] {
        let r = req(router, Method::POST, &format!("/sessions/{id}/labels"), json!({ "view": view, "u": u, "v": v, "label": "L4" })).await;
        assert_eq!(r.status, StatusCode::OK, "{}", r.text());
    }
}

pub fn code(r: &Reply) -> String {
    r.error().map(|e| e.code).unwrap_or_default()
}
