use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use serde_json::json;
use spineplan_core::{Point2, ScrewId, Session, ViewKind};

use crate::api::*;
use crate::detector;
use crate::error::{ApiError, ApiJson, ApiPath as Path};
use crate::state::AppState;

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/detect", post(run_detection))
        .route("/sessions/{id}/views/{view}/boxes", put(put_boxes))
        .route("/sessions/{id}/views/{view}/calibration", put(put_calibration))
        .route("/sessions/{id}/orientation", post(set_orientation))
        .route("/sessions/{id}/labels", post(label_vertebra))
        .route("/sessions/{id}/screws", post(add_screw).get(list_screws))
        .route("/sessions/{id}/screws/{sid}/endpoint", patch(move_endpoint))
        .route("/sessions/{id}/screws/{sid}/params", patch(set_params))
        .route("/sessions/{id}/plan", get(export_plan))
        .route("/images/{*path}", get(image))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

fn check_session_id(id: &str) -> ApiResult<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(ApiError::bad_request(format!("session id '{id}' must be 1-128 characters of [A-Za-z0-9._-]")))
    }
}

fn parse_view(view: &str) -> ApiResult<ViewKind> {
    view.parse().map_err(ApiError::bad_request)
}

async fn create_session(State(state): State<AppState>, ApiJson(req): ApiJson<CreateSession>) -> ApiResult<Response> {
    let id = match req.id {
        Some(id) => {
            check_session_id(&id)?;
            id
        }
        None => uuid::Uuid::new_v4().simple().to_string(),
    };
    let session = Session::new(id, &req.ap, &req.lp)?;
    let snapshot = SessionSnapshot::new(&session);
    state.insert(session)?;
    Ok((StatusCode::CREATED, Json(snapshot)).into_response())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionSnapshot>> {
    state.read(&id, SessionSnapshot::new).map(Json)
}

async fn run_detection(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Detections>> {
    let (ap_ref, lp_ref) = state.read(&id, |s| {
        (s.view(ViewKind::Ap).image_ref().to_string(), s.view(ViewKind::Lp).image_ref().to_string())
    })?;
    // the detector may be slow; the session stays unlocked meanwhile
    let (ap, lp) = tokio::join!(detector::detect(state.config(), &ap_ref), detector::detect(state.config(), &lp_ref));
    let (ap, lp) = (ap?, lp?);
    state.write(&id, |s| {
        let mut next = s.clone();
        next.attach_detections(ViewKind::Ap, ap)?;
        next.attach_detections(ViewKind::Lp, lp)?;
        *s = next;
        Ok(Detections { ap: s.view(ViewKind::Ap).boxes(), lp: s.view(ViewKind::Lp).boxes() })
    })
    .map(Json)
}

async fn put_boxes(
    State(state): State<AppState>,
    Path((id, view)): Path<(String, String)>,
    ApiJson(req): ApiJson<PutBoxes>,
) -> ApiResult<Json<ViewSnapshot>> {
    let view = parse_view(&view)?;
    state
        .write(&id, |s| {
            s.attach_detections(view, req.boxes)?;
            Ok(ViewSnapshot::new(s.view(view)))
        })
        .map(Json)
}

async fn put_calibration(
    State(state): State<AppState>,
    Path((id, view)): Path<(String, String)>,
    ApiJson(req): ApiJson<SetCalibration>,
) -> ApiResult<Json<SessionSnapshot>> {
    let view = parse_view(&view)?;
    state
        .write(&id, |s| {
            s.set_calibration(view, req.scale, req.v_offset)?;
            Ok(SessionSnapshot::new(s))
        })
        .map(Json)
}

async fn set_orientation(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<SetOrientation>,
) -> ApiResult<Json<SessionSnapshot>> {
    state
        .write(&id, |s| {
            s.set_orientation(req.view, req.rotation, req.flip);
            Ok(SessionSnapshot::new(s))
        })
        .map(Json)
}

async fn label_vertebra(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<LabelRequest>,
) -> ApiResult<Json<LabelResponse>> {
    state
        .write(&id, |s| s.label_vertebra(req.view, Point2::new(req.u, req.v), req.label))
        .map(|l| Json(LabelResponse::new(req.view, req.label, l)))
}

async fn add_screw(
    State(state): State<AppState>,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<AddScrew>,
) -> ApiResult<Response> {
    let view = state.write(&id, |s| {
        let screw = s.add_screw(req.vertebra_label, req.side)?;
        Ok(ScrewView::new(s, &screw))
    })?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn list_screws(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<ScrewView>>> {
    state
        .read(&id, |s| s.screws().iter().map(|sc| ScrewView::new(s, sc)).collect())
        .map(Json)
}

async fn move_endpoint(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, u64)>,
    ApiJson(req): ApiJson<MoveEndpoint>,
) -> ApiResult<Json<ScrewView>> {
    state
        .write(&id, |s| {
            let screw = s.move_endpoint(ScrewId(sid), req.view, req.endpoint, Point2::new(req.u, req.v))?;
            Ok(ScrewView::new(s, &screw))
        })
        .map(Json)
}

async fn set_params(
    State(state): State<AppState>,
    Path((id, sid)): Path<(String, u64)>,
    ApiJson(req): ApiJson<SetParams>,
) -> ApiResult<Json<ScrewView>> {
    state
        .write(&id, |s| {
            let screw = s.set_screw_params(ScrewId(sid), req.diameter, req.screw_type)?;
            Ok(ScrewView::new(s, &screw))
        })
        .map(Json)
}

async fn export_plan(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let text = state.read(&id, |s| s.export_plan().map(|p| p.to_text()))??;
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], text).into_response())
}

fn content_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("bmp") => "image/bmp",
        Some("tif" | "tiff") => "image/tiff",
        Some("txt") => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// Image files are passed through untouched; the service never decodes pixels.
async fn image(State(state): State<AppState>, Path(rel): Path<String>) -> ApiResult<Response> {
    let missing = || ApiError::not_found(format!("no image '{rel}'"));
    let root = state.config().fixture_root.as_ref().ok_or_else(missing)?;
    let path = detector::contained(root, &rel).ok_or_else(missing)?;
    let bytes = tokio::fs::read(&path).await.map_err(|_| missing())?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}
