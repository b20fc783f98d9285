//! Driving the HTTP API without a socket.
//!
//! [`call`] sends one request through the router; [`ServiceTarget`] wraps it
//! as a [`PlanTarget`] so planning scripts can run against the service
//! exactly as a remote client would.

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use spineplan_core::script::{PlanTarget, TargetError};
use spineplan_core::{BBox, Endpoint, ImageMeta, Point2, Rotation, ScrewId, Side, VertebraLabel, ViewKind};
use tower::ServiceExt;

use crate::api::*;
use crate::error::ErrorBody;

/// Status and raw body of a response.
#[derive(Debug, Clone)]
pub struct Reply {
    pub status: StatusCode,
    pub content_type: Option<String>,
    pub body: Vec<u8>,
}

impl Reply {
    pub fn json<T: serde::de::DeserializeOwned>(&self) -> serde_json::Result<T> {
        serde_json::from_slice(&self.body)
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }

    /// The structured error, if this is one.
    pub fn error(&self) -> Option<ErrorBody> {
        if self.status.is_success() {
            None
        } else {
            self.json().ok()
        }
    }
}

/// Sends one request through `router`. `body`, if given, is sent as JSON.
pub async fn call(router: &Router, method: Method, uri: &str, body: Option<&Value>) -> Reply {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(serde_json::to_vec(v).expect("JSON value serializes"))
        }
        None => Body::empty(),
    };
    let resp = router.clone().oneshot(req.body(body).expect("valid request")).await.expect("router is infallible");
    let status = resp.status();
    let content_type = resp.headers().get("content-type").and_then(|v| v.to_str().ok()).map(str::to_string);
    let body = resp.into_body().collect().await.map(|b| b.to_bytes().to_vec()).unwrap_or_default();
    Reply { status, content_type, body }
}

/// A [`PlanTarget`] backed by the service API.
///
/// Owns a small runtime to block on requests, so it must not be used from
/// inside another async runtime.
pub struct ServiceTarget {
    router: Router,
    runtime: tokio::runtime::Runtime,
    session: Option<String>,
}

impl ServiceTarget {
    pub fn new(router: Router) -> Self {
        let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().expect("tokio runtime");
        ServiceTarget { router, runtime, session: None }
    }

    fn send(&self, method: Method, path: &str, body: Option<Value>) -> Result<Reply, TargetError> {
        let reply = self.runtime.block_on(call(&self.router, method, path, body.as_ref()));
        if reply.status.is_success() {
            return Ok(reply);
        }
        Err(match reply.error() {
            Some(e) => TargetError::new(e.code, e.message),
            None => TargetError::new("HTTP_ERROR", format!("{} {}", reply.status, reply.text())),
        })
    }

    fn session_path(&self, tail: &str) -> Result<String, TargetError> {
        match &self.session {
            Some(id) => Ok(format!("/sessions/{id}{tail}")),
            None => Err(TargetError::new("NO_SESSION", "no images selected yet")),
        }
    }

    fn to_json<T: serde::Serialize>(v: &T) -> Option<Value> {
        Some(serde_json::to_value(v).expect("request bodies serialize"))
    }
}

impl PlanTarget for ServiceTarget {
    fn create(&mut self, id: &str, ap: &ImageMeta, lp: &ImageMeta) -> Result<(), TargetError> {
        let req = CreateSession { id: Some(id.to_string()), ap: ap.clone(), lp: lp.clone() };
        self.send(Method::POST, "/sessions", Self::to_json(&req))?;
        self.session = Some(id.to_string());
        Ok(())
    }

    fn calibrate(&mut self, view: ViewKind, scale: f64, v_offset: f64) -> Result<(), TargetError> {
        let path = self.session_path(&format!("/views/{view}/calibration"))?;
        self.send(Method::PUT, &path, Self::to_json(&SetCalibration { scale, v_offset }))?;
        Ok(())
    }

    fn orient(&mut self, view: ViewKind, rotation: Rotation, flip: bool) -> Result<(), TargetError> {
        let path = self.session_path("/orientation")?;
        self.send(Method::POST, &path, Self::to_json(&SetOrientation { view, rotation, flip }))?;
        Ok(())
    }

    fn attach(&mut self, view: ViewKind, boxes: Vec<BBox>) -> Result<(), TargetError> {
        let path = self.session_path(&format!("/views/{view}/boxes"))?;
        self.send(Method::PUT, &path, Self::to_json(&PutBoxes { boxes }))?;
        Ok(())
    }

    fn label(&mut self, view: ViewKind, at: Point2, label: VertebraLabel) -> Result<(), TargetError> {
        let path = self.session_path("/labels")?;
        self.send(Method::POST, &path, Self::to_json(&LabelRequest { view, u: at.u, v: at.v, label }))?;
        Ok(())
    }

    fn add_screw(&mut self, label: VertebraLabel, side: Side) -> Result<ScrewId, TargetError> {
        let path = self.session_path("/screws")?;
        let reply = self.send(Method::POST, &path, Self::to_json(&AddScrew { vertebra_label: label, side }))?;
        let view: ScrewView = reply.json().map_err(|e| TargetError::new("HTTP_ERROR", e.to_string()))?;
        Ok(view.screw.id)
    }

    fn move_endpoint(&mut self, id: ScrewId, view: ViewKind, endpoint: Endpoint, to: Point2) -> Result<(), TargetError> {
        let path = self.session_path(&format!("/screws/{}/endpoint", id.0))?;
        self.send(Method::PATCH, &path, Self::to_json(&MoveEndpoint { view, endpoint, u: to.u, v: to.v }))?;
        Ok(())
    }

    fn set_params(&mut self, id: ScrewId, diameter: Option<f64>, screw_type: Option<String>) -> Result<(), TargetError> {
        let path = self.session_path(&format!("/screws/{}/params", id.0))?;
        self.send(Method::PATCH, &path, Self::to_json(&SetParams { diameter, screw_type }))?;
        Ok(())
    }

    fn export(&mut self) -> Result<String, TargetError> {
        if self.session.is_none() {
            return Err(TargetError::new("EMPTY_PLAN", "plan has no screws"));
        }
        let path = self.session_path("/plan")?;
        Ok(self.send(Method::GET, &path, None)?.text())
    }
}
