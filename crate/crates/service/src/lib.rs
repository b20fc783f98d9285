//! HTTP/JSON service for planning sessions.
//!
//! Every endpoint is a thin adapter over a [`spineplan_core::Session`]
//! operation. Errors come back as `{code, message, detail}` with the codes
//! of [`spineplan_core::SessionError::code`] plus a few transport-level ones
//! (`BAD_REQUEST`, `UNKNOWN_SESSION`, `SESSION_EXISTS`, `DETECTOR_FAILED`,
//! `NOT_FOUND`).
//!
//! | method | path | success |
//! |---|---|---|
//! | GET | `/health` | 200 |
//! | POST | `/sessions` | 201 snapshot |
//! | GET | `/sessions/{id}` | 200 snapshot |
//! | POST | `/sessions/{id}/detect` | 200 boxes per view |
//! | PUT | `/sessions/{id}/views/{view}/boxes` | 200 view |
//! | PUT | `/sessions/{id}/views/{view}/calibration` | 200 snapshot |
//! | POST | `/sessions/{id}/orientation` | 200 snapshot |
//! | POST | `/sessions/{id}/labels` | 200 box and marker |
//! | POST | `/sessions/{id}/screws` | 201 screw |
//! | GET | `/sessions/{id}/screws` | 200 screws |
//! | PATCH | `/sessions/{id}/screws/{sid}/endpoint` | 200 screw |
//! | PATCH | `/sessions/{id}/screws/{sid}/params` | 200 screw |
//! | GET | `/sessions/{id}/plan` | 200 plan text |
//! | GET | `/images/{path}` | 200 file bytes |

pub mod api;
pub mod client;
pub mod config;
pub mod detector;
pub mod error;
mod routes;
mod state;

pub use config::{Config, ConfigError};
pub use error::{ApiError, ErrorBody, NO_MATCH_MESSAGE};
pub use routes::router;
pub use state::AppState;

/// Binds the configured address. Separate from [`serve`] so callers can
/// report bind failures before anything else happens.
pub async fn bind(config: &Config) -> std::io::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(config.listen).await
}

/// Serves `config` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    config: Config,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let app = router(AppState::new(config));
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Every error code each route can answer with, keyed by `"METHOD pattern"`.
pub const ERROR_CODES: &[(&str, &[&str])] = &[
    ("GET /health", &[]),
    ("POST /sessions", &["BAD_REQUEST", "INVALID_IMAGE", "SESSION_EXISTS"]),
    ("GET /sessions/{id}", &["UNKNOWN_SESSION"]),
    ("POST /sessions/{id}/detect", &["UNKNOWN_SESSION", "DETECTOR_FAILED", "INVALID_BOX", "OUT_OF_BOUNDS"]),
    ("PUT /sessions/{id}/views/{view}/boxes", &["BAD_REQUEST", "UNKNOWN_SESSION", "INVALID_BOX", "OUT_OF_BOUNDS"]),
    ("PUT /sessions/{id}/views/{view}/calibration", &["BAD_REQUEST", "UNKNOWN_SESSION", "INVALID_PARAMS"]),
    ("POST /sessions/{id}/orientation", &["BAD_REQUEST", "UNKNOWN_SESSION"]),
    ("POST /sessions/{id}/labels", &["BAD_REQUEST", "UNKNOWN_SESSION", "NO_MATCHING_BOX", "DUPLICATE_BOX"]),
    ("POST /sessions/{id}/screws", &["BAD_REQUEST", "UNKNOWN_SESSION", "UNPAIRED", "DUPLICATE_SCREW"]),
    ("GET /sessions/{id}/screws", &["UNKNOWN_SESSION"]),
    (
        "PATCH /sessions/{id}/screws/{sid}/endpoint",
        &["BAD_REQUEST", "UNKNOWN_SESSION", "UNKNOWN_SCREW", "DEGENERATE_SCREW", "INVALID_PARAMS"],
    ),
    ("PATCH /sessions/{id}/screws/{sid}/params", &["BAD_REQUEST", "UNKNOWN_SESSION", "UNKNOWN_SCREW", "INVALID_PARAMS"]),
    ("GET /sessions/{id}/plan", &["UNKNOWN_SESSION", "EMPTY_PLAN"]),
    ("GET /images/{path}", &["NOT_FOUND"]),
];

/// Codes documented for `route` (a key of [`ERROR_CODES`]).
pub fn documented_codes(route: &str) -> &'static [&'static str] {
    ERROR_CODES.iter().find(|(r, _)| *r == route).map(|(_, c)| *c).unwrap_or(&[])
}
