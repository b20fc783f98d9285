//! Session files.
//!
//! A session file is a header line followed by a JSON body:
//!
//! ```text
//! spine-session/1 sha256=<hex digest of the body>
//! { ...pretty-printed session... }
//! ```
//!
//! The digest makes any change to the body detectable, so a damaged file is
//! always reported as corrupt instead of loading as a different session.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bbox::BBox;
use crate::geometry::{Screw, ViewCalibration, ViewKind};
use crate::labels::{LabelEntry, LabelMap};
use crate::orientation::Orientation;
use crate::session::{Session, SessionError, ViewState};

pub const SESSION_FORMAT: &str = "spine-session/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewFile {
    view_kind: ViewKind,
    image_ref: String,
    width: u32,
    height: u32,
    orientation: Orientation,
    calibration: ViewCalibration,
    detections: Vec<BBox>,
    detections_frame: Orientation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SessionFile {
    id: String,
    sync_captured: bool,
    next_screw_id: u64,
    ap: ViewFile,
    lp: ViewFile,
    labels: Vec<LabelEntry>,
    screws: Vec<Screw>,
}

impl From<&ViewState> for ViewFile {
    fn from(v: &ViewState) -> Self {
        ViewFile {
            view_kind: v.view_kind,
            image_ref: v.image_ref.clone(),
            width: v.width,
            height: v.height,
            orientation: v.orientation,
            calibration: v.calibration,
            detections: v.detections.clone(),
            detections_frame: v.detections_frame,
        }
    }
}

impl From<ViewFile> for ViewState {
    fn from(v: ViewFile) -> Self {
        ViewState {
            view_kind: v.view_kind,
            image_ref: v.image_ref,
            width: v.width,
            height: v.height,
            orientation: v.orientation,
            calibration: v.calibration,
            detections: v.detections,
            detections_frame: v.detections_frame,
        }
    }
}

fn digest(body: &[u8]) -> String {
    hex::encode(Sha256::digest(body))
}

pub fn save_session(session: &Session) -> Vec<u8> {
    let file = SessionFile {
        id: session.id.clone(),
        sync_captured: session.sync_captured,
        next_screw_id: session.next_screw_id,
        ap: (&session.ap).into(),
        lp: (&session.lp).into(),
        labels: session.labels.entries(),
        screws: session.screws.clone(),
    };
    let mut body = serde_json::to_string_pretty(&file).expect("session serializes");
    body.push('\n');
    let mut out = format!("{SESSION_FORMAT} sha256={}\n", digest(body.as_bytes())).into_bytes();
    out.extend_from_slice(body.as_bytes());
    out
}

pub fn load_session(bytes: &[u8]) -> Result<Session, SessionError> {
    let corrupt = |msg: String| SessionError::CorruptSession(msg);
    let newline = bytes
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| corrupt("missing header line".into()))?;
    let (header, body) = (&bytes[..newline], &bytes[newline + 1..]);
    let header = std::str::from_utf8(header).map_err(|_| corrupt("header is not UTF-8".into()))?;
    let (version, checksum) = header
        .split_once(' ')
        .ok_or_else(|| corrupt("malformed header".into()))?;
    if version != SESSION_FORMAT {
        return Err(corrupt(format!("unsupported version '{version}'")));
    }
    let expected = checksum
        .strip_prefix("sha256=")
        .ok_or_else(|| corrupt("header lacks a sha256 digest".into()))?;
    if digest(body) != expected {
        return Err(corrupt("body digest mismatch".into()));
    }
    let file: SessionFile = serde_json::from_slice(body).map_err(|e| corrupt(e.to_string()))?;
    let session = Session {
        id: file.id,
        ap: file.ap.into(),
        lp: file.lp.into(),
        labels: LabelMap::from_entries(file.labels).map_err(corrupt)?,
        screws: file.screws,
        sync_captured: file.sync_captured,
        next_screw_id: file.next_screw_id,
    };
    session.validate().map_err(corrupt)?;
    Ok(session)
}

impl Session {
    pub fn save(&self) -> Vec<u8> {
        save_session(self)
    }

    pub fn load(bytes: &[u8]) -> Result<Session, SessionError> {
        load_session(bytes)
    }
}
