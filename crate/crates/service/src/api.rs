//! Request and response bodies. Field names follow the core types.

use serde::{Deserialize, Serialize};
use spineplan_core::labels::LabelEntry;
use spineplan_core::{
    cylinder_silhouette, project, BBox, Endpoint, ImageMeta, Labeled, Orientation, Point2, Rotation, Screw, Session,
    Side, VertebraLabel, ViewCalibration, ViewKind, ViewState,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    /// Chosen by the server when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub ap: ImageMeta,
    pub lp: ImageMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PutBoxes {
    pub boxes: Vec<BBox>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetOrientation {
    pub view: ViewKind,
    pub rotation: Rotation,
    #[serde(default)]
    pub flip: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetCalibration {
    pub scale: f64,
    pub v_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRequest {
    pub view: ViewKind,
    pub u: f64,
    pub v: f64,
    pub label: VertebraLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub view: ViewKind,
    pub label: VertebraLabel,
    pub bbox: BBox,
    pub marker: Point2,
}

impl LabelResponse {
    pub fn new(view: ViewKind, label: VertebraLabel, l: Labeled) -> Self {
        LabelResponse { view, label, bbox: l.bbox, marker: l.marker }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddScrew {
    pub vertebra_label: VertebraLabel,
    pub side: Side,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoveEndpoint {
    pub view: ViewKind,
    pub endpoint: Endpoint,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetParams {
    #[serde(default)]
    pub diameter: Option<f64>,
    #[serde(default)]
    pub screw_type: Option<String>,
}

/// How a screw appears in one view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrewProjection {
    pub entry: Point2,
    pub target: Point2,
    /// Rectangle outline, counter-clockwise; `null` when the screw is seen end-on.
    pub silhouette: Option<[Point2; 4]>,
}

impl ScrewProjection {
    fn of(screw: &Screw, cal: &ViewCalibration) -> Self {
        ScrewProjection {
            entry: project(&screw.entry, cal),
            target: project(&screw.target, cal),
            silhouette: cylinder_silhouette(screw, cal).ok(),
        }
    }
}

/// A screw in world coordinates plus what to draw in each view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrewView {
    #[serde(flatten)]
    pub screw: Screw,
    pub length: f64,
    pub ap: ScrewProjection,
    pub lp: ScrewProjection,
}

impl ScrewView {
    pub fn new(session: &Session, screw: &Screw) -> Self {
        ScrewView {
            screw: screw.clone(),
            length: screw.length(),
            ap: ScrewProjection::of(screw, session.view(ViewKind::Ap).calibration()),
            lp: ScrewProjection::of(screw, session.view(ViewKind::Lp).calibration()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSnapshot {
    pub view_kind: ViewKind,
    pub image_ref: String,
    pub width: u32,
    pub height: u32,
    /// Size after the orientation is applied.
    pub display_width: f64,
    pub display_height: f64,
    pub orientation: Orientation,
    pub calibration: ViewCalibration,
    pub boxes: Vec<BBox>,
}

impl ViewSnapshot {
    pub fn new(v: &ViewState) -> Self {
        let (width, height) = v.image_dims();
        let (display_width, display_height) = v.display_dims();
        ViewSnapshot {
            view_kind: v.view_kind(),
            image_ref: v.image_ref().to_string(),
            width,
            height,
            display_width,
            display_height,
            orientation: v.orientation(),
            calibration: *v.calibration(),
            boxes: v.boxes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSnapshot {
    pub id: String,
    pub sync_captured: bool,
    pub ap: ViewSnapshot,
    pub lp: ViewSnapshot,
    pub labels: Vec<LabelEntry>,
    pub screws: Vec<ScrewView>,
}

impl SessionSnapshot {
    pub fn new(s: &Session) -> Self {
        SessionSnapshot {
            id: s.id().to_string(),
            sync_captured: s.sync_captured(),
            ap: ViewSnapshot::new(s.view(ViewKind::Ap)),
            lp: ViewSnapshot::new(s.view(ViewKind::Lp)),
            labels: s.labels().entries(),
            screws: s.screws().iter().map(|sc| ScrewView::new(s, sc)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detections {
    pub ap: Vec<BBox>,
    pub lp: Vec<BBox>,
}
