//! Planning session: two views, their detections and labels, and the screws.
//!
//! A [`Session`] owns all mutable planning state. Every operation either
//! succeeds and leaves the session valid, or fails and leaves it untouched.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bbox::BBox;
use crate::geometry::{
    apply_drag, project, sync_offset_from_pair, unproject_onto, Endpoint, GeometryError, Point2,
    Point3, Screw, ScrewId, Side, ViewCalibration, ViewKind, DEFAULT_DIAMETER_MM,
    DEFAULT_SCREW_TYPE,
};
use crate::labels::{LabelError, LabelMap, Labeled, VertebraLabel};
use crate::orientation::{Orientation, Rotation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SessionError {
    #[error("invalid image: {0}")]
    InvalidImage(String),
    #[error("box {index} is not a valid box: {reason}")]
    InvalidBox { index: usize, reason: String },
    #[error("box {index} exceeds the {view} image extent")]
    OutOfBounds { view: ViewKind, index: usize },
    #[error("no matching bounding box at ({u}, {v}) in the {view} view", u = .point.u, v = .point.v)]
    NoMatch { view: ViewKind, point: Point2 },
    #[error("box is already labeled {existing} in the {view} view")]
    DuplicateBox { view: ViewKind, existing: VertebraLabel },
    #[error("{0} is not labeled in both views")]
    Unpaired(VertebraLabel),
    #[error("{label} already has a {side} screw")]
    DuplicateScrew { label: VertebraLabel, side: Side },
    #[error("unknown screw {0}")]
    UnknownScrew(ScrewId),
    #[error("screw entry and target would coincide")]
    DegenerateScrew,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("plan has no screws")]
    EmptyPlan,
    #[error("corrupt session: {0}")]
    CorruptSession(String),
    #[error("corrupt plan: {0}")]
    CorruptPlan(String),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::InvalidImage(_) => "INVALID_IMAGE",
            SessionError::InvalidBox { .. } => "INVALID_BOX",
            SessionError::OutOfBounds { .. } => "OUT_OF_BOUNDS",
            SessionError::NoMatch { .. } => "NO_MATCHING_BOX",
            SessionError::DuplicateBox { .. } => "DUPLICATE_BOX",
            SessionError::Unpaired(_) => "UNPAIRED",
            SessionError::DuplicateScrew { .. } => "DUPLICATE_SCREW",
            SessionError::UnknownScrew(_) => "UNKNOWN_SCREW",
            SessionError::DegenerateScrew => "DEGENERATE_SCREW",
            SessionError::InvalidParams(_) => "INVALID_PARAMS",
            SessionError::EmptyPlan => "EMPTY_PLAN",
            SessionError::CorruptSession(_) => "CORRUPT_SESSION",
            SessionError::CorruptPlan(_) => "CORRUPT_PLAN",
        }
    }
}

impl From<GeometryError> for SessionError {
    fn from(e: GeometryError) -> Self {
        match e {
            GeometryError::DegenerateScrew => SessionError::DegenerateScrew,
            other => SessionError::InvalidParams(other.to_string()),
        }
    }
}

/// What the caller knows about an image when opening a session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub image_ref: String,
    pub width: i64,
    pub height: i64,
}

impl ImageMeta {
    pub fn new(image_ref: impl Into<String>, width: i64, height: i64) -> Self {
        Self { image_ref: image_ref.into(), width, height }
    }
}

/// One radiograph and what has been detected on it.
///
/// `width`/`height` describe the stored image; boxes, clicks and projections
/// all live in the displayed frame, i.e. after `orientation` is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    pub(crate) view_kind: ViewKind,
    pub(crate) image_ref: String,
    pub(crate) width: u32,
    pub(crate) height: u32,
    pub(crate) orientation: Orientation,
    pub(crate) calibration: ViewCalibration,
    /// Boxes exactly as attached...
    pub(crate) detections: Vec<BBox>,
    /// ...and the orientation that was current when they were.
    pub(crate) detections_frame: Orientation,
}

impl ViewState {
    fn new(view_kind: ViewKind, meta: &ImageMeta) -> Result<Self, SessionError> {
        let dim = |d: i64, what: &str| {
            u32::try_from(d)
                .ok()
                .filter(|d| *d > 0)
                .ok_or_else(|| SessionError::InvalidImage(format!("{view_kind} image {what} must be positive, got {d}")))
        };
        Ok(Self {
            view_kind,
            image_ref: meta.image_ref.clone(),
            width: dim(meta.width, "width")?,
            height: dim(meta.height, "height")?,
            orientation: Orientation::IDENTITY,
            calibration: ViewCalibration::identity(view_kind),
            detections: Vec::new(),
            detections_frame: Orientation::IDENTITY,
        })
    }

    pub fn view_kind(&self) -> ViewKind {
        self.view_kind
    }

    pub fn image_ref(&self) -> &str {
        &self.image_ref
    }

    /// Stored image size.
    pub fn image_dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Displayed size (width and height swap on quarter turns).
    pub fn display_dims(&self) -> (f64, f64) {
        self.orientation.dims(self.width as f64, self.height as f64)
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn calibration(&self) -> &ViewCalibration {
        &self.calibration
    }

    /// Detected boxes in the displayed frame, in attach order.
    pub fn boxes(&self) -> Vec<BBox> {
        let to_display = self.detections_frame.inverse().then(self.orientation);
        if to_display.is_identity() {
            return self.detections.clone();
        }
        let (w, h) = self.detections_frame.dims(self.width as f64, self.height as f64);
        self.detections.iter().map(|b| to_display.apply_box(b, w, h)).collect()
    }
}

/// Fractions of the paired boxes' widths used for a new screw. They encode a
/// convergent bilateral trajectory: both screws start laterally and aim
/// toward the midline, from the posterior surface into the body.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub entry_u_left: f64,
    pub entry_u_right: f64,
    pub target_u_left: f64,
    pub target_u_right: f64,
    pub entry_depth: f64,
    pub target_depth: f64,
}

impl Placement {
    pub const DEFAULT: Placement = Placement {
        entry_u_left: 0.30,
        entry_u_right: 0.70,
        target_u_left: 0.55,
        target_u_right: 0.45,
        entry_depth: 0.15,
        target_depth: 0.70,
    };

    /// Default entry and target for a screw in the given paired boxes.
    pub fn place(
        &self,
        side: Side,
        ap_box: &BBox,
        lp_box: &BBox,
        ap: &ViewCalibration,
        lp: &ViewCalibration,
    ) -> (Point3, Point3) {
        let (entry_u, target_u) = match side {
            Side::Left => (self.entry_u_left, self.target_u_left),
            Side::Right => (self.entry_u_right, self.target_u_right),
        };
        let at = |b: &BBox, frac: f64| b.x1 + frac * b.width();
        let z = ap.world_z(ap_box.center_v());
        let entry = Point3::new(
            ap.scale * at(ap_box, entry_u),
            lp.scale * at(lp_box, self.entry_depth),
            z,
        );
        let target = Point3::new(
            ap.scale * at(ap_box, target_u),
            lp.scale * at(lp_box, self.target_depth),
            z,
        );
        (entry, target)
    }
}

impl Default for Placement {
    fn default() -> Self {
        Placement::DEFAULT
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub(crate) id: String,
    pub(crate) ap: ViewState,
    pub(crate) lp: ViewState,
    pub(crate) labels: LabelMap,
    pub(crate) screws: Vec<Screw>,
    pub(crate) sync_captured: bool,
    pub(crate) next_screw_id: u64,
}

impl Session {
    pub fn new(id: impl Into<String>, ap: &ImageMeta, lp: &ImageMeta) -> Result<Self, SessionError> {
        Ok(Self {
            id: id.into(),
            ap: ViewState::new(ViewKind::Ap, ap)?,
            lp: ViewState::new(ViewKind::Lp, lp)?,
            labels: LabelMap::new(),
            screws: Vec::new(),
            sync_captured: false,
            next_screw_id: 1,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn view(&self, kind: ViewKind) -> &ViewState {
        match kind {
            ViewKind::Ap => &self.ap,
            ViewKind::Lp => &self.lp,
        }
    }

    fn view_mut(&mut self, kind: ViewKind) -> &mut ViewState {
        match kind {
            ViewKind::Ap => &mut self.ap,
            ViewKind::Lp => &mut self.lp,
        }
    }

    pub fn labels(&self) -> &LabelMap {
        &self.labels
    }

    pub fn screws(&self) -> &[Screw] {
        &self.screws
    }

    pub fn screw(&self, id: ScrewId) -> Option<&Screw> {
        self.screws.iter().find(|s| s.id == id)
    }

    pub fn screw_for(&self, label: VertebraLabel, side: Side) -> Option<&Screw> {
        self.screws.iter().find(|s| s.vertebra_label == label && s.side == side)
    }

    pub fn sync_captured(&self) -> bool {
        self.sync_captured
    }

    /// Turns and/or mirrors a view relative to how it is currently displayed.
    ///
    /// Boxes, labels and screw endpoints in that view follow the image.
    pub fn set_orientation(&mut self, view: ViewKind, rotation: Rotation, flip: bool) {
        let step = Orientation::new(rotation, flip);
        if step.is_identity() {
            return;
        }
        let before = self.view(view).clone();
        let (w, h) = before.display_dims();
        let old_boxes = before.boxes();
        self.view_mut(view).orientation = before.orientation.then(step);
        let new_boxes = self.view(view).boxes();

        self.labels.retain(|v, _, b| {
            if v == view {
                if let Some(i) = old_boxes.iter().position(|o| o == b) {
                    *b = new_boxes[i];
                }
            }
            true
        });

        let cal = before.calibration;
        for screw in &mut self.screws {
            for p in [&mut screw.entry, &mut screw.target] {
                let shown = step.apply_point(project(p, &cal), w, h);
                *p = unproject_onto(p, shown, &cal);
            }
        }
    }

    pub fn set_calibration(&mut self, view: ViewKind, scale: f64, v_offset: f64) -> Result<(), SessionError> {
        let cal = ViewCalibration::new(view, scale, v_offset)?;
        self.view_mut(view).calibration = cal;
        Ok(())
    }

    /// Replaces a view's detections. Labels on boxes that are no longer
    /// present are dropped, and so are screws whose label loses its pair.
    pub fn attach_detections(&mut self, view: ViewKind, boxes: Vec<BBox>) -> Result<(), SessionError> {
        let (w, h) = self.view(view).display_dims();
        for (index, b) in boxes.iter().enumerate() {
            b.check().map_err(|reason| SessionError::InvalidBox { index, reason })?;
            if !b.within(w, h) {
                return Err(SessionError::OutOfBounds { view, index });
            }
        }
        let state = self.view_mut(view);
        state.detections_frame = state.orientation;
        state.detections = boxes;
        let current = state.boxes();
        self.labels.retain(|v, _, b| v != view || current.contains(b));
        self.drop_unpaired_screws();
        Ok(())
    }

    fn drop_unpaired_screws(&mut self) {
        let labels = &self.labels;
        self.screws.retain(|s| labels.is_paired(s.vertebra_label));
    }

    pub fn label_vertebra(&mut self, view: ViewKind, p: Point2, label: VertebraLabel) -> Result<Labeled, SessionError> {
        if !p.is_finite() {
            return Err(SessionError::InvalidParams("click position must be finite".into()));
        }
        let boxes = self.view(view).boxes();
        self.labels.label_vertebra(view, p, &boxes, label).map_err(|e| match e {
            LabelError::NoMatch(point) => SessionError::NoMatch { view, point },
            LabelError::DuplicateBox { view, existing } => SessionError::DuplicateBox { view, existing },
        })
    }

    pub fn add_screw(&mut self, label: VertebraLabel, side: Side) -> Result<Screw, SessionError> {
        self.add_screw_with(label, side, &Placement::DEFAULT)
    }

    /// Creates a screw inside the paired boxes of `label`. The first screw of a
    /// session also captures the LP row offset that aligns the two views.
    pub fn add_screw_with(&mut self, label: VertebraLabel, side: Side, placement: &Placement) -> Result<Screw, SessionError> {
        let (ap_box, lp_box) = self.labels.paired_boxes(label).ok_or(SessionError::Unpaired(label))?;
        if self.screw_for(label, side).is_some() {
            return Err(SessionError::DuplicateScrew { label, side });
        }
        if !self.sync_captured {
            let shift = sync_offset_from_pair(&ap_box, &lp_box, &self.ap.calibration, &self.lp.calibration);
            self.lp.calibration.v_offset -= shift;
            self.sync_captured = true;
        }
        let (entry, target) = placement.place(side, &ap_box, &lp_box, &self.ap.calibration, &self.lp.calibration);
        let screw = Screw {
            id: ScrewId(self.next_screw_id),
            vertebra_label: label,
            side,
            entry,
            target,
            diameter: DEFAULT_DIAMETER_MM,
            screw_type: DEFAULT_SCREW_TYPE.to_string(),
        };
        screw.validate()?;
        self.next_screw_id += 1;
        self.screws.push(screw.clone());
        Ok(screw)
    }

    fn screw_index(&self, id: ScrewId) -> Result<usize, SessionError> {
        self.screws.iter().position(|s| s.id == id).ok_or(SessionError::UnknownScrew(id))
    }

    /// Drags one endpoint in one view; the other view follows through the
    /// shared `z` axis.
    pub fn move_endpoint(&mut self, id: ScrewId, view: ViewKind, endpoint: Endpoint, p: Point2) -> Result<Screw, SessionError> {
        let i = self.screw_index(id)?;
        let moved = apply_drag(
            &self.screws[i],
            &self.view(view).calibration,
            endpoint,
            p,
            &self.view(view.paired()).calibration,
        )?;
        self.screws[i] = moved.clone();
        Ok(moved)
    }

    pub fn set_screw_params(&mut self, id: ScrewId, diameter: Option<f64>, screw_type: Option<String>) -> Result<Screw, SessionError> {
        let i = self.screw_index(id)?;
        let mut screw = self.screws[i].clone();
        if let Some(d) = diameter {
            screw.diameter = d;
        }
        if let Some(t) = screw_type {
            if t.trim().is_empty() {
                return Err(SessionError::InvalidParams("screw type must not be empty".into()));
            }
            screw.screw_type = t;
        }
        screw.validate()?;
        self.screws[i] = screw.clone();
        Ok(screw)
    }

    /// Checks every session invariant, returning the first violation.
    pub fn validate(&self) -> Result<(), String> {
        for view in ViewKind::ALL {
            let state = self.view(view);
            if state.view_kind != view || state.calibration.view_kind != view {
                return Err(format!("{view} view carries mismatched view kind"));
            }
            if state.width == 0 || state.height == 0 {
                return Err(format!("{view} image has zero size"));
            }
            state.calibration.validate().map_err(|e| format!("{view}: {e}"))?;
            let (w, h) = state.display_dims();
            for (i, b) in state.boxes().iter().enumerate() {
                b.check().map_err(|e| format!("{view} box {i}: {e}"))?;
                if !b.within(w, h) {
                    return Err(format!("{view} box {i} outside the image"));
                }
            }
        }
        self.labels.validate()?;
        for (view, label, b) in self.labels.iter() {
            if !self.view(view).boxes().contains(b) {
                return Err(format!("{label} in the {view} view refers to a box that is not detected"));
            }
        }
        for (i, s) in self.screws.iter().enumerate() {
            s.validate().map_err(|e| format!("screw {}: {e}", s.id))?;
            if s.screw_type.trim().is_empty() {
                return Err(format!("screw {} has an empty type", s.id));
            }
            if !self.labels.is_paired(s.vertebra_label) {
                return Err(format!("screw {} references unpaired label {}", s.id, s.vertebra_label));
            }
            if s.id.0 >= self.next_screw_id {
                return Err(format!("screw id {} not below the id counter", s.id));
            }
            for other in &self.screws[i + 1..] {
                if other.id == s.id {
                    return Err(format!("duplicate screw id {}", s.id));
                }
                if other.vertebra_label == s.vertebra_label && other.side == s.side {
                    return Err(format!("two {} screws on {}", s.side, s.vertebra_label));
                }
            }
        }
        Ok(())
    }
}
