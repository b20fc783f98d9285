//! Screw geometry shared by the two radiographic views.
//!
//! World space is millimetres: `x` runs patient left to right, `y` runs
//! posterior to anterior, `z` runs along the spine and grows in the
//! image-down direction. The AP view shows `(x, z)` and drops `y`; the LP view
//! shows `(y, z)` and drops `x`. Both views therefore read the same `z`, which
//! is what keeps a screw consistent when it is edited in either image.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::bbox::BBox;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("screw entry and target coincide")]
    DegenerateScrew,
    #[error("screw axis projects to a single point in the {0} view")]
    DegenerateProjection(ViewKind),
    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),
    #[error("diameter must be positive, got {0}")]
    InvalidDiameter(f64),
    #[error("non-finite coordinate")]
    NonFinite,
}

/// World-space point in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Image-space point in pixels, `v` pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub u: f64,
    pub v: f64,
}

impl Point2 {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewKind {
    Ap,
    Lp,
}

impl ViewKind {
    pub const ALL: [ViewKind; 2] = [ViewKind::Ap, ViewKind::Lp];

    /// The view sharing the `z` axis with this one.
    pub fn paired(self) -> ViewKind {
        match self {
            ViewKind::Ap => ViewKind::Lp,
            ViewKind::Lp => ViewKind::Ap,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ViewKind::Ap => "ap",
            ViewKind::Lp => "lp",
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ViewKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ap" => Ok(ViewKind::Ap),
            "lp" => Ok(ViewKind::Lp),
            other => Err(format!("unknown view '{other}' (expected ap or lp)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            other => Err(format!("unknown side '{other}' (expected left or right)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Entry,
    Target,
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entry" => Ok(Endpoint::Entry),
            "target" => Ok(Endpoint::Target),
            other => Err(format!("unknown endpoint '{other}' (expected entry or target)")),
        }
    }
}

/// Pixel/world mapping for one view. Pixels are isotropic.
///
/// The vertical image axis maps to world `z` as `z = scale * (v - v_offset)`;
/// the horizontal axis maps to `x` (AP) or `y` (LP) as `scale * u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewCalibration {
    pub view_kind: ViewKind,
    /// Millimetres per pixel.
    pub scale: f64,
    pub v_offset: f64,
}

impl ViewCalibration {
    pub fn identity(view_kind: ViewKind) -> Self {
        Self { view_kind, scale: 1.0, v_offset: 0.0 }
    }

    pub fn new(view_kind: ViewKind, scale: f64, v_offset: f64) -> Result<Self, GeometryError> {
        let cal = Self { view_kind, scale, v_offset };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(GeometryError::InvalidCalibration(format!(
                "scale must be positive and finite, got {}",
                self.scale
            )));
        }
        if !self.v_offset.is_finite() {
            return Err(GeometryError::InvalidCalibration("v_offset must be finite".into()));
        }
        Ok(())
    }

    /// World `z` of an image row.
    pub fn world_z(&self, v: f64) -> f64 {
        self.scale * (v - self.v_offset)
    }

    /// Image row of a world `z`.
    pub fn row_of(&self, z: f64) -> f64 {
        z / self.scale + self.v_offset
    }

    /// The world coordinate this view shows horizontally (`x` for AP, `y` for LP).
    pub fn horizontal(&self, p: &Point3) -> f64 {
        match self.view_kind {
            ViewKind::Ap => p.x,
            ViewKind::Lp => p.y,
        }
    }
}

pub fn project(p: &Point3, cal: &ViewCalibration) -> Point2 {
    Point2 {
        u: cal.horizontal(p) / cal.scale,
        v: cal.row_of(p.z),
    }
}

/// Writes the two coordinates visible in `cal`'s view from an image point,
/// leaving the dropped coordinate untouched.
pub fn unproject_onto(p: &Point3, image: Point2, cal: &ViewCalibration) -> Point3 {
    let mut out = *p;
    let horizontal = cal.scale * image.u;
    match cal.view_kind {
        ViewKind::Ap => out.x = horizontal,
        ViewKind::Lp => out.y = horizontal,
    }
    out.z = cal.world_z(image.v);
    out
}

pub fn screw_length(entry: &Point3, target: &Point3) -> Result<f64, GeometryError> {
    let length = entry.distance(target);
    if length > 0.0 {
        Ok(length)
    } else {
        Err(GeometryError::DegenerateScrew)
    }
}

/// Opaque screw handle, unique within a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScrewId(pub u64);

impl fmt::Display for ScrewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const DEFAULT_DIAMETER_MM: f64 = 5.0;
pub const DEFAULT_SCREW_TYPE: &str = "generic-pedicle";

/// A pedicle screw modelled as a cylinder whose base centres are the entry
/// and target points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Screw {
    pub id: ScrewId,
    pub vertebra_label: crate::labels::VertebraLabel,
    pub side: Side,
    pub entry: Point3,
    pub target: Point3,
    /// Millimetres.
    pub diameter: f64,
    pub screw_type: String,
}

impl Screw {
    pub fn length(&self) -> f64 {
        self.entry.distance(&self.target)
    }

    pub fn radius(&self) -> f64 {
        self.diameter / 2.0
    }

    pub fn endpoint(&self, which: Endpoint) -> &Point3 {
        match which {
            Endpoint::Entry => &self.entry,
            Endpoint::Target => &self.target,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.entry.is_finite() && self.target.is_finite() && self.diameter.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if !(self.diameter > 0.0) {
            return Err(GeometryError::InvalidDiameter(self.diameter));
        }
        screw_length(&self.entry, &self.target).map(|_| ())
    }
}

/// Moves one endpoint to `new_pos` as seen in `view`.
///
/// The coordinate the view cannot see is preserved. Since both views read the
/// same world `z`, projecting the result through `paired` lands on the row the
/// drag implied.
pub fn apply_drag(
    screw: &Screw,
    view: &ViewCalibration,
    endpoint: Endpoint,
    new_pos: Point2,
    paired: &ViewCalibration,
) -> Result<Screw, GeometryError> {
    if !new_pos.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    view.validate()?;
    paired.validate()?;
    let mut out = screw.clone();
    let moved = unproject_onto(screw.endpoint(endpoint), new_pos, view);
    match endpoint {
        Endpoint::Entry => out.entry = moved,
        Endpoint::Target => out.target = moved,
    }
    if !(moved.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    screw_length(&out.entry, &out.target)?;
    debug_assert!({
        let z_paired = paired.world_z(project(&moved, paired).v);
        (z_paired - moved.z).abs() <= 1e-9 * moved.z.abs().max(1.0)
    });
    Ok(out)
}

/// Row correction, in LP pixels, that brings the LP box of a vertebra onto the
/// world-`z` band occupied by its AP box.
///
/// Subtracting the result from `cal_lp.v_offset` aligns the two box centres.
/// For identical calibrations this is simply the difference of box centre rows.
pub fn sync_offset_from_pair(
    box_ap: &BBox,
    box_lp: &BBox,
    cal_ap: &ViewCalibration,
    cal_lp: &ViewCalibration,
) -> f64 {
    let z_ap = cal_ap.world_z(box_ap.center_v());
    z_ap / cal_lp.scale - (box_lp.center_v() - cal_lp.v_offset)
}

/// Projected outline of a screw body: four corners, counter-clockwise in
/// `(u, v)`, starting at the entry-left corner.
pub fn cylinder_silhouette(screw: &Screw, cal: &ViewCalibration) -> Result<[Point2; 4], GeometryError> {
    let a = project(&screw.entry, cal);
    let b = project(&screw.target, cal);
    let (du, dv) = (b.u - a.u, b.v - a.v);
    let len = du.hypot(dv);
    if !(len > 0.0) {
        return Err(GeometryError::DegenerateProjection(cal.view_kind));
    }
    let half = screw.radius() / cal.scale;
    // Left-hand normal of the entry -> target direction.
    let (nu, nv) = (-dv / len * half, du / len * half);
    Ok([
        Point2::new(a.u + nu, a.v + nv),
        Point2::new(a.u - nu, a.v - nv),
        Point2::new(b.u - nu, b.v - nv),
        Point2::new(b.u + nu, b.v + nv),
    ])
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(points: &[Point2]) -> f64 {
    let n = points.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (p, q) = (points[i], points[(i + 1) % n]);
            p.u * q.v - q.u * p.v
        })
        .sum();
    twice / 2.0
}
