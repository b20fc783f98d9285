//! Exported surgical plan: one record per screw with size, type and location.

use serde::{Deserialize, Serialize};

use crate::geometry::{project, Point2, Point3, Screw, Side};
use crate::labels::VertebraLabel;
use crate::session::{Session, SessionError};

pub const PLAN_FORMAT: &str = "spine-plan/1";

/// Tolerance between a stored length and the one recomputed from endpoints.
pub const LENGTH_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPoint {
    /// Millimetres.
    pub world: Point3,
    /// Pixels in the AP view.
    pub ap: Point2,
    /// Pixels in the LP view.
    pub lp: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedScrew {
    pub vertebra_label: VertebraLabel,
    pub side: Side,
    pub screw_type: String,
    pub diameter_mm: f64,
    pub length_mm: f64,
    pub entry: PlannedPoint,
    pub target: PlannedPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub format: String,
    pub session_id: String,
    pub screws: Vec<PlannedScrew>,
}

impl PlanDocument {
    pub fn to_text(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("plan serializes");
        text.push('\n');
        text
    }

    pub fn from_text(text: &str) -> Result<Self, SessionError> {
        let doc: PlanDocument = serde_json::from_str(text).map_err(|e| SessionError::CorruptPlan(e.to_string()))?;
        doc.validate().map_err(SessionError::CorruptPlan)?;
        Ok(doc)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.format != PLAN_FORMAT {
            return Err(format!("unsupported format '{}'", self.format));
        }
        for s in &self.screws {
            let recomputed = s.entry.world.distance(&s.target.world);
            if (recomputed - s.length_mm).abs() > LENGTH_TOLERANCE_MM {
                return Err(format!(
                    "{} {} screw: stored length {} but endpoints give {}",
                    s.vertebra_label, s.side, s.length_mm, recomputed
                ));
            }
            if !(s.diameter_mm > 0.0) {
                return Err(format!("{} {} screw: nonpositive diameter", s.vertebra_label, s.side));
            }
        }
        Ok(())
    }
}

fn planned(screw: &Screw, session: &Session) -> PlannedScrew {
    let ap = session.view(crate::ViewKind::Ap).calibration();
    let lp = session.view(crate::ViewKind::Lp).calibration();
    let point = |p: &Point3| PlannedPoint { world: *p, ap: project(p, ap), lp: project(p, lp) };
    PlannedScrew {
        vertebra_label: screw.vertebra_label,
        side: screw.side,
        screw_type: screw.screw_type.clone(),
        diameter_mm: screw.diameter,
        length_mm: screw.length(),
        entry: point(&screw.entry),
        target: point(&screw.target),
    }
}

/// Snapshot of every screw, ordered by vertebra level then left before right.
pub fn export_plan(session: &Session) -> Result<PlanDocument, SessionError> {
    if session.screws().is_empty() {
        return Err(SessionError::EmptyPlan);
    }
    let mut screws: Vec<&Screw> = session.screws().iter().collect();
    screws.sort_by_key(|s| (s.vertebra_label, s.side));
    Ok(PlanDocument {
        format: PLAN_FORMAT.to_string(),
        session_id: session.id().to_string(),
        screws: screws.into_iter().map(|s| planned(s, session)).collect(),
    })
}

impl Session {
    pub fn export_plan(&self) -> Result<PlanDocument, SessionError> {
        export_plan(self)
    }
}
