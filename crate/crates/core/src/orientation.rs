//! Quarter-turn rotations and horizontal flips of an image frame.
//!
//! An [`Orientation`] acts on a point by flipping horizontally first (when
//! `flip` is set) and then rotating clockwise. The eight orientations form the
//! symmetry group of a rectangle, so they compose and invert exactly; box
//! coordinates are always re-derived from the frame they were attached in,
//! which keeps round trips bit-exact.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bbox::BBox;
use crate::geometry::Point2;

/// Clockwise quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub fn degrees(self) -> u32 {
        self.quarter_turns() as u32 * 90
    }

    pub fn from_degrees(deg: i64) -> Option<Rotation> {
        match deg {
            0 => Some(Rotation::R0),
            90 => Some(Rotation::R90),
            180 => Some(Rotation::R180),
            270 => Some(Rotation::R270),
            _ => None,
        }
    }

    fn quarter_turns(self) -> u8 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 1,
            Rotation::R180 => 2,
            Rotation::R270 => 3,
        }
    }

    fn from_quarter_turns(q: i32) -> Rotation {
        match q.rem_euclid(4) {
            0 => Rotation::R0,
            1 => Rotation::R90,
            2 => Rotation::R180,
            _ => Rotation::R270,
        }
    }

    pub fn inverse(self) -> Rotation {
        Rotation::from_quarter_turns(-(self.quarter_turns() as i32))
    }
}

impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let deg = i64::deserialize(deserializer)?;
        Rotation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("rotation must be 0, 90, 180 or 270, got {deg}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Orientation {
    pub rotation: Rotation,
    pub flip: bool,
}

impl Orientation {
    pub const IDENTITY: Orientation = Orientation { rotation: Rotation::R0, flip: false };

    pub fn new(rotation: Rotation, flip: bool) -> Self {
        Self { rotation, flip }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    /// `next` applied after `self`.
    pub fn then(self, next: Orientation) -> Orientation {
        let (a, b) = (self.rotation.quarter_turns() as i32, next.rotation.quarter_turns() as i32);
        if next.flip {
            // a horizontal flip turns a preceding clockwise turn into a counter-clockwise one
            Orientation::new(Rotation::from_quarter_turns(b - a), !self.flip)
        } else {
            Orientation::new(Rotation::from_quarter_turns(b + a), self.flip)
        }
    }

    pub fn inverse(self) -> Orientation {
        if self.flip {
            // any flip-plus-rotation is a reflection, hence its own inverse
            self
        } else {
            Orientation::new(self.rotation.inverse(), false)
        }
    }

    /// Frame size after applying this orientation to a `width x height` frame.
    pub fn dims(&self, width: f64, height: f64) -> (f64, f64) {
        match self.rotation {
            Rotation::R0 | Rotation::R180 => (width, height),
            Rotation::R90 | Rotation::R270 => (height, width),
        }
    }

    pub fn apply_point(&self, p: Point2, width: f64, height: f64) -> Point2 {
        let u = if self.flip { width - p.u } else { p.u };
        let v = p.v;
        match self.rotation {
            Rotation::R0 => Point2::new(u, v),
            Rotation::R90 => Point2::new(height - v, u),
            Rotation::R180 => Point2::new(width - u, height - v),
            Rotation::R270 => Point2::new(v, width - u),
        }
    }

    pub fn apply_box(&self, b: &BBox, width: f64, height: f64) -> BBox {
        let p = self.apply_point(Point2::new(b.x1, b.y1), width, height);
        let q = self.apply_point(Point2::new(b.x2, b.y2), width, height);
        BBox {
            x1: p.u.min(q.u),
            y1: p.v.min(q.v),
            x2: p.u.max(q.u),
            y2: p.v.max(q.v),
            confidence: b.confidence,
        }
    }
}
