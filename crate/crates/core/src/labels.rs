//! Vertebra names and the per-view map from names to detection boxes.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

use crate::bbox::{hit_test, BBox};
use crate::geometry::{Point2, ViewKind};

/// Catalog order, cranial to caudal.
pub const CATALOG: [&str; 25] = [
    "C1", "C2", "C3", "C4", "C5", "C6", "C7", "T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8",
    "T9", "T10", "T11", "T12", "L1", "L2", "L3", "L4", "L5", "S1",
];

/// A vertebra level from [`CATALOG`]. Ordering follows the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertebraLabel(u8);

impl VertebraLabel {
    pub fn all() -> impl Iterator<Item = VertebraLabel> {
        (0..CATALOG.len() as u8).map(VertebraLabel)
    }

    pub fn name(self) -> &'static str {
        CATALOG[self.0 as usize]
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown vertebra label '{0}'")]
pub struct UnknownLabel(pub String);

impl FromStr for VertebraLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CATALOG
            .iter()
            .position(|name| *name == s)
            .map(|i| VertebraLabel(i as u8))
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

impl fmt::Display for VertebraLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for VertebraLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for VertebraLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabelError {
    #[error("no detected box contains the clicked point ({u}, {v})", u = .0.u, v = .0.v)]
    NoMatch(Point2),
    #[error("box is already labeled {existing} in the {view} view")]
    DuplicateBox { view: ViewKind, existing: VertebraLabel },
}

/// Result of a successful labeling click.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Labeled {
    pub bbox: BBox,
    /// Where the confirmation marker is drawn: the click location.
    pub marker: Point2,
}

/// `(view, label) -> box`, at most one box per key and at most one label per
/// box within a view.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelMap {
    entries: BTreeMap<(ViewKind, VertebraLabel), BBox>,
}

/// Flat record used when the map is written out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelEntry {
    pub view: ViewKind,
    pub label: VertebraLabel,
    pub bbox: BBox,
}

impl LabelMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, view: ViewKind, label: VertebraLabel) -> Option<&BBox> {
        self.entries.get(&(view, label))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries ordered by view, then catalog order.
    pub fn iter(&self) -> impl Iterator<Item = (ViewKind, VertebraLabel, &BBox)> {
        self.entries.iter().map(|((view, label), b)| (*view, *label, b))
    }

    pub fn entries(&self) -> Vec<LabelEntry> {
        self.iter()
            .map(|(view, label, bbox)| LabelEntry { view, label, bbox: *bbox })
            .collect()
    }

    /// The label a box carries in `view`, if any.
    pub fn label_of(&self, view: ViewKind, bbox: &BBox) -> Option<VertebraLabel> {
        self.iter()
            .find(|(v, _, b)| *v == view && *b == bbox)
            .map(|(_, label, _)| label)
    }

    /// Binds `label` to `bbox` in `view`, replacing any previous box for that
    /// label. Fails if the box already carries a different label in this view.
    pub fn bind(&mut self, view: ViewKind, label: VertebraLabel, bbox: BBox) -> Result<(), LabelError> {
        match self.label_of(view, &bbox) {
            Some(existing) if existing != label => Err(LabelError::DuplicateBox { view, existing }),
            _ => {
                self.entries.insert((view, label), bbox);
                Ok(())
            }
        }
    }

    pub fn remove(&mut self, view: ViewKind, label: VertebraLabel) -> Option<BBox> {
        self.entries.remove(&(view, label))
    }

    pub fn retain(&mut self, mut keep: impl FnMut(ViewKind, VertebraLabel, &mut BBox) -> bool) {
        self.entries.retain(|(view, label), b| keep(*view, *label, b));
    }

    /// Resolves a click against `boxes` and binds the hit box to `label`.
    /// The map is left untouched on error.
    pub fn label_vertebra(
        &mut self,
        view: ViewKind,
        p: Point2,
        boxes: &[BBox],
        label: VertebraLabel,
    ) -> Result<Labeled, LabelError> {
        let idx = hit_test(p, boxes).ok_or(LabelError::NoMatch(p))?;
        let bbox = boxes[idx];
        self.bind(view, label, bbox)?;
        Ok(Labeled { bbox, marker: p })
    }

    /// `(AP box, LP box)` when the label is present in both views.
    pub fn paired_boxes(&self, label: VertebraLabel) -> Option<(BBox, BBox)> {
        Some((*self.get(ViewKind::Ap, label)?, *self.get(ViewKind::Lp, label)?))
    }

    pub fn is_paired(&self, label: VertebraLabel) -> bool {
        self.paired_boxes(label).is_some()
    }

    /// Checks the one-label-per-box rule.
    pub fn validate(&self) -> Result<(), String> {
        let all: Vec<_> = self.iter().collect();
        for (i, (va, la, ba)) in all.iter().enumerate() {
            for (vb, lb, bb) in &all[i + 1..] {
                if va == vb && ba == bb {
                    return Err(format!("{la} and {lb} share one box in the {va} view"));
                }
            }
        }
        Ok(())
    }

    pub fn from_entries(entries: impl IntoIterator<Item = LabelEntry>) -> Result<Self, String> {
        let mut map = LabelMap::new();
        for e in entries {
            if map.entries.insert((e.view, e.label), e.bbox).is_some() {
                return Err(format!("{} labeled twice in the {} view", e.label, e.view));
            }
        }
        map.validate()?;
        Ok(map)
    }
}
