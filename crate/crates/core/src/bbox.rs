//! Detection boxes and the plain-text box file exchanged with detectors.
//!
//! One box per line: `x1 y1 x2 y2 confidence`, whitespace separated, with
//! `(x1, y1)` the top-left and `(x2, y2)` the bottom-right corner in pixels.
//! Blank lines and lines starting with `#` are skipped. LF and CRLF line
//! endings are both accepted.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt::Write as _;
use thiserror::Error;

use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {reason}")]
pub struct ParseError {
    /// 1-based.
    pub line: usize,
    pub reason: String,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64, confidence: f64) -> Result<Self, String> {
        let b = Self { x1, y1, x2, y2, confidence };
        b.check()?;
        Ok(b)
    }

    /// Returns the first violated invariant, if any.
    pub fn check(&self) -> Result<(), String> {
        let all = [self.x1, self.y1, self.x2, self.y2, self.confidence];
        if all.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        if self.x1 >= self.x2 {
            return Err("x1 >= x2".into());
        }
        if self.y1 >= self.y2 {
            return Err("y1 >= y2".into());
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err("confidence outside [0, 1]".into());
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center_u(&self) -> f64 {
        (self.x1 + self.x2) / 2.0
    }

    pub fn center_v(&self) -> f64 {
        (self.y1 + self.y2) / 2.0
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Point2) -> bool {
        self.x1 <= p.u && p.u <= self.x2 && self.y1 <= p.v && p.v <= self.y2
    }

    /// Strict interior containment.
    pub fn contains_strictly(&self, p: Point2) -> bool {
        self.x1 < p.u && p.u < self.x2 && self.y1 < p.v && p.v < self.y2
    }

    pub fn within(&self, width: f64, height: f64) -> bool {
        self.x1 >= 0.0 && self.y1 >= 0.0 && self.x2 <= width && self.y2 <= height
    }
}

fn parse_line(line: &str) -> Result<Option<BBox>, String> {
    let trimmed = line.trim();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return Ok(None);
    }
    let fields: Vec<&str> = trimmed.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    }
    let mut values = [0.0f64; 5];
    for (slot, token) in values.iter_mut().zip(&fields) {
        *slot = match token.parse::<f64>() {
            Ok(v) if v.is_finite() => v,
            _ => return Err(format!("invalid number '{token}'")),
        };
    }
    let [x1, y1, x2, y2, confidence] = values;
    BBox::new(x1, y1, x2, y2, confidence).map(Some)
}

pub fn parse_bbox_file(text: &str) -> Result<Vec<BBox>, ParseError> {
    let mut boxes = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        match parse_line(line) {
            Ok(Some(b)) => boxes.push(b),
            Ok(None) => {}
            Err(reason) => return Err(ParseError { line: idx + 1, reason }),
        }
    }
    Ok(boxes)
}

/// Inverse of [`parse_bbox_file`]. Numbers use the shortest representation
/// that parses back to the same `f64`.
pub fn serialize_bbox_file(boxes: &[BBox]) -> String {
    let mut out = String::new();
    for b in boxes {
        let _ = writeln!(out, "{} {} {} {} {}", b.x1, b.y1, b.x2, b.y2, b.confidence);
    }
    out
}

/// Ranks two containing boxes: smaller area first, then higher confidence.
fn preference(a: &BBox, b: &BBox) -> Ordering {
    a.area()
        .total_cmp(&b.area())
        .then_with(|| b.confidence.total_cmp(&a.confidence))
}

/// Index of the box hit by a click, or `None` when the click misses every box.
///
/// Among several containing boxes the smallest wins, then the most confident,
/// then the earliest in file order.
pub fn hit_test(p: Point2, boxes: &[BBox]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, b) in boxes.iter().enumerate() {
        if !b.contains(p) {
            continue;
        }
        best = match best {
            Some(j) if preference(b, &boxes[j]) != Ordering::Less => Some(j),
            _ => Some(i),
        };
    }
    best
}
