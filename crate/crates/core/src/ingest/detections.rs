use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::IngestError;

/// Axis-aligned box in pixels, image y pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        BBox { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let iw = (self.x2.min(other.x2) - self.x1.max(other.x1)).max(0.0);
        let ih = (self.y2.min(other.y2) - self.y1.max(other.y1)).max(0.0);
        let inter = iw * ih;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        let vals = [self.x1, self.y1, self.x2, self.y2];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("non-finite bbox coordinate".into());
        }
        if !(self.x1 < self.x2) {
            return Err("x1 < x2 violated".into());
        }
        if !(self.y1 < self.y2) {
            return Err("y1 < y2 violated".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionRecord {
    pub frame_idx: u64,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Serialize, Deserialize)]
struct DetectionLine {
    frame_idx: u64,
    bbox: [f64; 4],
    confidence: f64,
}

/// Parses a line-delimited detection stream. Blank lines are skipped and the
/// result is stably sorted by frame index.
pub fn parse_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>, IngestError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| IngestError::parse(lineno, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let rec: DetectionLine =
            serde_json::from_str(trimmed).map_err(|e| IngestError::parse(lineno, e.to_string()))?;
        let [x1, y1, x2, y2] = rec.bbox;
        let bbox = BBox { x1, y1, x2, y2 };
        bbox.check()
            .map_err(|m| IngestError::Validation(format!("{m} at line {lineno}")))?;
        if !(0.0..=1.0).contains(&rec.confidence) {
            return Err(IngestError::Validation(format!(
                "confidence {} outside [0, 1] at line {lineno}",
                rec.confidence
            )));
        }
        out.push(DetectionRecord {
            frame_idx: rec.frame_idx,
            bbox,
            confidence: rec.confidence,
        });
    }
    out.sort_by_key(|d| d.frame_idx);
    Ok(out)
}

pub fn write_detections<W: Write>(mut w: W, records: &[DetectionRecord]) -> std::io::Result<()> {
    for r in records {
        let line = DetectionLine {
            frame_idx: r.frame_idx,
            bbox: [r.bbox.x1, r.bbox.y1, r.bbox.x2, r.bbox.y2],
            confidence: r.confidence,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
