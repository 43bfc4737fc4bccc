//! Shared geometric and record types.
//!
//! Boxes are stored center-based (`cx`, `cy`, `w`, `h`) in pixels, which is the
//! layout the tracker state uses. Corner conversions exist for file I/O.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::error::InvalidInput;

/// Axis-aligned box in pixel coordinates, center-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    /// Builds a box, rejecting non-finite fields and non-positive extents.
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self, InvalidInput> {
        let b = Self { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        if ![self.cx, self.cy, self.w, self.h].iter().all(|v| v.is_finite()) {
            return Err(InvalidInput::new("bounding box fields must be finite"));
        }
        if self.w <= 0.0 || self.h <= 0.0 {
            return Err(InvalidInput::new(format!(
                "bounding box extent must be positive (w={}, h={})",
                self.w, self.h
            )));
        }
        Ok(())
    }

    /// `(x1, y1, x2, y2)` corners.
    pub fn to_corners(&self) -> (f64, f64, f64, f64) {
        let hw = self.w / 2.0;
        let hh = self.h / 2.0;
        (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)
    }

    pub fn from_corners(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self, InvalidInput> {
        Self::new((x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Intersection over union of two valid boxes. Returns 0 for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ax1, ay1, ax2, ay2) = a.to_corners();
    let (bx1, by1, bx2, by2) = b.to_corners();
    let iw = ax2.min(bx2) - ax1.max(bx1);
    let ih = ay2.min(by2) - ay1.max(by1);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    // Areas from the same corners keep iou(a, a) exactly 1.
    let inter = iw * ih;
    let area_a = (ax2 - ax1) * (ay2 - ay1);
    let area_b = (bx2 - bx1) * (by2 - by1);
    let union = area_a + area_b - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Antenna class. Open set: unknown integers pass through unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub const YAGI: ClassId = ClassId(0);
    pub const PLATE_LOG: ClassId = ClassId(1);
    pub const PATCH: ClassId = ClassId(2);

    pub fn name(&self) -> Option<&'static str> {
        match *self {
            Self::YAGI => Some("yagi"),
            Self::PLATE_LOG => Some("plate-log"),
            Self::PATCH => Some("patch"),
            _ => None,
        }
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.name() {
            Some(n) => f.write_str(n),
            None => write!(f, "class-{}", self.0),
        }
    }
}

/// One detector output on one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(flatten)]
    pub bbox: BoundingBox,
    pub score: f64,
    pub class_id: ClassId,
}

impl Detection {
    pub fn new(bbox: BoundingBox, score: f64, class_id: ClassId) -> Result<Self, InvalidInput> {
        let d = Self { bbox, score, class_id };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        self.bbox.validate()?;
        if !(0.0..=1.0).contains(&self.score) {
            return Err(InvalidInput::new(format!(
                "detection score {} outside [0, 1]",
                self.score
            )));
        }
        Ok(())
    }
}

/// All detections for one video frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: u64,
    pub timestamp: f64,
    #[serde(default)]
    pub detections: Vec<Detection>,
}

/// Linear acceleration for one frame interval, in m/s².
///
/// Axes are image-aligned: `ax` along the image x axis, `ay` along image y,
/// `az` along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub frame_index: u64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl ImuSample {
    pub fn zero(frame_index: u64) -> Self {
        Self { frame_index, ax: 0.0, ay: 0.0, az: 0.0 }
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        if [self.ax, self.ay, self.az].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(InvalidInput::new(format!(
                "IMU sample for frame {} has non-finite components",
                self.frame_index
            )))
        }
    }
}

/// Checks the ordering invariants of a detection sequence.
pub fn validate_sequence(frames: &[FrameRecord]) -> Result<(), InvalidInput> {
    for pair in frames.windows(2) {
        if pair[1].frame_index <= pair[0].frame_index {
            return Err(InvalidInput::new(format!(
                "frame_index must strictly increase ({} after {})",
                pair[1].frame_index, pair[0].frame_index
            )));
        }
        if pair[1].timestamp < pair[0].timestamp {
            return Err(InvalidInput::new(format!(
                "timestamp decreases at frame {}",
                pair[1].frame_index
            )));
        }
    }
    for f in frames {
        if !f.timestamp.is_finite() {
            return Err(InvalidInput::new(format!("frame {} has non-finite timestamp", f.frame_index)));
        }
        for d in &f.detections {
            d.validate()
                .map_err(|e| InvalidInput::new(format!("frame {}: {}", f.frame_index, e)))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bb(cx: f64, cy: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(cx, cy, w, h).unwrap()
    }

    #[test]
    fn iou_identity() {
        let a = bb(10.0, 10.0, 4.0, 4.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_disjoint() {
        assert_eq!(iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(100.0, 100.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn iou_half_shift() {
        // intersection 1x2 = 2, union 4 + 4 - 2 = 6
        let v = iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(1.0, 0.0, 2.0, 2.0));
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn touching_edges_do_not_overlap() {
        assert_eq!(iou(&bb(0.0, 0.0, 2.0, 2.0), &bb(2.0, 0.0, 2.0, 2.0)), 0.0);
    }

    #[test]
    fn rejects_bad_boxes() {
        assert!(BoundingBox::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(BoundingBox::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(BoundingBox::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
        let good = bb(0.0, 0.0, 1.0, 1.0);
        assert!(Detection::new(good, 1.5, ClassId::YAGI).is_err());
        assert!(Detection::new(good, 0.0, ClassId(17)).is_ok());
    }

    #[test]
    fn corner_round_trip() {
        let b = bb(5.0, 7.0, 4.0, 2.0);
        let (x1, y1, x2, y2) = b.to_corners();
        assert_eq!((x1, y1, x2, y2), (3.0, 6.0, 7.0, 8.0));
        assert_eq!(BoundingBox::from_corners(x1, y1, x2, y2).unwrap(), b);
    }

    #[test]
    fn sequence_order_checked() {
        let f = |i, t| FrameRecord { frame_index: i, timestamp: t, detections: vec![] };
        assert!(validate_sequence(&[f(0, 0.0), f(1, 0.0), f(3, 0.1)]).is_ok());
        assert!(validate_sequence(&[f(1, 0.0), f(1, 0.1)]).is_err());
        assert!(validate_sequence(&[f(0, 0.5), f(1, 0.1)]).is_err());
    }

    #[test]
    fn class_display() {
        assert_eq!(ClassId::YAGI.to_string(), "yagi");
        assert_eq!(ClassId(9).to_string(), "class-9");
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (-50.0..50.0f64, -50.0..50.0f64, 0.1..40.0f64, 0.1..40.0f64)
            .prop_map(|(cx, cy, w, h)| BoundingBox { cx, cy, w, h })
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = iou(&a, &b);
            let ba = iou(&b, &a);
            prop_assert_eq!(ab, ba);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn iou_self_is_one(a in arb_box()) {
            prop_assert_eq!(iou(&a, &a), 1.0);
        }
    }
}
