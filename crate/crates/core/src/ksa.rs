//! Keyframe selection: a pixel-size filter ahead of the tracker and a
//! tracking-count judge after it. Each track id is uploaded at most once.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::InvalidInput;
use crate::types::{BoundingBox, ClassId, Detection};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KsaConfig {
    /// Pixel threshold: detections wider or taller than this are dropped.
    pub tau: f64,
    /// Tracking threshold in frames.
    pub mu: u32,
    /// Reset the sighting count whenever a track skips a frame.
    pub strict_consecutive: bool,
}

impl Default for KsaConfig {
    fn default() -> Self {
        Self { tau: 120.0, mu: 6, strict_consecutive: false }
    }
}

impl KsaConfig {
    /// No size filtering and upload on first sighting.
    pub fn disabled() -> Self {
        Self { tau: f64::INFINITY, mu: 1, strict_consecutive: false }
    }

    pub fn validate(&self) -> Result<(), InvalidInput> {
        if !(self.tau > 0.0) {
            return Err(InvalidInput::new(format!("ksa.tau = {} must be positive", self.tau)));
        }
        if self.mu == 0 {
            return Err(InvalidInput::new("ksa.mu must be at least 1"));
        }
        Ok(())
    }
}

/// Keeps detections with `w ≤ tau` and `h ≤ tau`, in input order.
pub fn pixel_filter(dets: &[Detection], tau: f64) -> Vec<Detection> {
    dets.iter().filter(|d| passes(d, tau)).copied().collect()
}

/// Like [`pixel_filter`] but returns the indices of the retained detections.
pub fn pixel_filter_indices(dets: &[Detection], tau: f64) -> Vec<usize> {
    (0..dets.len()).filter(|&i| passes(&dets[i], tau)).collect()
}

fn passes(d: &Detection, tau: f64) -> bool {
    d.bbox.w <= tau && d.bbox.h <= tau
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KsaEntry {
    pub count: u32,
    pub first_frame: u64,
    pub last_frame: u64,
}

/// One matched track on one frame, as handed to the judge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sighting {
    pub track_id: u64,
    pub frame_index: u64,
    pub timestamp: f64,
    pub bbox: BoundingBox,
    pub class_id: ClassId,
    /// Index of the detection within its frame record.
    pub detection_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame_index: u64,
    pub track_id: u64,
    pub class_id: ClassId,
    pub bbox: BoundingBox,
    pub upload_timestamp: f64,
    pub detection_index: usize,
}

#[derive(Debug, Clone, Default)]
pub struct KsaState {
    judge: BTreeMap<u64, KsaEntry>,
    exist: BTreeSet<u64>,
    last_frame: Option<u64>,
}

impl KsaState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entry(&self, track_id: u64) -> Option<&KsaEntry> {
        self.judge.get(&track_id)
    }

    pub fn is_uploaded(&self, track_id: u64) -> bool {
        self.exist.contains(&track_id)
    }

    pub fn uploaded(&self) -> impl Iterator<Item = u64> + '_ {
        self.exist.iter().copied()
    }

    /// Feeds one batch of sightings and returns the keyframes it triggers,
    /// in input order.
    ///
    /// A keyframe fires when `count ≥ mu` and `last − first ≤ mu − 1`. By
    /// default the entry is never reset, so a track that misses frames early
    /// on can no longer qualify; `strict_consecutive` restarts the count
    /// after any gap instead.
    pub fn judge(&mut self, sightings: &[Sighting], cfg: &KsaConfig) -> Result<Vec<Keyframe>, InvalidInput> {
        let mut out = Vec::new();
        for s in sightings {
            if let Some(prev) = self.last_frame {
                if s.frame_index < prev {
                    return Err(InvalidInput::new(format!(
                        "sighting for frame {} after frame {}",
                        s.frame_index, prev
                    )));
                }
            }
            self.last_frame = Some(s.frame_index);
            if self.exist.contains(&s.track_id) {
                continue;
            }
            let e = self.judge.entry(s.track_id).or_insert(KsaEntry {
                count: 0,
                first_frame: s.frame_index,
                last_frame: s.frame_index,
            });
            if cfg.strict_consecutive && e.count > 0 && s.frame_index != e.last_frame + 1 {
                e.count = 0;
                e.first_frame = s.frame_index;
            }
            e.count += 1;
            e.last_frame = s.frame_index;
            let mu = u64::from(cfg.mu);
            if u64::from(e.count) >= mu && e.last_frame - e.first_frame < mu {
                self.judge.remove(&s.track_id);
                self.exist.insert(s.track_id);
                out.push(Keyframe {
                    frame_index: s.frame_index,
                    track_id: s.track_id,
                    class_id: s.class_id,
                    bbox: s.bbox,
                    upload_timestamp: s.timestamp,
                    detection_index: s.detection_index,
                });
            }
        }
        Ok(out)
    }
}
