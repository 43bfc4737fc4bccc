//! Edge pipeline: pixel filter → tracker → keyframe judge, plus an
//! unfiltered tracker run that stands in for "upload every result".

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::antsort::{TrackStatus, Tracker, TrackerConfig};
use crate::commsim::{MissionTrace, ReportedTarget};
use crate::error::{InvalidInput, TrackError};
use crate::ksa::{pixel_filter_indices, KsaConfig, KsaState, Keyframe, Sighting};
use crate::types::{FrameRecord, ImuSample};

/// One line of the per-frame track dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackDumpRow {
    pub frame_index: u64,
    pub track_id: u64,
    pub status: TrackStatus,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeOutput {
    pub trace: MissionTrace,
    pub keyframes: Vec<Keyframe>,
    pub track_dump: Vec<TrackDumpRow>,
    /// Per frame, the `(track_id, detection_index)` pairs seen by the judge.
    pub sightings: Vec<(u64, Vec<(u64, usize)>)>,
}

/// How frames without an IMU sample are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MissingImu {
    #[default]
    Error,
    /// Substitute a zero sample.
    Zero,
}

#[derive(Debug, Clone, Default)]
struct ImuLookup(BTreeMap<u64, ImuSample>);

impl ImuLookup {
    fn new(imu: &[ImuSample]) -> Result<Self, InvalidInput> {
        let mut m = BTreeMap::new();
        for s in imu {
            s.validate()?;
            if m.insert(s.frame_index, *s).is_some() {
                return Err(InvalidInput::new(format!("duplicate IMU sample for frame {}", s.frame_index)));
            }
        }
        Ok(Self(m))
    }

    fn get(&self, frame: u64, policy: MissingImu) -> Option<ImuSample> {
        match (self.0.get(&frame), policy) {
            (Some(s), _) => Some(*s),
            (None, MissingImu::Zero) => Some(ImuSample::zero(frame)),
            (None, MissingImu::Error) => None,
        }
    }
}

/// Runs the tracker with keyframe selection, and a second tracker on the
/// unfiltered detections. Without keyframe selection a track is reported on
/// the frame it is confirmed.
pub fn run_edge(
    frames: &[FrameRecord],
    imu: &[ImuSample],
    tracker_cfg: &TrackerConfig,
    ksa_cfg: &KsaConfig,
    missing_imu: MissingImu,
) -> Result<EdgeOutput, TrackError> {
    tracker_cfg.validate()?;
    ksa_cfg.validate()?;
    let lookup = ImuLookup::new(imu)?;

    let mut filtered = Tracker::new(tracker_cfg.clone());
    let mut unfiltered = Tracker::new(tracker_cfg.clone());
    let mut ksa = KsaState::new();
    let mut keyframes = Vec::new();
    let mut dump = Vec::new();
    let mut sightings_log = Vec::with_capacity(frames.len());
    let mut reported_all = Vec::new();
    let mut seen_all = BTreeSet::new();
    let mut result_frames = Vec::new();

    for f in frames {
        let sample = lookup.get(f.frame_index, missing_imu);
        if !f.detections.is_empty() {
            result_frames.push((f.frame_index, f.timestamp));
        }

        let out = unfiltered.step(f, sample.as_ref())?;
        for m in &out.matched {
            let confirmed = out.active.iter().any(|t| t.id == m.track_id && t.status == TrackStatus::Confirmed);
            if confirmed && seen_all.insert(m.track_id) {
                reported_all.push(ReportedTarget {
                    frame_index: f.frame_index,
                    detection_index: m.detection_index,
                    track_id: m.track_id,
                });
            }
        }

        let keep = pixel_filter_indices(&f.detections, ksa_cfg.tau);
        let small = FrameRecord {
            frame_index: f.frame_index,
            timestamp: f.timestamp,
            detections: keep.iter().map(|&i| f.detections[i]).collect(),
        };
        let out = filtered.step(&small, sample.as_ref())?;
        let sightings: Vec<Sighting> = out
            .matched
            .iter()
            .map(|m| Sighting {
                track_id: m.track_id,
                frame_index: f.frame_index,
                timestamp: f.timestamp,
                bbox: m.detection.bbox,
                class_id: m.detection.class_id,
                detection_index: keep[m.detection_index],
            })
            .collect();
        sightings_log.push((f.frame_index, sightings.iter().map(|s| (s.track_id, s.detection_index)).collect()));
        keyframes.extend(ksa.judge(&sightings, ksa_cfg)?);

        for t in &out.active {
            let b = t.state.bbox();
            dump.push(TrackDumpRow {
                frame_index: f.frame_index,
                track_id: t.id,
                status: t.status,
                cx: b.cx,
                cy: b.cy,
                w: b.w,
                h: b.h,
                score: t.score,
            });
        }
    }

    let trace = MissionTrace {
        n_frames: frames.len() as u64,
        result_frames,
        reported_all,
        keyframes: keyframes.clone(),
    };
    Ok(EdgeOutput { trace, keyframes, track_dump: dump, sightings: sightings_log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, SynthConfig};

    #[test]
    fn empty_mission() {
        let out = run_edge(&[], &[], &TrackerConfig::default(), &KsaConfig::default(), MissingImu::Error).unwrap();
        assert!(out.keyframes.is_empty());
        assert_eq!(out.trace.n_frames, 0);
    }

    #[test]
    fn missing_imu_policy() {
        let frames = vec![FrameRecord { frame_index: 0, timestamp: 0.0, detections: vec![] }];
        let err = run_edge(&frames, &[], &TrackerConfig::default(), &KsaConfig::default(), MissingImu::Error);
        assert_eq!(err.unwrap_err(), TrackError::MissingImu { frame: 0 });
        assert!(run_edge(&frames, &[], &TrackerConfig::default(), &KsaConfig::default(), MissingImu::Zero).is_ok());
    }

    #[test]
    fn synthetic_mission_uploads_each_target_once() {
        let m = generate(&SynthConfig::default()).unwrap();
        let out = run_edge(&m.frames, &m.imu, &TrackerConfig::default(), &KsaConfig::default(), MissingImu::Error).unwrap();
        assert!(out.keyframes.len() <= 22);
        let labels = crate::commsim::LabelSet::new(m.labels.iter().copied());
        let mut objs = BTreeSet::new();
        for k in &out.keyframes {
            let l = labels.get(k.frame_index, k.detection_index).unwrap();
            assert!(objs.insert(l.object_id.expect("keyframe on clutter")));
        }
        assert!(out.keyframes.len() >= 20, "{}", out.keyframes.len());
    }
}
