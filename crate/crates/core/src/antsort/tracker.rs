use serde::{Deserialize, Serialize};

use super::kalman::{imu_control, Measurement, TrackState};
use super::{Compensation, TrackerConfig};
use crate::assignment;
use crate::error::TrackError;
use crate::types::{iou, ClassId, Detection, FrameRecord, ImuSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

impl TrackStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrackStatus::Tentative => "tentative",
            TrackStatus::Confirmed => "confirmed",
            TrackStatus::Lost => "lost",
            TrackStatus::Removed => "removed",
        }
    }

    /// Whether `self → next` is an allowed lifecycle transition.
    pub fn can_become(&self, next: TrackStatus) -> bool {
        use TrackStatus::*;
        *self == next
            || matches!(
                (*self, next),
                (Tentative, Confirmed) | (Tentative, Removed) | (Confirmed, Lost) | (Confirmed, Removed) | (Lost, Confirmed) | (Lost, Removed)
            )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    pub state: TrackState,
    pub status: TrackStatus,
    /// Successful associations, including the detection that created it.
    pub hits: u32,
    /// Frames since creation.
    pub age: u32,
    pub frames_since_update: u32,
    pub class_id: ClassId,
    /// Score of the most recent matched detection.
    pub score: f64,
}

impl Track {
    /// A fresh track spawned from `det`.
    pub fn new(id: u64, det: &Detection, cfg: &TrackerConfig) -> Self {
        let status = if cfg.confirm_hits <= 1 { TrackStatus::Confirmed } else { TrackStatus::Tentative };
        Self {
            id,
            state: TrackState::initiate(&det.bbox, cfg),
            status,
            hits: 1,
            age: 0,
            frames_since_update: 0,
            class_id: det.class_id,
            score: det.score,
        }
    }

    /// Advances the state one frame, injecting the IMU sample as control input
    /// when compensation is enabled.
    pub fn predict(&mut self, imu: &ImuSample, cfg: &TrackerConfig) {
        debug_assert!(self.status != TrackStatus::Removed);
        match cfg.compensation {
            Compensation::Imu => self.state.predict(Some(&imu_control(imu, cfg)), cfg),
            Compensation::None => self.state.predict(None, cfg),
        }
        self.age += 1;
    }

    pub fn update(&mut self, det: &Detection, cfg: &TrackerConfig) {
        let b = det.bbox;
        self.state.update(&Measurement::new(b.cx, b.cy, b.w, b.h), cfg);
        self.hits += 1;
        self.frames_since_update = 0;
        self.class_id = det.class_id;
        self.score = det.score;
        match self.status {
            TrackStatus::Tentative if self.hits >= cfg.confirm_hits => self.status = TrackStatus::Confirmed,
            TrackStatus::Lost => self.status = TrackStatus::Confirmed,
            _ => {}
        }
    }

    fn mark_missed(&mut self, cfg: &TrackerConfig) {
        self.frames_since_update += 1;
        self.status = match self.status {
            TrackStatus::Tentative => TrackStatus::Removed,
            TrackStatus::Confirmed | TrackStatus::Lost if self.frames_since_update > cfg.max_lost_frames => {
                TrackStatus::Removed
            }
            TrackStatus::Confirmed => TrackStatus::Lost,
            s => s,
        };
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Association {
    /// `(track_id, detection_index)`, ordered by track id.
    pub matches: Vec<(u64, usize)>,
    pub unmatched_tracks: Vec<u64>,
    pub unmatched_dets: Vec<usize>,
}

/// Two-stage IoU association.
///
/// Stage one assigns every track against the high-score detections
/// (`score ≥ epsilon`) on cost `1 − IoU`, rejecting pairs below
/// `iou_gate_high`. Stage two assigns the leftover tracks against the
/// low-score detections plus the unmatched high-score ones, gated by
/// `iou_gate_low`. Rows are ordered by track id and columns by detection
/// index, so ties go to the lower id and lower index.
pub fn associate(tracks: &[Track], dets: &[Detection], cfg: &TrackerConfig) -> Association {
    let mut order: Vec<usize> = (0..tracks.len()).collect();
    order.sort_by_key(|&i| tracks[i].id);

    let (high, low): (Vec<usize>, Vec<usize>) = (0..dets.len()).partition(|&j| dets[j].score >= cfg.epsilon);

    let mut det_taken = vec![false; dets.len()];
    let mut matches = Vec::new();

    let leftover = match_stage(tracks, &order, dets, &high, cfg.iou_gate_high, &mut matches, &mut det_taken);

    let mut second: Vec<usize> = low.into_iter().chain(high.iter().copied().filter(|&j| !det_taken[j])).collect();
    second.sort_unstable();
    let leftover = match_stage(tracks, &leftover, dets, &second, cfg.iou_gate_low, &mut matches, &mut det_taken);

    matches.sort_unstable();
    Association {
        matches,
        unmatched_tracks: leftover.iter().map(|&i| tracks[i].id).collect(),
        unmatched_dets: (0..dets.len()).filter(|&j| !det_taken[j]).collect(),
    }
}

// Returns the track positions (into `tracks`) left unmatched, in `rows` order.
fn match_stage(
    tracks: &[Track],
    rows: &[usize],
    dets: &[Detection],
    cols: &[usize],
    gate: f64,
    matches: &mut Vec<(u64, usize)>,
    det_taken: &mut [bool],
) -> Vec<usize> {
    if rows.is_empty() || cols.is_empty() {
        return rows.to_vec();
    }
    let boxes: Vec<_> = rows.iter().map(|&i| tracks[i].state.bbox()).collect();
    let ious: Vec<Vec<f64>> = boxes.iter().map(|tb| cols.iter().map(|&j| iou(tb, &dets[j].bbox)).collect()).collect();
    let cost: Vec<Vec<f64>> = ious.iter().map(|r| r.iter().map(|v| 1.0 - v).collect()).collect();
    let assign = assignment::solve(&cost);

    let mut leftover = Vec::new();
    for (r, a) in assign.into_iter().enumerate() {
        match a {
            Some(c) if ious[r][c] >= gate && ious[r][c] > 0.0 => {
                matches.push((tracks[rows[r]].id, cols[c]));
                det_taken[cols[c]] = true;
            }
            _ => leftover.push(rows[r]),
        }
    }
    leftover
}

/// A detection associated with a track on the current frame. Newly created
/// tracks report the detection that spawned them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedDetection {
    pub track_id: u64,
    pub detection_index: usize,
    pub detection: Detection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub frame_index: u64,
    /// Tracks still alive after this frame, ordered by id.
    pub active: Vec<Track>,
    /// Matches on this frame, ordered by track id.
    pub matched: Vec<MatchedDetection>,
}

/// One tracker instance per video sequence.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Self {
        Self { cfg, tracks: Vec::new(), next_id: 1, last_frame: None }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Processes one frame. `imu` must carry the same frame index; pass
    /// [`ImuSample::zero`] explicitly when no measurement exists.
    pub fn step(&mut self, frame: &FrameRecord, imu: Option<&ImuSample>) -> Result<StepOutput, TrackError> {
        if let Some(prev) = self.last_frame {
            if frame.frame_index <= prev {
                return Err(TrackError::OutOfOrderFrame { previous: prev, got: frame.frame_index });
            }
        }
        let imu = match imu {
            Some(s) if s.frame_index == frame.frame_index => s,
            _ => return Err(TrackError::MissingImu { frame: frame.frame_index }),
        };
        imu.validate()?;
        for d in &frame.detections {
            d.validate()?;
        }
        self.last_frame = Some(frame.frame_index);

        let cfg = &self.cfg;
        for t in &mut self.tracks {
            t.predict(imu, cfg);
        }

        let dets = &frame.detections;
        let assoc = associate(&self.tracks, dets, cfg);

        let mut matched = Vec::with_capacity(assoc.matches.len());
        for &(id, j) in &assoc.matches {
            // matches are sorted by id and tracks are stored in id order
            let pos = self.tracks.binary_search_by_key(&id, |t| t.id).expect("matched track exists");
            self.tracks[pos].update(&dets[j], cfg);
            matched.push(MatchedDetection { track_id: id, detection_index: j, detection: dets[j] });
        }
        for id in &assoc.unmatched_tracks {
            let pos = self.tracks.binary_search_by_key(id, |t| t.id).expect("unmatched track exists");
            self.tracks[pos].mark_missed(cfg);
        }
        self.tracks.retain(|t| t.status != TrackStatus::Removed);

        for &j in &assoc.unmatched_dets {
            if dets[j].score >= cfg.epsilon {
                let id = self.next_id;
                self.next_id += 1;
                self.tracks.push(Track::new(id, &dets[j], cfg));
                matched.push(MatchedDetection { track_id: id, detection_index: j, detection: dets[j] });
            }
        }
        matched.sort_by_key(|m| m.track_id);

        Ok(StepOutput { frame_index: frame.frame_index, active: self.tracks.clone(), matched })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::BoundingBox;

    fn det(cx: f64, cy: f64, w: f64, h: f64, score: f64) -> Detection {
        Detection { bbox: BoundingBox { cx, cy, w, h }, score, class_id: ClassId::YAGI }
    }

    fn frame(i: u64, dets: Vec<Detection>) -> FrameRecord {
        FrameRecord { frame_index: i, timestamp: i as f64, detections: dets }
    }

    fn cfg() -> TrackerConfig {
        TrackerConfig { dt: 1.0, ..TrackerConfig::default() }
    }

    #[test]
    fn no_detections_leaves_tracks_unmatched() {
        let c = cfg();
        let t = Track::new(4, &det(0.0, 0.0, 10.0, 10.0, 0.9), &c);
        let a = associate(&[t], &[], &c);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_tracks, vec![4]);
    }

    #[test]
    fn single_overlapping_detection_matches() {
        let c = cfg();
        let t = Track::new(1, &det(0.0, 0.0, 10.0, 10.0, 0.9), &c);
        // shift 10/19 of a width → IoU = 9/11 ≈ 0.82 in x only; use a smaller shift
        let d = det(0.5, 0.0, 10.0, 10.0, 0.9);
        assert!(iou(&t.state.bbox(), &d.bbox) > 0.9);
        let a = associate(&[t], &[d], &c);
        assert_eq!(a.matches, vec![(1, 0)]);
    }

    #[test]
    fn low_score_detection_only_matches_in_second_stage() {
        let c = cfg();
        let t = Track::new(1, &det(0.0, 0.0, 10.0, 10.0, 0.9), &c);
        // IoU ≈ 0.25: below the high gate, above the low gate
        let d = det(6.0, 0.0, 10.0, 10.0, 0.2);
        let v = iou(&t.state.bbox(), &d.bbox);
        assert!(v < 0.3 && v >= 0.2, "{v}");
        let a = associate(std::slice::from_ref(&t), &[d], &c);
        assert_eq!(a.matches, vec![(1, 0)]);
        // the same overlap at high score is rejected by stage one, then accepted by stage two
        let a = associate(&[t], &[det(6.0, 0.0, 10.0, 10.0, 0.9)], &c);
        assert_eq!(a.matches, vec![(1, 0)]);
    }

    #[test]
    fn confirms_after_hits() {
        let mut tr = Tracker::new(cfg());
        for i in 0..3 {
            let out = tr.step(&frame(i, vec![det(50.0, 50.0, 20.0, 20.0, 0.9)]), Some(&ImuSample::zero(i))).unwrap();
            assert_eq!(out.active.len(), 1);
            assert_eq!(out.matched.len(), 1);
        }
        assert_eq!(tr.tracks()[0].status, TrackStatus::Confirmed);
        assert_eq!(tr.tracks()[0].id, 1);
    }

    #[test]
    fn tentative_removed_on_first_miss() {
        let mut tr = Tracker::new(cfg());
        tr.step(&frame(0, vec![det(50.0, 50.0, 20.0, 20.0, 0.9)]), Some(&ImuSample::zero(0))).unwrap();
        let out = tr.step(&frame(1, vec![]), Some(&ImuSample::zero(1))).unwrap();
        assert!(out.active.is_empty());
    }

    #[test]
    fn lost_then_removed_and_id_not_reused() {
        let c = TrackerConfig { max_lost_frames: 4, ..cfg() };
        let mut tr = Tracker::new(c);
        let d = det(50.0, 50.0, 20.0, 20.0, 0.9);
        let mut i = 0;
        for _ in 0..3 {
            tr.step(&frame(i, vec![d]), Some(&ImuSample::zero(i))).unwrap();
            i += 1;
        }
        for k in 1..=5u64 {
            let out = tr.step(&frame(i, vec![]), Some(&ImuSample::zero(i))).unwrap();
            i += 1;
            if k <= 4 {
                assert_eq!(out.active[0].status, TrackStatus::Lost);
                assert_eq!(out.active[0].frames_since_update, k as u32);
            } else {
                assert!(out.active.is_empty());
            }
        }
        let out = tr.step(&frame(i, vec![d]), Some(&ImuSample::zero(i))).unwrap();
        assert_eq!(out.active[0].id, 2);
    }

    #[test]
    fn lost_track_recovers() {
        let mut tr = Tracker::new(cfg());
        let d = det(50.0, 50.0, 20.0, 20.0, 0.9);
        for i in 0..3 {
            tr.step(&frame(i, vec![d]), Some(&ImuSample::zero(i))).unwrap();
        }
        tr.step(&frame(3, vec![]), Some(&ImuSample::zero(3))).unwrap();
        assert_eq!(tr.tracks()[0].status, TrackStatus::Lost);
        let out = tr.step(&frame(4, vec![d]), Some(&ImuSample::zero(4))).unwrap();
        assert_eq!(out.active[0].status, TrackStatus::Confirmed);
        assert_eq!(out.matched[0].track_id, 1);
    }

    #[test]
    fn rejects_out_of_order_and_missing_imu() {
        let mut tr = Tracker::new(cfg());
        tr.step(&frame(5, vec![]), Some(&ImuSample::zero(5))).unwrap();
        assert_eq!(
            tr.step(&frame(5, vec![]), Some(&ImuSample::zero(5))),
            Err(TrackError::OutOfOrderFrame { previous: 5, got: 5 })
        );
        assert_eq!(tr.step(&frame(6, vec![]), None), Err(TrackError::MissingImu { frame: 6 }));
        assert_eq!(
            tr.step(&frame(6, vec![]), Some(&ImuSample::zero(7))),
            Err(TrackError::MissingImu { frame: 6 })
        );
    }

    #[test]
    fn low_score_detections_do_not_spawn_tracks() {
        let mut tr = Tracker::new(cfg());
        let out = tr.step(&frame(0, vec![det(5.0, 5.0, 4.0, 4.0, 0.3)]), Some(&ImuSample::zero(0))).unwrap();
        assert!(out.active.is_empty() && out.matched.is_empty());
    }

    #[test]
    fn transitions_table() {
        use TrackStatus::*;
        assert!(Tentative.can_become(Confirmed));
        assert!(!Tentative.can_become(Lost));
        assert!(!Removed.can_become(Confirmed));
        assert!(Lost.can_become(Confirmed));
    }
}
