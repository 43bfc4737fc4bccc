//! Expected-value model of uplink latency and energy for the three
//! deployment modes.
//!
//! * `CO` streams the whole video to the cloud and infers there. Latency is a
//!   fixed stream latency plus the fluid backlog that builds up when the video
//!   bitrate exceeds the uplink.
//! * `ECC` infers on the edge and publishes every frame's result as one
//!   at-least-once message.
//! * `ECCPlus` infers on the edge and publishes only keyframes.
//!
//! Power figures are averages over the mission, so energy is power times
//! mission duration.

use std::collections::{BTreeMap, BTreeSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::CommError;
use crate::ksa::Keyframe;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "CO")]
    Co,
    #[serde(rename = "ECC")]
    Ecc,
    #[serde(rename = "ECC+")]
    EccPlus,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Co, Mode::Ecc, Mode::EccPlus];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Co => "CO",
            Mode::Ecc => "ECC",
            Mode::EccPlus => "ECC+",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = CommError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CO" => Ok(Mode::Co),
            "ECC" => Ok(Mode::Ecc),
            "ECC+" | "ECCPLUS" | "ECC_PLUS" => Ok(Mode::EccPlus),
            _ => Err(CommError::Config(format!("unknown mode '{s}' (expected CO, ECC or ECC+)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeParams {
    pub mode: Mode,
    /// bit/s
    pub uplink_bandwidth: f64,
    /// s
    pub base_rtt: f64,
    pub loss_prob: f64,
    /// bit/s, required in CO mode.
    #[serde(default)]
    pub video_bitrate: Option<f64>,
    /// Encode + transport latency of the video stream, s (CO mode).
    #[serde(default)]
    pub stream_latency: f64,
    #[serde(default = "default_message_bytes")]
    pub message_bytes: u64,
    pub t_infer_edge: f64,
    pub t_infer_cloud: f64,
    #[serde(default)]
    pub eta: f64,
    /// Average power of the uplink module, W.
    pub power_comm: f64,
    /// Average power of the edge compute device, W.
    pub power_infer: f64,
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
}

fn default_message_bytes() -> u64 {
    256
}

fn default_frame_rate() -> f64 {
    30.0
}

/// Uplink cap used for every mode of the bundled preset, bit/s.
pub const PAPER_UPLINK: f64 = 40e6;

impl ModeParams {
    /// The "paper-table" preset: measured component times and powers for a
    /// 1080p30 mission on a 40 Mb/s uplink.
    ///
    /// CO uses the YOLOv8-n + BotSort cloud baseline (1012 ms stream, 14.1 ms
    /// inference); ECC and ECC+ use EdgeAnt + AntSort on the edge (51.3 ms).
    /// The round trips are back-solved so one 256-byte message takes 251 ms
    /// (ECC) and 62 ms (ECC+). The 8 Mb/s video bitrate is an assumption.
    pub fn paper_table(mode: Mode) -> Self {
        let message_bytes = default_message_bytes();
        let tx = 8.0 * message_bytes as f64 / PAPER_UPLINK;
        let base = Self {
            mode,
            uplink_bandwidth: PAPER_UPLINK,
            base_rtt: 0.0,
            loss_prob: 0.0,
            video_bitrate: None,
            stream_latency: 0.0,
            message_bytes,
            t_infer_edge: 0.0513,
            t_infer_cloud: 0.0141,
            eta: 0.0,
            power_comm: 0.0,
            power_infer: 0.0,
            frame_rate: default_frame_rate(),
        };
        match mode {
            Mode::Co => Self {
                video_bitrate: Some(8e6),
                stream_latency: 1.012,
                power_comm: 3.1,
                power_infer: 9.8,
                ..base
            },
            Mode::Ecc => Self { base_rtt: 0.251 - tx, power_comm: 1.4, power_infer: 12.1, ..base },
            Mode::EccPlus => Self { base_rtt: 0.062 - tx, power_comm: 0.3, power_infer: 12.1, ..base },
        }
    }

    pub fn validate(&self) -> Result<(), CommError> {
        let bad = |m: String| Err(CommError::Config(m));
        if !(self.uplink_bandwidth > 0.0) || !self.uplink_bandwidth.is_finite() {
            return bad(format!("uplink_bandwidth = {} must be positive", self.uplink_bandwidth));
        }
        if !(0.0..1.0).contains(&self.loss_prob) {
            return bad(format!("loss_prob = {} must lie in [0, 1)", self.loss_prob));
        }
        for (name, v) in [
            ("base_rtt", self.base_rtt),
            ("stream_latency", self.stream_latency),
            ("t_infer_edge", self.t_infer_edge),
            ("t_infer_cloud", self.t_infer_cloud),
            ("eta", self.eta),
            ("power_comm", self.power_comm),
            ("power_infer", self.power_infer),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be a non-negative number"));
            }
        }
        if !(self.frame_rate > 0.0) || !self.frame_rate.is_finite() {
            return bad(format!("frame_rate = {} must be positive", self.frame_rate));
        }
        match (self.mode, self.video_bitrate) {
            (Mode::Co, None) => return bad("CO mode requires video_bitrate".into()),
            (_, Some(b)) if !(b > 0.0) || !b.is_finite() => {
                return bad(format!("video_bitrate = {b} must be positive"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Inference time per frame for this mode.
    pub fn t_infer(&self) -> f64 {
        match self.mode {
            Mode::Co => self.t_infer_cloud,
            Mode::Ecc | Mode::EccPlus => self.t_infer_edge,
        }
    }

    /// Latency of a single upload at mission time 0.
    pub fn nominal_e2el(&self) -> f64 {
        let t_comm = match self.mode {
            Mode::Co => self.stream_latency,
            Mode::Ecc | Mode::EccPlus => qos1_time(self.message_bytes, self),
        };
        e2el(self, t_comm, self.t_infer())
    }
}

/// End-to-end latency: communication + inference + delay error.
pub fn e2el(params: &ModeParams, t_comm: f64, t_infer: f64) -> f64 {
    t_comm + t_infer + params.eta
}

/// Expected at-least-once delivery time of one message.
pub fn qos1_time(bytes: u64, params: &ModeParams) -> f64 {
    (8.0 * bytes as f64 / params.uplink_bandwidth + params.base_rtt) / (1.0 - params.loss_prob)
}

/// Fluid backlog delay of a video stream after `t` seconds.
///
/// Zero while the bitrate fits in the uplink; otherwise the queue grows
/// linearly as `(bitrate − bw)·t/bw`.
pub fn stream_backlog(bitrate: f64, bandwidth: f64, t: f64) -> f64 {
    if bitrate <= bandwidth {
        0.0
    } else {
        (bitrate - bandwidth) * t / bandwidth
    }
}

/// Ground truth for one detection in a mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthLabel {
    pub frame_index: u64,
    pub detection_index: usize,
    pub is_interference: bool,
    /// Identity of the physical object, absent for clutter.
    #[serde(default)]
    pub object_id: Option<u64>,
}

/// Labels indexed by `(frame_index, detection_index)`.
#[derive(Debug, Clone, Default)]
pub struct LabelSet(BTreeMap<(u64, usize), GroundTruthLabel>);

impl LabelSet {
    pub fn new(labels: impl IntoIterator<Item = GroundTruthLabel>) -> Self {
        Self(labels.into_iter().map(|l| ((l.frame_index, l.detection_index), l)).collect())
    }

    pub fn get(&self, frame: u64, detection: usize) -> Option<&GroundTruthLabel> {
        self.0.get(&(frame, detection))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A reported target: the detection that first put a track on the uplink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportedTarget {
    pub frame_index: u64,
    pub detection_index: usize,
    pub track_id: u64,
}

impl From<&Keyframe> for ReportedTarget {
    fn from(k: &Keyframe) -> Self {
        Self { frame_index: k.frame_index, detection_index: k.detection_index, track_id: k.track_id }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AccuracyCounts {
    pub tp: u64,
    /// Reported targets that are not interference sources.
    pub fn_: u64,
}

impl AccuracyCounts {
    /// `TP / (TP + FN)`; 1.0 when nothing was reported.
    pub fn ratio(&self) -> f64 {
        let n = self.tp + self.fn_;
        if n == 0 {
            1.0
        } else {
            self.tp as f64 / n as f64
        }
    }
}

/// Counts reported targets by label.
pub fn accuracy(reported: &[ReportedTarget], labels: &LabelSet) -> Result<AccuracyCounts, CommError> {
    let mut c = AccuracyCounts::default();
    for r in reported {
        let l = labels
            .get(r.frame_index, r.detection_index)
            .ok_or(CommError::MissingLabel { frame: r.frame_index, detection: r.detection_index })?;
        if l.is_interference {
            c.tp += 1;
        } else {
            c.fn_ += 1;
        }
    }
    Ok(c)
}

/// What the edge pipeline produced for one mission, independent of mode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MissionTrace {
    pub n_frames: u64,
    /// `(frame_index, timestamp)` of every frame with at least one detection.
    pub result_frames: Vec<(u64, f64)>,
    /// First sighting of every track without keyframe selection.
    pub reported_all: Vec<ReportedTarget>,
    pub keyframes: Vec<Keyframe>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UploadLatency {
    pub frame_index: u64,
    pub timestamp: f64,
    pub t_comm: f64,
    pub t_infer: f64,
    pub e2el: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub mode: Mode,
    pub uploads: u64,
    pub mean_e2el: f64,
    pub nominal_e2el: f64,
    pub accuracy: f64,
    pub true_positives: u64,
    pub false_reports: u64,
    pub reported_targets: u64,
    pub total_uplink_bytes: u64,
    pub energy_comm: f64,
    pub energy_infer: f64,
    pub duration: f64,
    /// The video stream outgrew the uplink and latency diverges.
    pub saturated: bool,
    #[serde(skip)]
    pub per_upload: Vec<UploadLatency>,
}

impl LatencyReport {
    /// Mean E2EL, falling back to the single-upload value for an empty run.
    pub fn effective_e2el(&self) -> f64 {
        if self.uploads == 0 {
            self.nominal_e2el
        } else {
            self.mean_e2el
        }
    }
}

/// Optional sampling of retransmissions instead of using their expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stochastic {
    pub seed: u64,
}

pub fn run_mission(
    params: &ModeParams,
    trace: &MissionTrace,
    labels: &LabelSet,
    stochastic: Option<Stochastic>,
) -> Result<LatencyReport, CommError> {
    params.validate()?;
    let duration = trace.n_frames as f64 / params.frame_rate;
    let t_infer = params.t_infer();
    let mut rng = stochastic.map(|s| ChaCha8Rng::seed_from_u64(s.seed));
    let message_time = |rng: &mut Option<ChaCha8Rng>| -> f64 {
        match rng {
            None => qos1_time(params.message_bytes, params),
            Some(r) => {
                let once = 8.0 * params.message_bytes as f64 / params.uplink_bandwidth + params.base_rtt;
                let failures = if params.loss_prob == 0.0 {
                    0
                } else {
                    Geometric::new(1.0 - params.loss_prob).expect("p in (0,1]").sample(r)
                };
                once * (failures + 1) as f64
            }
        }
    };

    let mut per_upload = Vec::new();
    let mut saturated = false;
    let (bytes, reported): (u64, Vec<ReportedTarget>) = match params.mode {
        Mode::Co => {
            let bitrate = params.video_bitrate.ok_or_else(|| CommError::Config("CO mode requires video_bitrate".into()))?;
            saturated = bitrate > params.uplink_bandwidth;
            for i in 0..trace.n_frames {
                let t = i as f64 / params.frame_rate;
                let t_comm = params.stream_latency + stream_backlog(bitrate, params.uplink_bandwidth, t);
                per_upload.push(UploadLatency { frame_index: i, timestamp: t, t_comm, t_infer, e2el: e2el(params, t_comm, t_infer) });
            }
            ((bitrate * duration / 8.0).round() as u64, trace.reported_all.clone())
        }
        Mode::Ecc => {
            for &(f, ts) in &trace.result_frames {
                let t_comm = message_time(&mut rng);
                per_upload.push(UploadLatency { frame_index: f, timestamp: ts, t_comm, t_infer, e2el: e2el(params, t_comm, t_infer) });
            }
            (per_upload.len() as u64 * params.message_bytes, trace.reported_all.clone())
        }
        Mode::EccPlus => {
            // keyframes on the same frame share one message
            let mut frames: BTreeMap<u64, f64> = BTreeMap::new();
            for k in &trace.keyframes {
                frames.entry(k.frame_index).or_insert(k.upload_timestamp);
            }
            for (&f, &ts) in &frames {
                let t_comm = message_time(&mut rng);
                per_upload.push(UploadLatency { frame_index: f, timestamp: ts, t_comm, t_infer, e2el: e2el(params, t_comm, t_infer) });
            }
            let reported = trace.keyframes.iter().map(ReportedTarget::from).collect();
            (per_upload.len() as u64 * params.message_bytes, reported)
        }
    };

    let counts = accuracy(&dedup_by_track(&reported), labels)?;
    let uploads = per_upload.len() as u64;
    let mean_e2el = if uploads == 0 { 0.0 } else { per_upload.iter().map(|u| u.e2el).sum::<f64>() / uploads as f64 };

    Ok(LatencyReport {
        mode: params.mode,
        uploads,
        mean_e2el,
        nominal_e2el: params.nominal_e2el(),
        accuracy: counts.ratio(),
        true_positives: counts.tp,
        false_reports: counts.fn_,
        reported_targets: counts.tp + counts.fn_,
        total_uplink_bytes: bytes,
        energy_comm: params.power_comm * duration,
        energy_infer: params.power_infer * duration,
        duration,
        saturated,
        per_upload,
    })
}

// A track reported more than once counts once.
fn dedup_by_track(r: &[ReportedTarget]) -> Vec<ReportedTarget> {
    let mut seen = BTreeSet::new();
    r.iter().filter(|t| seen.insert(t.track_id)).copied().collect()
}

/// CO → `other` reduction of mean E2EL, as a fraction.
pub fn e2el_reduction(co: &LatencyReport, other: &LatencyReport) -> f64 {
    1.0 - other.effective_e2el() / co.effective_e2el()
}
