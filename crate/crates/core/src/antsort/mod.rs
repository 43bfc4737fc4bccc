//! AntSort: tracking-by-detection with IMU-driven camera motion compensation.
//!
//! Per frame: split detections by score, predict every track with the IMU
//! acceleration as control input (this replaces visual camera-motion
//! estimation), associate in two IoU stages with an optimal assignment,
//! update matched tracks, age out unmatched ones and spawn tentative tracks
//! from the unmatched high-score detections.

mod kalman;
mod tracker;

pub use kalman::{imu_control, StateMatrix, StateVector, TrackState, MIN_EXTENT};
pub use tracker::{associate, Association, MatchedDetection, StepOutput, Track, TrackStatus, Tracker};

use serde::{Deserialize, Serialize};

use crate::error::InvalidInput;

/// How the prediction step accounts for camera motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Compensation {
    /// IMU acceleration enters the prediction as a control input.
    #[default]
    Imu,
    /// Plain constant-velocity prediction; IMU samples are ignored.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Score threshold splitting high- and low-confidence detections.
    pub epsilon: f64,
    /// Minimum IoU for a first-stage (high-score) match.
    pub iou_gate_high: f64,
    /// Minimum IoU for a second-stage match.
    pub iou_gate_low: f64,
    /// Frames a lost track survives without a match.
    pub max_lost_frames: u32,
    /// Matches needed before a tentative track is confirmed.
    pub confirm_hits: u32,
    /// Pixels per meter mapping IMU acceleration onto the image plane.
    pub imu_scale: f64,
    /// Also map `az` onto the width/height rates.
    pub imu_z_to_size: bool,
    /// Seconds per frame.
    pub dt: f64,
    pub process_noise: f64,
    pub measurement_noise: f64,
    pub compensation: Compensation,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            iou_gate_high: 0.3,
            iou_gate_low: 0.2,
            max_lost_frames: 30,
            confirm_hits: 3,
            imu_scale: 100.0,
            imu_z_to_size: false,
            dt: 1.0 / 30.0,
            process_noise: 1.0,
            measurement_noise: 1.0,
            compensation: Compensation::Imu,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), InvalidInput> {
        let unit = |name: &str, v: f64, open: bool| {
            let ok = if open { v > 0.0 && v < 1.0 } else { (0.0..=1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(InvalidInput::new(format!("tracker.{name} = {v} out of range")))
            }
        };
        unit("epsilon", self.epsilon, true)?;
        unit("iou_gate_high", self.iou_gate_high, false)?;
        unit("iou_gate_low", self.iou_gate_low, false)?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(InvalidInput::new(format!("tracker.dt = {} must be positive", self.dt)));
        }
        if !self.imu_scale.is_finite() {
            return Err(InvalidInput::new("tracker.imu_scale must be finite"));
        }
        if !(self.process_noise > 0.0 && self.measurement_noise > 0.0)
            || !self.process_noise.is_finite()
            || !self.measurement_noise.is_finite()
        {
            return Err(InvalidInput::new("tracker noise scales must be positive"));
        }
        if self.confirm_hits == 0 {
            return Err(InvalidInput::new("tracker.confirm_hits must be at least 1"));
        }
        Ok(())
    }
}
