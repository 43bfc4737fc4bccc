//! Seeded synthetic inspection missions.
//!
//! A camera drifts over a strip of ground objects. Camera acceleration is
//! piecewise constant with mean reversion towards a cruise velocity, and the
//! IMU reports exactly the image-plane acceleration divided by `imu_scale`,
//! so the tracker's control model matches the scene. Detections carry pixel
//! noise, and transient clutter appears away from the real objects.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::commsim::GroundTruthLabel;
use crate::error::InvalidInput;
use crate::types::{BoundingBox, ClassId, Detection, FrameRecord, ImuSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    /// s
    pub duration: f64,
    pub frame_rate: f64,
    pub image_width: f64,
    pub image_height: f64,
    /// Antenna objects, decoys included.
    pub n_targets: usize,
    /// Antennas that are not interference sources.
    pub n_decoys: usize,
    /// Large non-antenna objects, wider than `oversize_min` px.
    pub n_oversized: usize,
    pub oversize_min: f64,
    /// Minimum distance between object centers, px.
    pub min_separation: f64,
    /// Cruise velocity along x, px/s.
    pub cruise_speed: f64,
    /// Std of the random acceleration component, px/s².
    pub accel_std: f64,
    /// Pull towards cruise velocity, 1/s.
    pub reversion: f64,
    /// Px per m, matching the tracker configuration.
    pub imu_scale: f64,
    /// Position and size noise, px.
    pub noise_px: f64,
    /// Chance that an object goes undetected on a frame.
    pub dropout_prob: f64,
    /// Expected new clutter detections per frame.
    pub clutter_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            duration: 40.0,
            frame_rate: 30.0,
            image_width: 1920.0,
            image_height: 1080.0,
            n_targets: 22,
            n_decoys: 2,
            n_oversized: 2,
            oversize_min: 150.0,
            min_separation: 260.0,
            cruise_speed: 150.0,
            accel_std: 60.0,
            reversion: 0.8,
            imu_scale: 100.0,
            noise_px: 1.0,
            dropout_prob: 0.0,
            clutter_rate: 0.3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), InvalidInput> {
        let positive = [
            ("duration", self.duration),
            ("frame_rate", self.frame_rate),
            ("image_width", self.image_width),
            ("image_height", self.image_height),
            ("imu_scale", self.imu_scale),
            ("min_separation", self.min_separation),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(InvalidInput::new(format!("synth.{name} = {v} must be positive")));
            }
        }
        for (name, v) in [
            ("noise_px", self.noise_px),
            ("accel_std", self.accel_std),
            ("reversion", self.reversion),
            ("clutter_rate", self.clutter_rate),
            ("cruise_speed", self.cruise_speed),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(InvalidInput::new(format!("synth.{name} = {v} must be non-negative")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_prob) {
            return Err(InvalidInput::new("synth.dropout_prob must lie in [0, 1)"));
        }
        if self.n_decoys > self.n_targets {
            return Err(InvalidInput::new("synth.n_decoys cannot exceed n_targets"));
        }
        Ok(())
    }

    pub fn n_frames(&self) -> u64 {
        (self.duration * self.frame_rate).round() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundObject {
    pub object_id: u64,
    pub class_id: ClassId,
    /// Ground position in the first frame's image coordinates, px.
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub is_interference: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mission {
    pub frames: Vec<FrameRecord>,
    pub imu: Vec<ImuSample>,
    pub labels: Vec<GroundTruthLabel>,
    pub objects: Vec<GroundObject>,
    /// Camera offset per frame, px.
    pub camera: Vec<(f64, f64)>,
}

// Camera trajectory with per-frame constant acceleration; returns offsets and
// accelerations (the acceleration of frame k acts over (k−1, k]).
fn camera_path(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let n = cfg.n_frames() as usize;
    let dt = 1.0 / cfg.frame_rate;
    let jitter = Normal::new(0.0, cfg.accel_std.max(f64::MIN_POSITIVE)).expect("finite std");
    let mut c = (0.0, 0.0);
    let mut v = (cfg.cruise_speed, 0.0);
    let mut a_rand = (0.0, 0.0);
    let mut hold = 0usize;
    let mut offsets = Vec::with_capacity(n);
    let mut accels = Vec::with_capacity(n);
    for k in 0..n {
        if k == 0 {
            offsets.push(c);
            accels.push((0.0, 0.0));
            continue;
        }
        if hold == 0 {
            a_rand = if cfg.accel_std > 0.0 { (jitter.sample(rng), jitter.sample(rng)) } else { (0.0, 0.0) };
            hold = rng.random_range((cfg.frame_rate * 0.5) as usize..=(cfg.frame_rate * 1.5) as usize).max(1);
        }
        hold -= 1;
        let a = (
            a_rand.0 + cfg.reversion * (cfg.cruise_speed - v.0),
            a_rand.1 + cfg.reversion * (0.0 - v.1) - cfg.reversion * 0.2 * c.1,
        );
        c = (c.0 + v.0 * dt + 0.5 * a.0 * dt * dt, c.1 + v.1 * dt + 0.5 * a.1 * dt * dt);
        v = (v.0 + a.0 * dt, v.1 + a.1 * dt);
        offsets.push(c);
        accels.push(a);
    }
    (offsets, accels)
}

fn place_objects(cfg: &SynthConfig, rng: &mut ChaCha8Rng, camera: &[(f64, f64)]) -> Vec<GroundObject> {
    let (min_x, max_x) = camera.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.0), hi.max(c.0)));
    let (min_y, max_y) = camera.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.1), hi.max(c.1)));
    let margin = 120.0;
    let x_range = (min_x + margin, max_x + cfg.image_width - margin);
    // rows that stay in view for the whole pass, so nothing drifts out and back
    let y_range = if max_y + margin < min_y + cfg.image_height - margin {
        (max_y + margin, min_y + cfg.image_height - margin)
    } else {
        (min_y + margin, max_y + cfg.image_height - margin)
    };

    let total = cfg.n_targets + cfg.n_oversized;
    let mut out: Vec<GroundObject> = Vec::with_capacity(total);
    let mut sep = cfg.min_separation;
    let mut tries = 0;
    while out.len() < total {
        let x = rng.random_range(x_range.0..x_range.1.max(x_range.0 + 1.0));
        let y = rng.random_range(y_range.0..y_range.1.max(y_range.0 + 1.0));
        tries += 1;
        if tries % 5000 == 0 {
            // area too small for the requested spacing
            sep *= 0.9;
        }
        if out.iter().any(|o| (o.x - x).hypot(o.y - y) < sep) {
            continue;
        }
        let i = out.len();
        let (class_id, w, h) = if i < cfg.n_targets {
            match i % 3 {
                0 => (ClassId::YAGI, rng.random_range(100.0..=112.0), rng.random_range(100.0..=112.0)),
                1 => (ClassId::PLATE_LOG, rng.random_range(50.0..=90.0), rng.random_range(50.0..=90.0)),
                _ => (ClassId::PATCH, rng.random_range(30.0..=60.0), rng.random_range(30.0..=60.0)),
            }
        } else {
            let w = rng.random_range(cfg.oversize_min + 10.0..=cfg.oversize_min + 70.0);
            (ClassId::YAGI, w, rng.random_range(cfg.oversize_min + 10.0..=cfg.oversize_min + 70.0))
        };
        let is_interference = i < cfg.n_targets - cfg.n_decoys;
        out.push(GroundObject { object_id: i as u64, class_id, x, y, w, h, is_interference });
    }
    out
}

struct Clutter {
    bbox: BoundingBox,
    score: f64,
    frames_left: u32,
}

/// Generates one mission from `cfg`.
pub fn generate(cfg: &SynthConfig) -> Result<Mission, InvalidInput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (camera, accels) = camera_path(cfg, &mut rng);
    let objects = place_objects(cfg, &mut rng, &camera);
    let noise = Normal::new(0.0, cfg.noise_px.max(f64::MIN_POSITIVE)).expect("finite std");
    let jitter = |rng: &mut ChaCha8Rng| if cfg.noise_px > 0.0 { noise.sample(rng) } else { 0.0 };
    let scores: Vec<f64> = objects.iter().map(|_| rng.random_range(0.6..0.95)).collect();

    let mut frames = Vec::with_capacity(camera.len());
    let mut imu = Vec::with_capacity(camera.len());
    let mut labels = Vec::new();
    let mut clutter: Vec<Clutter> = Vec::new();

    for (k, (&(cx, cy), &(ax, ay))) in camera.iter().zip(&accels).enumerate() {
        let k = k as u64;
        // image coordinates move opposite to the camera
        imu.push(ImuSample { frame_index: k, ax: -ax / cfg.imu_scale, ay: -ay / cfg.imu_scale, az: 0.0 });

        let mut dets: Vec<(Detection, bool, Option<u64>)> = Vec::new();
        let mut visible = Vec::new();
        for (o, &s) in objects.iter().zip(&scores) {
            let (ix, iy) = (o.x - cx, o.y - cy);
            if !(0.0..=cfg.image_width).contains(&ix) || !(0.0..=cfg.image_height).contains(&iy) {
                continue;
            }
            visible.push((ix, iy));
            if cfg.dropout_prob > 0.0 && rng.random::<f64>() < cfg.dropout_prob {
                continue;
            }
            let bbox = BoundingBox {
                cx: ix + jitter(&mut rng),
                cy: iy + jitter(&mut rng),
                w: (o.w + jitter(&mut rng)).max(1.0),
                h: (o.h + jitter(&mut rng)).max(1.0),
            };
            let score = (s + 0.02 * jitter(&mut rng) / cfg.noise_px.max(1.0)).clamp(0.0, 1.0);
            dets.push((Detection { bbox, score, class_id: o.class_id }, o.is_interference, Some(o.object_id)));
        }

        clutter.retain_mut(|c| {
            c.frames_left -= 1;
            c.frames_left > 0
        });
        let mut budget = cfg.clutter_rate;
        while budget > 0.0 {
            if rng.random::<f64>() < budget.min(1.0) {
                let x = rng.random_range(0.0..cfg.image_width);
                let y = rng.random_range(0.0..cfg.image_height);
                if visible.iter().all(|&(vx, vy): &(f64, f64)| (vx - x).hypot(vy - y) > 160.0) {
                    let side = rng.random_range(20.0..80.0);
                    clutter.push(Clutter {
                        bbox: BoundingBox { cx: x, cy: y, w: side, h: side * rng.random_range(0.7..1.3) },
                        score: rng.random_range(0.1..0.7),
                        frames_left: rng.random_range(1..=2),
                    });
                }
            }
            budget -= 1.0;
        }
        for c in &clutter {
            let bbox = BoundingBox { cx: c.bbox.cx + jitter(&mut rng), cy: c.bbox.cy + jitter(&mut rng), ..c.bbox };
            dets.push((Detection { bbox, score: c.score, class_id: ClassId::PATCH }, false, None));
        }

        dets.shuffle(&mut rng);
        for (i, (_, is_interference, object_id)) in dets.iter().enumerate() {
            labels.push(GroundTruthLabel {
                frame_index: k,
                detection_index: i,
                is_interference: *is_interference,
                object_id: *object_id,
            });
        }
        frames.push(FrameRecord {
            frame_index: k,
            timestamp: k as f64 / cfg.frame_rate,
            detections: dets.into_iter().map(|d| d.0).collect(),
        });
    }

    Ok(Mission { frames, imu, labels, objects, camera })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let cfg = SynthConfig { duration: 5.0, ..Default::default() };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.frames, b.frames);
        assert_eq!(a.imu, b.imu);
        let c = generate(&SynthConfig { seed: 9, ..cfg }).unwrap();
        assert_ne!(a.frames, c.frames);
    }

    #[test]
    fn records_are_consistent() {
        let cfg = SynthConfig::default();
        let m = generate(&cfg).unwrap();
        assert_eq!(m.frames.len() as u64, cfg.n_frames());
        assert_eq!(m.imu.len(), m.frames.len());
        crate::types::validate_sequence(&m.frames).unwrap();
        let n_dets: usize = m.frames.iter().map(|f| f.detections.len()).sum();
        assert_eq!(m.labels.len(), n_dets);
        assert_eq!(m.objects.iter().filter(|o| o.is_interference).count(), 20);
        assert!(m.objects.iter().filter(|o| o.w > cfg.oversize_min).count() >= cfg.n_oversized);
    }

    #[test]
    fn imu_reproduces_image_motion() {
        let cfg = SynthConfig { duration: 3.0, ..Default::default() };
        let m = generate(&cfg).unwrap();
        let dt = 1.0 / cfg.frame_rate;
        // second difference of the image position equals the IMU acceleration
        // averaged over the two intervals
        for k in 2..m.camera.len() {
            let img = |i: usize| -m.camera[i].0;
            let d2 = (img(k) - 2.0 * img(k - 1) + img(k - 2)) / (dt * dt);
            let a = cfg.imu_scale * 0.5 * (m.imu[k].ax + m.imu[k - 1].ax);
            assert!((d2 - a).abs() < 1e-6, "frame {k}: {d2} vs {a}");
        }
    }

    #[test]
    fn every_object_appears() {
        let m = generate(&SynthConfig::default()).unwrap();
        for o in &m.objects {
            assert!(m.labels.iter().any(|l| l.object_id == Some(o.object_id)), "object {} never seen", o.object_id);
        }
    }
}
