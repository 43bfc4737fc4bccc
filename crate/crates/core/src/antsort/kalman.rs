//! Constant-velocity box filter with an optional acceleration control input.
//!
//! State: `[cx, cy, w, h, vcx, vcy, vw, vh]`, positions in pixels and
//! velocities in pixels per second. Measurement: `[cx, cy, w, h]`.

use nalgebra::{SMatrix, SVector};

use super::TrackerConfig;
use crate::types::{BoundingBox, ImuSample};

pub type StateVector = SVector<f64, 8>;
pub type StateMatrix = SMatrix<f64, 8, 8>;
pub type Measurement = SVector<f64, 4>;
type MeasMatrix = SMatrix<f64, 4, 8>;

// Noise weights relative to box height (per frame at dt = 1).
const STD_WEIGHT_POSITION: f64 = 1.0 / 20.0;
const STD_WEIGHT_VELOCITY: f64 = 1.0 / 160.0;

/// Extents never shrink below this after an update.
pub const MIN_EXTENT: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct TrackState {
    pub mean: StateVector,
    pub covariance: StateMatrix,
}

impl TrackState {
    /// New state centered on a detection with zero velocity.
    pub fn initiate(bbox: &BoundingBox, cfg: &TrackerConfig) -> Self {
        let mean = StateVector::from_column_slice(&[bbox.cx, bbox.cy, bbox.w, bbox.h, 0.0, 0.0, 0.0, 0.0]);
        let h = noise_height(bbox.h);
        let sp = 2.0 * STD_WEIGHT_POSITION * h;
        let sv = 10.0 * STD_WEIGHT_VELOCITY * h / cfg.dt;
        let diag = StateVector::from_column_slice(&[
            sp * sp,
            sp * sp,
            sp * sp,
            sp * sp,
            sv * sv,
            sv * sv,
            sv * sv,
            sv * sv,
        ]);
        Self { mean, covariance: StateMatrix::from_diagonal(&diag) }
    }

    pub fn bbox(&self) -> BoundingBox {
        BoundingBox {
            cx: self.mean[0],
            cy: self.mean[1],
            w: self.mean[2].max(MIN_EXTENT),
            h: self.mean[3].max(MIN_EXTENT),
        }
    }

    /// `mean ← F·mean + B·u`, `P ← F·P·Fᵀ + Q`.
    ///
    /// A `None` or all-zero control leaves the constant-velocity prediction
    /// untouched.
    pub fn predict(&mut self, control: Option<&StateVector>, cfg: &TrackerConfig) {
        let f = transition(cfg.dt);
        let q = process_noise(self.mean[3], cfg);
        let mut mean = f * self.mean;
        if let Some(bu) = control {
            if bu.iter().any(|c| *c != 0.0) {
                mean += bu;
            }
        }
        self.mean = mean;
        self.covariance = symmetrize(f * self.covariance * f.transpose() + q);
    }

    /// Kalman measurement update; posterior covariance in Joseph form.
    pub fn update(&mut self, z: &Measurement, cfg: &TrackerConfig) {
        let h = measurement_matrix();
        let r = measurement_noise(self.mean[3], cfg);
        let s = h * self.covariance * h.transpose() + r;
        let pht = self.covariance * h.transpose();
        // K = P Hᵀ S⁻¹, solved as S Kᵀ = H P (S and P symmetric).
        let gain: SMatrix<f64, 8, 4> = match s.cholesky() {
            Some(ch) => ch.solve(&pht.transpose()).transpose(),
            None => pht * s.try_inverse().unwrap_or_else(SMatrix::<f64, 4, 4>::zeros),
        };
        let innovation = z - h * self.mean;
        self.mean += gain * innovation;
        let i_kh = StateMatrix::identity() - gain * h;
        let joseph = i_kh * self.covariance * i_kh.transpose() + gain * r * gain.transpose();
        self.covariance = symmetrize(joseph);
        self.mean[2] = self.mean[2].max(MIN_EXTENT);
        self.mean[3] = self.mean[3].max(MIN_EXTENT);
    }
}

pub fn transition(dt: f64) -> StateMatrix {
    let mut f = StateMatrix::identity();
    for i in 0..4 {
        f[(i, i + 4)] = dt;
    }
    f
}

fn measurement_matrix() -> MeasMatrix {
    let mut h = MeasMatrix::zeros();
    for i in 0..4 {
        h[(i, i)] = 1.0;
    }
    h
}

fn noise_height(h: f64) -> f64 {
    h.abs().max(1.0)
}

pub fn process_noise(height: f64, cfg: &TrackerConfig) -> StateMatrix {
    let h = noise_height(height);
    let sp = cfg.process_noise * STD_WEIGHT_POSITION * h;
    let sv = cfg.process_noise * STD_WEIGHT_VELOCITY * h / cfg.dt;
    let diag = StateVector::from_column_slice(&[
        sp * sp,
        sp * sp,
        sp * sp,
        sp * sp,
        sv * sv,
        sv * sv,
        sv * sv,
        sv * sv,
    ]);
    StateMatrix::from_diagonal(&diag)
}

pub fn measurement_noise(height: f64, cfg: &TrackerConfig) -> SMatrix<f64, 4, 4> {
    let s = cfg.measurement_noise * STD_WEIGHT_POSITION * noise_height(height);
    SMatrix::<f64, 4, 4>::from_diagonal_element(s * s)
}

/// `B·u` for one frame interval: `½·s·a·dt²` on position and `s·a·dt` on
/// velocity, with `s` the image-plane gain in pixels per meter.
///
/// `az` drives the size components only when `imu_z_to_size` is set.
pub fn imu_control(imu: &ImuSample, cfg: &TrackerConfig) -> StateVector {
    let dt = cfg.dt;
    let s = cfg.imu_scale;
    let pos = |a: f64| 0.5 * s * a * dt * dt;
    let vel = |a: f64| s * a * dt;
    let az = if cfg.imu_z_to_size { imu.az } else { 0.0 };
    StateVector::from_column_slice(&[
        pos(imu.ax),
        pos(imu.ay),
        pos(az),
        pos(az),
        vel(imu.ax),
        vel(imu.ay),
        vel(az),
        vel(az),
    ])
}

fn symmetrize(m: StateMatrix) -> StateMatrix {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(dt: f64) -> TrackerConfig {
        TrackerConfig { dt, ..TrackerConfig::default() }
    }

    fn state(mean: [f64; 8], cfg: &TrackerConfig) -> TrackState {
        let mut s = TrackState::initiate(&BoundingBox { cx: 0.0, cy: 0.0, w: 10.0, h: 10.0 }, cfg);
        s.mean = StateVector::from_column_slice(&mean);
        s
    }

    #[test]
    fn zero_control_is_plain_constant_velocity() {
        let c = cfg(1.0);
        let mut s = state([0.0, 0.0, 10.0, 10.0, 2.0, 0.0, 0.0, 0.0], &c);
        s.predict(Some(&imu_control(&ImuSample::zero(0), &c)), &c);
        assert_eq!((s.mean[0], s.mean[1]), (2.0, 0.0));
        let mut plain = state([0.0, 0.0, 10.0, 10.0, 2.0, 0.0, 0.0, 0.0], &c);
        plain.predict(None, &c);
        assert_eq!(plain, s);
    }

    #[test]
    fn constant_acceleration_matches_kinematics() {
        let c = TrackerConfig { imu_scale: 10.0, ..cfg(0.1) };
        let mut s = state([0.0, 0.0, 10.0, 10.0, 0.0, 0.0, 0.0, 0.0], &c);
        let imu = ImuSample { frame_index: 0, ax: 1.0, ay: 0.0, az: 0.0 };
        for _ in 0..10 {
            s.predict(Some(&imu_control(&imu, &c)), &c);
        }
        // ½·(10 px/m · 1 m/s²)·(1 s)²
        assert!((s.mean[0] - 5.0).abs() < 1e-9);
        assert!((s.mean[4] - 10.0).abs() < 1e-9);
        assert_eq!(s.mean[1], 0.0);
    }

    #[test]
    fn z_axis_ignored_unless_enabled() {
        let c = cfg(0.1);
        let imu = ImuSample { frame_index: 0, ax: 0.0, ay: 0.0, az: 3.0 };
        assert!(imu_control(&imu, &c).iter().all(|v| *v == 0.0));
        let c = TrackerConfig { imu_z_to_size: true, ..c };
        let u = imu_control(&imu, &c);
        assert!(u[2] > 0.0 && u[3] > 0.0 && u[6] > 0.0 && u[7] > 0.0);
        assert_eq!(u[0], 0.0);
    }

    #[test]
    fn predict_grows_trace() {
        let c = cfg(1.0 / 30.0);
        let mut s = state([5.0, 5.0, 20.0, 30.0, 1.0, 1.0, 0.0, 0.0], &c);
        for _ in 0..20 {
            let before = s.covariance.trace();
            s.predict(None, &c);
            assert!(s.covariance.trace() > before);
        }
    }

    #[test]
    fn zero_innovation_keeps_mean() {
        let c = cfg(1.0);
        let mut s = state([3.0, 4.0, 10.0, 12.0, 1.0, -1.0, 0.0, 0.0], &c);
        s.predict(None, &c);
        let before = s.mean;
        let z = Measurement::new(before[0], before[1], before[2], before[3]);
        s.update(&z, &c);
        for i in 0..4 {
            assert!((s.mean[i] - before[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn update_contracts_measured_block() {
        let c = cfg(1.0 / 30.0);
        let mut s = state([100.0, 80.0, 40.0, 50.0, 10.0, 0.0, 0.0, 0.0], &c);
        s.predict(None, &c);
        let prior = s.covariance;
        s.update(&Measurement::new(104.0, 79.0, 41.0, 52.0), &c);
        let diff = (prior - s.covariance).fixed_view::<4, 4>(0, 0).into_owned();
        let eig = diff.symmetric_eigenvalues();
        assert!(eig.iter().all(|e| *e >= -1e-9), "{eig:?}");
    }
}
