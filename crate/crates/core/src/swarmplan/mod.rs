//! Multi-UAV coverage planning with particle swarm optimisation.
//!
//! Every UAV launches from and returns to the area center and flies a fixed
//! number of free waypoints in between. The objective trades path length
//! against uncovered area, base-station handovers, link quality, co-channel
//! interference and a pairwise collision potential.

mod coverage;
mod objective;
mod pso;
mod radio;

pub use coverage::{
    flown_samples, handovers, nearest_station, time_to_coverage, uncovered_area, uncovered_area_points, CoverageGrid,
};
pub use objective::{evaluate, objective, path_length, ObjectiveParts};
pub use pso::{pso_optimize, PlanResult};
pub use radio::{collision_potential, fspl, sinr, SPEED_OF_LIGHT};

use serde::{Deserialize, Serialize};

use crate::error::PlanError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaSpec {
    /// Side of the square area, m.
    pub l: f64,
    /// Grid cell side, m.
    pub delta: f64,
    /// Coverage radius, m.
    pub r: f64,
}

impl AreaSpec {
    pub fn validate(&self) -> Result<(), PlanError> {
        let ok = self.l > 0.0 && self.delta > 0.0 && self.delta <= self.l && self.r > 0.0;
        if !ok || ![self.l, self.delta, self.r].iter().all(|v| v.is_finite()) {
            return Err(PlanError::Config(format!(
                "area needs L > 0, 0 < delta <= L and R > 0 (got L={}, delta={}, R={})",
                self.l, self.delta, self.r
            )));
        }
        let n = (self.l / self.delta).round();
        if (n * self.delta - self.l).abs() > 1e-9 * self.l {
            return Err(PlanError::Config(format!("L = {} is not a multiple of delta = {}", self.l, self.delta)));
        }
        Ok(())
    }

    /// Cells per side.
    pub fn cells_per_side(&self) -> usize {
        (self.l / self.delta).round() as usize
    }

    pub fn cell_area(&self) -> f64 {
        self.delta * self.delta
    }

    pub fn center(&self) -> (f64, f64) {
        (self.l / 2.0, self.l / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseStation {
    pub x: f64,
    pub y: f64,
    /// Hz
    pub carrier_freq: f64,
}

impl BaseStation {
    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(PlanError::Config("station position must be finite".into()));
        }
        // below c/4π the path loss at 1 m is not positive
        if !(self.carrier_freq > SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI)) || !self.carrier_freq.is_finite() {
            return Err(PlanError::Config(format!("carrier_freq = {} Hz is too low", self.carrier_freq)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub x: f64,
    pub y: f64,
    /// Heading of the leg leaving this waypoint, rad.
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UavPath {
    pub waypoints: Vec<Waypoint>,
}

impl UavPath {
    /// Builds a closed path center → `free` → center with leg headings.
    pub fn closed(center: (f64, f64), free: &[(f64, f64)]) -> Self {
        let mut pts = Vec::with_capacity(free.len() + 2);
        pts.push(center);
        pts.extend_from_slice(free);
        pts.push(center);
        Self::from_points(&pts)
    }

    pub fn from_points(pts: &[(f64, f64)]) -> Self {
        let mut waypoints: Vec<Waypoint> = pts.iter().map(|&(x, y)| Waypoint { x, y, theta: 0.0 }).collect();
        for i in 0..waypoints.len().saturating_sub(1) {
            let (a, b) = (waypoints[i], waypoints[i + 1]);
            waypoints[i].theta = (b.y - a.y).atan2(b.x - a.x);
        }
        if waypoints.len() >= 2 {
            let n = waypoints.len();
            waypoints[n - 1].theta = waypoints[n - 2].theta;
        }
        Self { waypoints }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.waypoints.iter().map(|w| (w.x, w.y))
    }
}

/// How coverage is measured inside the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    /// Only waypoints cover cells.
    Waypoints,
    /// The flown polyline, sampled every `uav_speed · sample_interval` m.
    Trajectory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub n_uavs: usize,
    /// Free waypoints per UAV, excluding launch and return.
    pub n_waypoints: usize,
    pub swarm_size: usize,
    pub iterations: usize,
    pub omega: f64,
    pub c1: f64,
    pub c2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    /// Flip the sign of the path-loss term so that staying near stations is
    /// rewarded.
    pub prefer_near_stations: bool,
    pub collision_c: f64,
    pub collision_q: f64,
    /// Distance floor for the collision potential inside the objective, m.
    pub min_separation: f64,
    /// m/s
    pub uav_speed: f64,
    pub battery_wh: f64,
    pub flight_power_w: f64,
    /// Objective penalty per metre flown beyond the endurance.
    pub endurance_penalty: f64,
    /// W
    pub tx_power: f64,
    pub antenna_gain: f64,
    /// Noise power, W.
    pub noise_density: f64,
    pub coverage: CoverageMode,
    /// s
    pub sample_interval: f64,
    /// Velocity bound as a fraction of L.
    pub max_velocity_frac: f64,
    pub rng_seed: u64,
    /// Evaluate particles on the rayon pool. Results do not depend on it.
    pub parallel: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_uavs: 4,
            n_waypoints: 20,
            swarm_size: 30,
            iterations: 300,
            omega: 0.5,
            c1: 1.5,
            c2: 1.5,
            alpha1: 1.0,
            alpha2: 10.0,
            alpha3: 1.0,
            alpha4: 0.0,
            alpha5: 1.0,
            prefer_near_stations: false,
            collision_c: 1.0,
            collision_q: 2.0,
            min_separation: 0.1,
            uav_speed: 2.0,
            battery_wh: 100.0,
            flight_power_w: 100.0,
            endurance_penalty: 1e3,
            tx_power: 0.1,
            antenna_gain: 1.0,
            noise_density: 1e-13,
            coverage: CoverageMode::Trajectory,
            sample_interval: 1.0,
            max_velocity_frac: 0.25,
            rng_seed: 0,
            parallel: true,
        }
    }
}

impl PlannerConfig {
    /// Maximum path length on one battery, m.
    pub fn endurance(&self) -> f64 {
        self.uav_speed * self.battery_wh * 3600.0 / self.flight_power_w
    }

    /// Spacing of trajectory samples, m.
    pub fn sample_spacing(&self) -> f64 {
        self.uav_speed * self.sample_interval
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: String| Err(PlanError::Config(m));
        if self.n_uavs == 0 || self.swarm_size == 0 || self.iterations == 0 {
            return bad("n_uavs, swarm_size and iterations must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad(format!("omega = {} must lie in [0, 1]", self.omega));
        }
        for (name, v) in [
            ("c1", self.c1),
            ("c2", self.c2),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("alpha3", self.alpha3),
            ("alpha4", self.alpha4),
            ("alpha5", self.alpha5),
            ("collision_c", self.collision_c),
            ("collision_q", self.collision_q),
            ("endurance_penalty", self.endurance_penalty),
            ("tx_power", self.tx_power),
            ("antenna_gain", self.antenna_gain),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be a non-negative number"));
            }
        }
        for (name, v) in [
            ("min_separation", self.min_separation),
            ("uav_speed", self.uav_speed),
            ("battery_wh", self.battery_wh),
            ("flight_power_w", self.flight_power_w),
            ("noise_density", self.noise_density),
            ("sample_interval", self.sample_interval),
            ("max_velocity_frac", self.max_velocity_frac),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be positive"));
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_inputs(area: &AreaSpec, stations: &[BaseStation]) -> Result<(), PlanError> {
    area.validate()?;
    if stations.is_empty() {
        return Err(PlanError::Config("at least one base station is required".into()));
    }
    for s in stations {
        s.validate()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_validation() {
        assert!(AreaSpec { l: 600.0, delta: 15.0, r: 15.0 }.validate().is_ok());
        assert!(AreaSpec { l: 600.0, delta: 14.0, r: 15.0 }.validate().is_err());
        assert!(AreaSpec { l: 10.0, delta: 20.0, r: 1.0 }.validate().is_err());
        assert!(AreaSpec { l: 10.0, delta: 5.0, r: 0.0 }.validate().is_err());
        assert_eq!(AreaSpec { l: 600.0, delta: 15.0, r: 15.0 }.cells_per_side(), 40);
    }

    #[test]
    fn closed_path_headings() {
        let p = UavPath::closed((0.0, 0.0), &[(1.0, 0.0), (1.0, 1.0)]);
        assert_eq!(p.waypoints.len(), 4);
        assert_eq!(p.waypoints[0].theta, 0.0);
        assert!((p.waypoints[1].theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(p.waypoints[3].theta, p.waypoints[2].theta);
    }

    #[test]
    fn config_validation() {
        let c = PlannerConfig::default();
        assert!(c.validate().is_ok());
        assert!(PlannerConfig { omega: 1.5, ..c.clone() }.validate().is_err());
        assert!(PlannerConfig { iterations: 0, ..c.clone() }.validate().is_err());
        assert!(PlannerConfig { alpha2: -1.0, ..c.clone() }.validate().is_err());
        assert_eq!(c.endurance(), 7200.0);
    }

    #[test]
    fn station_frequency_floor() {
        assert!(BaseStation { x: 0.0, y: 0.0, carrier_freq: 3.5e9 }.validate().is_ok());
        assert!(BaseStation { x: 0.0, y: 0.0, carrier_freq: 1e6 }.validate().is_err());
    }
}
