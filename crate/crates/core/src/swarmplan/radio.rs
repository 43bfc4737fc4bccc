use std::f64::consts::PI;

use super::{BaseStation, PlannerConfig};
use crate::error::PlanError;

/// m/s
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Free-space path loss in dB.
pub fn fspl(d: f64, f: f64) -> Result<f64, PlanError> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(PlanError::Domain(format!("distance {d} m must be positive")));
    }
    if !(f > 0.0) || !f.is_finite() {
        return Err(PlanError::Domain(format!("frequency {f} Hz must be positive")));
    }
    Ok(20.0 * d.log10() + 20.0 * f.log10() + 20.0 * (4.0 * PI / SPEED_OF_LIGHT).log10())
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Received-power factor `P·G·(λ/4πd)²`.
fn friis(p: f64, g: f64, lambda: f64, d: f64) -> f64 {
    let r = lambda / (4.0 * PI * d);
    p * g * r * r
}

/// SINR of UAV `j` served by its nearest station, with every other UAV
/// transmitting on the same channel.
///
/// Distances below 1 m are treated as 1 m.
pub fn sinr(j: usize, uavs: &[(f64, f64)], stations: &[BaseStation], cfg: &PlannerConfig) -> Result<f64, PlanError> {
    let pos = *uavs.get(j).ok_or_else(|| PlanError::Domain(format!("no UAV {j}")))?;
    let k = super::nearest_station(pos, stations).ok_or_else(|| PlanError::Domain("no base stations".into()))?;
    let s = &stations[k];
    let lambda = SPEED_OF_LIGHT / s.carrier_freq;
    let signal = friis(cfg.tx_power, cfg.antenna_gain, lambda, dist(pos, (s.x, s.y)).max(1.0));
    let interference: f64 = uavs
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j)
        .map(|(_, &q)| friis(cfg.tx_power, cfg.antenna_gain, lambda, dist(pos, q).max(1.0)))
        .sum();
    Ok(signal / (interference + cfg.noise_density))
}

/// `Σ_{i<j} C / |p_i − p_j|^q`.
pub fn collision_potential(uavs: &[(f64, f64)], c: f64, q: f64) -> Result<f64, PlanError> {
    let mut v = 0.0;
    for i in 0..uavs.len() {
        for j in i + 1..uavs.len() {
            let d = dist(uavs[i], uavs[j]);
            if d == 0.0 {
                return Err(PlanError::DegenerateGeometry { a: i, b: j });
            }
            v += c / d.powf(q);
        }
    }
    Ok(v)
}

/// Same as [`collision_potential`] with distances floored at `min_sep`.
pub(crate) fn collision_potential_floored(uavs: &[(f64, f64)], c: f64, q: f64, min_sep: f64) -> f64 {
    let mut v = 0.0;
    for i in 0..uavs.len() {
        for j in i + 1..uavs.len() {
            v += c / dist(uavs[i], uavs[j]).max(min_sep).powf(q);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspl_cancels_at_reference_frequency() {
        let f = SPEED_OF_LIGHT / (4.0 * PI);
        assert!(fspl(1.0, f).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fspl_domain() {
        assert!(matches!(fspl(0.0, 1e9), Err(PlanError::Domain(_))));
        assert!(matches!(fspl(-3.0, 1e9), Err(PlanError::Domain(_))));
        assert!(matches!(fspl(10.0, 0.0), Err(PlanError::Domain(_))));
    }

    #[test]
    fn fspl_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let v = fspl(i as f64 * 3.7, 2.4e9).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(fspl(100.0, 5e9).unwrap() > fspl(100.0, 4.9e9).unwrap());
    }

    #[test]
    fn single_uav_sinr_is_snr() {
        let cfg = PlannerConfig::default();
        let st = [BaseStation { x: 0.0, y: 0.0, carrier_freq: 3.5e9 }];
        let got = sinr(0, &[(30.0, 40.0)], &st, &cfg).unwrap();
        let lambda = SPEED_OF_LIGHT / 3.5e9;
        let want = cfg.tx_power * cfg.antenna_gain * (lambda / (4.0 * PI * 50.0)).powi(2) / cfg.noise_density;
        assert!((got / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collision_two_uavs() {
        assert!((collision_potential(&[(0.0, 0.0), (10.0, 0.0)], 1.0, 2.0).unwrap() - 0.01).abs() < 1e-15);
        assert_eq!(
            collision_potential(&[(1.0, 1.0), (5.0, 5.0), (1.0, 1.0)], 1.0, 2.0),
            Err(PlanError::DegenerateGeometry { a: 0, b: 2 })
        );
        assert_eq!(collision_potential(&[(0.0, 0.0)], 1.0, 2.0).unwrap(), 0.0);
    }
}
