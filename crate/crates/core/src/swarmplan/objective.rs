use serde::{Deserialize, Serialize};

use super::coverage::{flown_samples, handovers, uncovered_area_points};
use super::radio::{collision_potential_floored, fspl, sinr};
use super::{AreaSpec, BaseStation, CoverageMode, PlannerConfig, UavPath};
use crate::error::PlanError;

/// Objective value and its weighted parts. `total` is the sum of every
/// other weighted field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ObjectiveParts {
    pub path_len: f64,
    pub fspl_term: f64,
    pub handover_term: f64,
    pub coverage_term: f64,
    pub sinr_term: f64,
    pub collision_term: f64,
    pub endurance_penalty: f64,
    /// Unweighted uncovered area, m².
    pub uncovered_area: f64,
    pub handovers: usize,
    pub total: f64,
}

/// Polyline length, m.
pub fn path_length(path: &UavPath) -> f64 {
    let w = &path.waypoints;
    w.windows(2).map(|p| (p[1].x - p[0].x).hypot(p[1].y - p[0].y)).sum()
}

/// Per-waypoint mean of `Σ_k 1/FSPL` over all stations.
fn inverse_path_loss(path: &UavPath, stations: &[BaseStation]) -> Result<f64, PlanError> {
    if path.waypoints.is_empty() {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for (x, y) in path.points() {
        for s in stations {
            acc += 1.0 / fspl((x - s.x).hypot(y - s.y).max(1.0), s.carrier_freq)?;
        }
    }
    Ok(acc / path.waypoints.len() as f64)
}

fn coverage_points(paths: &[UavPath], cfg: &PlannerConfig) -> Vec<(f64, f64)> {
    match cfg.coverage {
        CoverageMode::Waypoints => paths.iter().flat_map(|p| p.points()).collect(),
        CoverageMode::Trajectory => paths.iter().flat_map(|p| flown_samples(p, cfg.sample_spacing())).collect(),
    }
}

/// The base objective: for each UAV, path length plus weighted path-loss,
/// handover and uncovered-area terms. The uncovered area enters once per
/// UAV.
pub fn objective(
    paths: &[UavPath],
    area: &AreaSpec,
    stations: &[BaseStation],
    cfg: &PlannerConfig,
) -> Result<(f64, ObjectiveParts), PlanError> {
    let p = base_parts(paths, area, stations, cfg)?;
    Ok((p.total, p))
}

fn base_parts(
    paths: &[UavPath],
    area: &AreaSpec,
    stations: &[BaseStation],
    cfg: &PlannerConfig,
) -> Result<ObjectiveParts, PlanError> {
    let sign = if cfg.prefer_near_stations { -1.0 } else { 1.0 };
    let unc = uncovered_area_points(coverage_points(paths, cfg), area);
    let mut p = ObjectiveParts { uncovered_area: unc, ..Default::default() };
    for path in paths {
        let s = handovers(path, stations);
        p.path_len += path_length(path);
        p.fspl_term += sign * cfg.alpha1 * inverse_path_loss(path, stations)?;
        p.handover_term += cfg.alpha2 * s as f64;
        p.coverage_term += cfg.alpha3 * unc;
        p.handovers += s;
    }
    p.total = p.path_len + p.fspl_term + p.handover_term + p.coverage_term;
    Ok(p)
}

// Positions of every UAV at waypoint index i, for the indices strictly
// between launch and return.
fn formation_snapshots(paths: &[UavPath]) -> Vec<Vec<(f64, f64)>> {
    let len = paths.iter().map(|p| p.waypoints.len()).min().unwrap_or(0);
    (1..len.saturating_sub(1))
        .map(|i| paths.iter().map(|p| (p.waypoints[i].x, p.waypoints[i].y)).collect())
        .collect()
}

/// Full objective: the base objective plus the interference term (mean
/// `1/SINR` per UAV over the free waypoints), the collision potential
/// (mean over the free waypoints, distances floored at `min_separation`)
/// and the endurance penalty.
pub fn evaluate(
    paths: &[UavPath],
    area: &AreaSpec,
    stations: &[BaseStation],
    cfg: &PlannerConfig,
) -> Result<ObjectiveParts, PlanError> {
    let mut p = base_parts(paths, area, stations, cfg)?;
    let snaps = formation_snapshots(paths);
    if !snaps.is_empty() {
        let n = snaps.len() as f64;
        if cfg.alpha4 > 0.0 {
            let mut inv = 0.0;
            for s in &snaps {
                for j in 0..s.len() {
                    inv += 1.0 / sinr(j, s, stations, cfg)?;
                }
            }
            p.sinr_term = cfg.alpha4 * inv / n;
        }
        if cfg.alpha5 > 0.0 {
            let v: f64 = snaps
                .iter()
                .map(|s| collision_potential_floored(s, cfg.collision_c, cfg.collision_q, cfg.min_separation))
                .sum();
            p.collision_term = cfg.alpha5 * v / n;
        }
    }
    let endurance = cfg.endurance();
    p.endurance_penalty = paths
        .iter()
        .map(|path| (path_length(path) - endurance).max(0.0) * cfg.endurance_penalty)
        .sum();
    p.total = p.path_len
        + p.fspl_term
        + p.handover_term
        + p.coverage_term
        + p.sinr_term
        + p.collision_term
        + p.endurance_penalty;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station() -> Vec<BaseStation> {
        vec![BaseStation { x: 0.0, y: 0.0, carrier_freq: 3.5e9 }]
    }

    fn zero_weights() -> PlannerConfig {
        PlannerConfig { alpha1: 0.0, alpha2: 0.0, alpha3: 0.0, alpha4: 0.0, alpha5: 0.0, ..Default::default() }
    }

    #[test]
    fn stationary_uav_with_no_weights_is_zero() {
        let area = AreaSpec { l: 60.0, delta: 15.0, r: 15.0 };
        let p = UavPath::closed(area.center(), &[(30.0, 30.0); 5]);
        let (j, parts) = objective(&[p], &area, &station(), &zero_weights()).unwrap();
        assert_eq!(j, 0.0);
        assert_eq!(parts.path_len, 0.0);
    }

    #[test]
    fn coverage_counts_once_per_uav() {
        let area = AreaSpec { l: 60.0, delta: 15.0, r: 15.0 };
        let cfg = PlannerConfig { alpha3: 1.0, ..zero_weights() };
        let a = UavPath::closed(area.center(), &[(30.0, 30.0)]);
        let b = UavPath::closed(area.center(), &[(30.0, 30.0)]);
        let (j, parts) = objective(&[a, b], &area, &station(), &cfg).unwrap();
        assert_eq!(parts.uncovered_area, 12.0 * 225.0);
        assert_eq!(j, 2.0 * parts.uncovered_area);
    }

    #[test]
    fn path_length_of_known_path() {
        let p = UavPath::from_points(&[(0.0, 0.0), (3.0, 4.0), (3.0, 10.0)]);
        assert_eq!(path_length(&p), 11.0);
        assert_eq!(path_length(&UavPath::from_points(&[(1.0, 1.0)])), 0.0);
    }

    #[test]
    fn path_loss_sign_flag() {
        let area = AreaSpec { l: 60.0, delta: 15.0, r: 15.0 };
        let p = vec![UavPath::closed(area.center(), &[(10.0, 10.0)])];
        let cfg = PlannerConfig { alpha1: 1.0, ..zero_weights() };
        let (_, a) = objective(&p, &area, &station(), &cfg).unwrap();
        let (_, b) = objective(&p, &area, &station(), &PlannerConfig { prefer_near_stations: true, ..cfg }).unwrap();
        assert!(a.fspl_term > 0.0);
        assert_eq!(a.fspl_term, -b.fspl_term);
    }

    #[test]
    fn full_objective_adds_penalties() {
        let area = AreaSpec { l: 60.0, delta: 15.0, r: 15.0 };
        let paths = vec![
            UavPath::closed(area.center(), &[(10.0, 10.0), (20.0, 10.0)]),
            UavPath::closed(area.center(), &[(10.0, 20.0), (20.0, 20.0)]),
        ];
        let cfg = PlannerConfig { alpha5: 1.0, ..zero_weights() };
        let p = evaluate(&paths, &area, &station(), &cfg).unwrap();
        // both free indices put the UAVs 10 m apart
        assert!((p.collision_term - 0.01).abs() < 1e-15);
        let short = PlannerConfig { battery_wh: 1e-3, ..cfg };
        let q = evaluate(&paths, &area, &station(), &short).unwrap();
        assert!(q.endurance_penalty > 0.0);
        assert!(q.total > p.total);
    }
}
