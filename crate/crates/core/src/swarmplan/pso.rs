use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{evaluate, ObjectiveParts};
use super::{validate_inputs, AreaSpec, BaseStation, PlannerConfig, UavPath};
use crate::error::PlanError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub paths: Vec<UavPath>,
    pub score: f64,
    pub parts: ObjectiveParts,
    /// Global best after each iteration; the first entry is the initial swarm.
    pub trace: Vec<f64>,
    pub endurance: f64,
}

// Flat layout: uav-major, then waypoint, then (x, y).
#[derive(Debug, Clone)]
struct Particle {
    pos: Vec<f64>,
    vel: Vec<f64>,
    best_pos: Vec<f64>,
    best_score: f64,
}

fn to_paths(pos: &[f64], cfg: &PlannerConfig, area: &AreaSpec) -> Vec<UavPath> {
    let per = cfg.n_waypoints * 2;
    (0..cfg.n_uavs)
        .map(|j| {
            let free: Vec<(f64, f64)> = pos[j * per..(j + 1) * per].chunks_exact(2).map(|c| (c[0], c[1])).collect();
            UavPath::closed(area.center(), &free)
        })
        .collect()
}

fn score(pos: &[f64], cfg: &PlannerConfig, area: &AreaSpec, stations: &[BaseStation]) -> Result<f64, PlanError> {
    let t = evaluate(&to_paths(pos, cfg, area), area, stations, cfg)?.total;
    Ok(if t.is_nan() { f64::INFINITY } else { t })
}

fn score_all(
    swarm: &[Particle],
    cfg: &PlannerConfig,
    area: &AreaSpec,
    stations: &[BaseStation],
) -> Result<Vec<f64>, PlanError> {
    if cfg.parallel {
        swarm.par_iter().map(|p| score(&p.pos, cfg, area, stations)).collect()
    } else {
        swarm.iter().map(|p| score(&p.pos, cfg, area, stations)).collect()
    }
}

// Random walk from the center; each UAV starts on a uniformly drawn heading.
fn init_particle(rng: &mut ChaCha8Rng, cfg: &PlannerConfig, area: &AreaSpec, vmax: f64) -> Particle {
    let turn = Normal::new(0.0, 0.6).expect("valid sigma");
    let max_step = 2.0 * area.l / cfg.n_waypoints.max(1) as f64;
    let mut pos = Vec::with_capacity(cfg.n_uavs * cfg.n_waypoints * 2);
    for _ in 0..cfg.n_uavs {
        let (mut x, mut y) = area.center();
        let mut theta = rng.random_range(0.0..std::f64::consts::TAU);
        for _ in 0..cfg.n_waypoints {
            let step = rng.random_range(0.0..=max_step);
            x = (x + step * theta.cos()).clamp(0.0, area.l);
            y = (y + step * theta.sin()).clamp(0.0, area.l);
            pos.push(x);
            pos.push(y);
            theta += turn.sample(rng);
        }
    }
    let vel = (0..pos.len()).map(|_| 0.1 * rng.random_range(-vmax..=vmax)).collect();
    Particle { best_pos: pos.clone(), pos, vel, best_score: f64::INFINITY }
}

/// Runs the swarm and returns the best plan found.
///
/// Random draws happen sequentially in particle order and evaluation results
/// are reduced in the same order, so parallel and sequential runs agree bit
/// for bit.
pub fn pso_optimize(cfg: &PlannerConfig, area: &AreaSpec, stations: &[BaseStation]) -> Result<PlanResult, PlanError> {
    cfg.validate()?;
    validate_inputs(area, stations)?;
    let vmax = cfg.max_velocity_frac * area.l;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut swarm: Vec<Particle> = (0..cfg.swarm_size).map(|_| init_particle(&mut rng, cfg, area, vmax)).collect();

    let mut gbest_pos = swarm[0].pos.clone();
    let mut gbest = f64::INFINITY;
    let mut trace = Vec::with_capacity(cfg.iterations);

    for it in 0..cfg.iterations {
        if it > 0 {
            for p in &mut swarm {
                for d in 0..p.pos.len() {
                    let r1: f64 = rng.random();
                    let r2: f64 = rng.random();
                    let v = cfg.omega * p.vel[d]
                        + cfg.c1 * r1 * (p.best_pos[d] - p.pos[d])
                        + cfg.c2 * r2 * (gbest_pos[d] - p.pos[d]);
                    let v = v.clamp(-vmax, vmax);
                    let x = p.pos[d] + v;
                    if x < 0.0 || x > area.l {
                        p.pos[d] = x.clamp(0.0, area.l);
                        p.vel[d] = 0.0;
                    } else {
                        p.pos[d] = x;
                        p.vel[d] = v;
                    }
                }
            }
        }
        let scores = score_all(&swarm, cfg, area, stations)?;
        for (p, s) in swarm.iter_mut().zip(scores) {
            if s < p.best_score {
                p.best_score = s;
                p.best_pos.clone_from(&p.pos);
            }
            if p.best_score < gbest {
                gbest = p.best_score;
                gbest_pos.clone_from(&p.best_pos);
            }
        }
        trace.push(gbest);
    }

    let paths = to_paths(&gbest_pos, cfg, area);
    let parts = evaluate(&paths, area, stations, cfg)?;
    Ok(PlanResult { paths, score: parts.total, parts, trace, endurance: cfg.endurance() })
}
