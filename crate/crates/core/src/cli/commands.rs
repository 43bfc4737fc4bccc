use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{CostFile, Loaded, MissionData, MissionFile, MissionSource, ScenarioFile, SynthFile};
use super::{Failure, Global};
use crate::antsort::TrackerConfig;
use crate::commsim::{e2el_reduction, run_mission, LabelSet, LatencyReport, Mode, ModeParams, Stochastic};
use crate::error::Error;
use crate::io::{to_jsonl, write_all_atomic};
use crate::netcost::{csv_row, CSV_HEADER};
use crate::pipeline::{run_edge, EdgeOutput};
use crate::swarmplan::{nearest_station, pso_optimize, AreaSpec, BaseStation, ObjectiveParts, UavPath};
use crate::synth::{generate as synth_generate, SynthConfig};

type CmdResult = Result<(), Failure>;

fn write_outputs(out: &Path, files: &[(&str, String)]) -> Result<(), Error> {
    write_all_atomic(out, files)?;
    for (name, _) in files {
        info!("wrote {}", out.join(name).display());
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
    s.push('\n');
    s
}

pub fn generate(g: &Global) -> CmdResult {
    let cfg = Loaded::<SynthFile>::load(g.config.as_deref()).map_err(Failure::config)?;
    let seed = g.seed.or(cfg.value.seed).unwrap_or(cfg.value.synth.seed);
    let synth = SynthConfig { seed, ..cfg.value.synth.clone() };
    synth.validate().map_err(|e| Failure::config(Error::Config(format!("synth: {e}"))))?;
    let m = synth_generate(&synth)?;

    let mission = MissionFile {
        seed: Some(seed),
        mission: MissionSource {
            detections: Some(PathBuf::from("detections.jsonl")),
            imu: Some(PathBuf::from("imu.jsonl")),
            labels: Some(PathBuf::from("labels.jsonl")),
            ..Default::default()
        },
        tracker: TrackerConfig { imu_scale: synth.imu_scale, dt: 1.0 / synth.frame_rate, ..Default::default() },
        ..Default::default()
    };
    let toml = toml::to_string(&mission).map_err(|e| Error::Config(format!("mission.toml: {e}")))?;
    write_outputs(
        &g.out,
        &[
            ("detections.jsonl", to_jsonl(&m.frames)),
            ("imu.jsonl", to_jsonl(&m.imu)),
            ("labels.jsonl", to_jsonl(&m.labels)),
            ("objects.jsonl", to_jsonl(&m.objects)),
            ("mission.toml", toml),
        ],
    )?;
    println!("generated {} frames, {} objects (seed {seed})", m.frames.len(), m.objects.len());
    Ok(())
}

struct Prepared {
    cfg: Loaded<MissionFile>,
    seed: u64,
    data: MissionData,
}

fn prepare(g: &Global) -> Result<Prepared, Failure> {
    let cfg = Loaded::<MissionFile>::load(g.config.as_deref()).map_err(Failure::config)?;
    cfg.validate().map_err(Failure::config)?;
    let seed = g.seed.or(cfg.value.seed).unwrap_or(cfg.value.synth.seed);
    let data = cfg.mission_data(seed).map_err(Failure::config)?;
    Ok(Prepared { cfg, seed, data })
}

fn edge(p: &Prepared) -> Result<EdgeOutput, Error> {
    let v = &p.cfg.value;
    Ok(run_edge(&p.data.frames, &p.data.imu, &v.tracker, &v.ksa, v.mission.missing_imu)?)
}

fn simulate(p: &Prepared, params: &ModeParams, out: &EdgeOutput, labels: &LabelSet) -> Result<LatencyReport, Error> {
    let stochastic = p.cfg.value.comm.stochastic.then_some(Stochastic { seed: p.seed });
    Ok(run_mission(params, &out.trace, labels, stochastic)?)
}

pub fn track(g: &Global) -> CmdResult {
    let p = prepare(g)?;
    let comm = &p.cfg.value.comm;
    let params = comm.params_for(comm.mode).map_err(Failure::config)?;
    let out = edge(&p)?;
    let labels = LabelSet::new(p.data.labels.iter().copied());
    let report = simulate(&p, &params, &out, &labels)?;

    let mut uploads = String::from("frame_index,timestamp,t_comm,t_infer,e2el\n");
    for u in &report.per_upload {
        writeln!(uploads, "{},{},{},{},{}", u.frame_index, u.timestamp, u.t_comm, u.t_infer, u.e2el).unwrap();
    }
    write_outputs(
        &g.out,
        &[
            ("tracks.jsonl", to_jsonl(&out.track_dump)),
            ("keyframes.jsonl", to_jsonl(&out.keyframes)),
            ("uploads.csv", uploads),
            ("report.json", pretty(&report)),
        ],
    )?;
    println!(
        "{}: {} uploads, mean E2EL {:.1} ms, accuracy {:.1}%",
        report.mode,
        report.uploads,
        report.mean_e2el * 1e3,
        report.accuracy * 100.0
    );
    Ok(())
}

/// Column layout of `comparison.csv`.
pub const COMPARISON_HEADER: &str =
    "mode,comm_ms,infer_ms,e2el_ms,accuracy_pct,power_comm_w,power_infer_w,uploads,uplink_bytes,energy_j,reduction_pct";

#[derive(Debug, Serialize)]
struct Summary<'a> {
    seed: u64,
    /// CO → mode reduction of mean E2EL, percent; absent without a CO run.
    reductions: Vec<(Mode, f64)>,
    reports: &'a [LatencyReport],
}

fn mean_comm(r: &LatencyReport, params: &ModeParams) -> f64 {
    if r.per_upload.is_empty() {
        r.nominal_e2el - params.t_infer() - params.eta
    } else {
        r.per_upload.iter().map(|u| u.t_comm).sum::<f64>() / r.per_upload.len() as f64
    }
}

pub fn compare(g: &Global) -> CmdResult {
    let p = prepare(g)?;
    let comm = &p.cfg.value.comm;
    let params: Vec<ModeParams> =
        comm.modes.iter().map(|&m| comm.params_for(m)).collect::<Result<_, _>>().map_err(Failure::config)?;
    let out = edge(&p)?;
    let labels = LabelSet::new(p.data.labels.iter().copied());
    let reports: Vec<LatencyReport> =
        params.par_iter().map(|m| simulate(&p, m, &out, &labels)).collect::<Result<_, _>>()?;

    let co = reports.iter().find(|r| r.mode == Mode::Co);
    let reductions: Vec<(Mode, f64)> = match co {
        Some(co) => reports.iter().filter(|r| r.mode != Mode::Co).map(|r| (r.mode, 100.0 * e2el_reduction(co, r))).collect(),
        None => Vec::new(),
    };

    let mut csv = format!("{COMPARISON_HEADER}\n");
    for (r, m) in reports.iter().zip(&params) {
        let red = match co {
            Some(co) if r.mode != Mode::Co => format!("{:.4}", 100.0 * e2el_reduction(co, r)),
            _ => String::new(),
        };
        writeln!(
            csv,
            "{},{:.4},{:.4},{:.4},{:.4},{},{},{},{},{:.4},{}",
            r.mode,
            mean_comm(r, m) * 1e3,
            m.t_infer() * 1e3,
            r.effective_e2el() * 1e3,
            r.accuracy * 100.0,
            m.power_comm,
            m.power_infer,
            r.uploads,
            r.total_uplink_bytes,
            r.energy_comm + r.energy_infer,
            red
        )
        .unwrap();
    }
    let summary = Summary { seed: p.seed, reductions: reductions.clone(), reports: &reports };
    write_outputs(&g.out, &[("comparison.csv", csv), ("summary.json", pretty(&summary))])?;
    for (m, r) in &reductions {
        println!("CO -> {m}: E2EL reduced by {r:.1}%");
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct PlanReport<'a> {
    seed: u64,
    area: AreaSpec,
    stations: &'a [BaseStation],
    score: f64,
    endurance: f64,
    parts: ObjectiveParts,
    paths: &'a [UavPath],
}

pub fn plan(g: &Global) -> CmdResult {
    let cfg = Loaded::<ScenarioFile>::load(g.config.as_deref()).map_err(Failure::config)?;
    let s = &cfg.value;
    let seed = g.seed.or(s.seed).unwrap_or(s.planner.rng_seed);
    let planner = crate::swarmplan::PlannerConfig { rng_seed: seed, ..s.planner.clone() };
    let r = pso_optimize(&planner, &s.area, &s.stations)?;

    let mut waypoints = String::from("uav,index,x,y,theta\n");
    let mut handovers = String::from("uav,index,from_station,to_station\n");
    for (j, path) in r.paths.iter().enumerate() {
        let mut serving = None;
        for (i, w) in path.waypoints.iter().enumerate() {
            writeln!(waypoints, "{j},{i},{},{},{}", w.x, w.y, w.theta).unwrap();
            let k = nearest_station((w.x, w.y), &s.stations);
            if let (Some(a), Some(b)) = (serving, k) {
                if a != b {
                    writeln!(handovers, "{j},{i},{a},{b}").unwrap();
                }
            }
            serving = k;
        }
    }
    let mut trace = String::from("iteration,gbest\n");
    for (i, v) in r.trace.iter().enumerate() {
        writeln!(trace, "{i},{v}").unwrap();
    }
    let report = PlanReport {
        seed,
        area: s.area,
        stations: &s.stations,
        score: r.score,
        endurance: r.endurance,
        parts: r.parts,
        paths: &r.paths,
    };
    write_outputs(
        &g.out,
        &[
            ("plan.json", pretty(&report)),
            ("waypoints.csv", waypoints),
            ("trace.csv", trace),
            ("handovers.csv", handovers),
        ],
    )?;
    println!(
        "score {:.3}, uncovered {:.0} m², {} handovers",
        r.score, r.parts.uncovered_area, r.parts.handovers
    );
    Ok(())
}

pub fn cost(g: &Global) -> CmdResult {
    let cfg = Loaded::<CostFile>::load(g.config.as_deref()).map_err(Failure::config)?;
    let mut csv = format!("{CSV_HEADER}\n");
    for (i, spec) in cfg.value.specs.iter().enumerate() {
        let row = csv_row(spec).map_err(|e| Failure::config(Error::Config(format!("specs[{i}]: {e}"))))?;
        csv.push_str(&row);
        csv.push('\n');
    }
    write_outputs(&g.out, &[("costs.csv", csv)])?;
    println!("{} specs", cfg.value.specs.len());
    Ok(())
}
