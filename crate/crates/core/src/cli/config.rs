//! TOML configuration files for each subcommand. Relative paths inside a
//! file resolve against the file's own directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::antsort::TrackerConfig;
use crate::commsim::{GroundTruthLabel, Mode, ModeParams};
use crate::error::{Error, Result};
use crate::io::read_jsonl;
use crate::ksa::KsaConfig;
use crate::netcost::ConvSpec;
use crate::pipeline::MissingImu;
use crate::swarmplan::{AreaSpec, BaseStation, PlannerConfig};
use crate::synth::SynthConfig;
use crate::types::{FrameRecord, ImuSample};

/// A parsed config file plus the directory its relative paths hang off.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    pub base: PathBuf,
}

impl<T: DeserializeOwned + Default> Loaded<T> {
    /// Reads `path`, or falls back to defaults rooted at the working
    /// directory when no file is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self { value: T::default(), base: PathBuf::from(".") });
        };
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value = toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        Ok(Self { value, base })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthFile {
    pub seed: Option<u64>,
    pub synth: SynthConfig,
}

/// Where a mission's detections come from. With no files named, a
/// synthetic mission is generated from the `[synth]` section.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionSource {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detections: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub imu: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    pub missing_imu: MissingImu,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    #[default]
    PaperTable,
    /// Every mode's parameters come from `[comm.params]`.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommSection {
    pub preset: Preset,
    /// Mode used by `track`.
    pub mode: Mode,
    /// Modes compared by `compare`, in output order.
    pub modes: Vec<Mode>,
    /// Sample retransmissions from the seed instead of using expectations.
    pub stochastic: bool,
    /// Per-mode overrides keyed by mode name, layered over the preset.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, toml::Table>,
}

impl Default for CommSection {
    fn default() -> Self {
        Self {
            preset: Preset::PaperTable,
            mode: Mode::EccPlus,
            modes: Mode::ALL.to_vec(),
            stochastic: false,
            params: BTreeMap::new(),
        }
    }
}

impl CommSection {
    pub fn params_for(&self, mode: Mode) -> Result<ModeParams> {
        let mut table = match self.preset {
            Preset::PaperTable => match toml::Value::try_from(ModeParams::paper_table(mode)) {
                Ok(toml::Value::Table(t)) => t,
                _ => unreachable!("mode parameters serialize to a table"),
            },
            Preset::None => toml::Table::new(),
        };
        for (key, over) in &self.params {
            let m: Mode = key.parse().map_err(|e: crate::error::CommError| Error::Config(format!("comm.params: {e}")))?;
            if m == mode {
                table.extend(over.clone());
            }
        }
        table.insert("mode".into(), toml::Value::String(mode.as_str().into()));
        let p: ModeParams = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Error::Config(format!("comm.params.\"{mode}\": {e}")))?;
        p.validate().map_err(|e| Error::Config(format!("comm.params.\"{mode}\": {e}")))?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::Config("comm.modes must list at least one mode".into()));
        }
        for k in self.params.keys() {
            k.parse::<Mode>().map_err(|e| Error::Config(format!("comm.params: {e}")))?;
        }
        for m in Mode::ALL {
            if m == self.mode || self.modes.contains(&m) {
                self.params_for(m)?;
            }
        }
        Ok(())
    }
}

/// Configuration shared by `track` and `compare`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub mission: MissionSource,
    /// Only used when the mission names no files.
    #[serde(skip_serializing)]
    pub synth: SynthConfig,
    pub tracker: TrackerConfig,
    pub ksa: KsaConfig,
    pub comm: CommSection,
}

/// Detections, IMU and labels for one mission.
#[derive(Debug, Clone, PartialEq)]
pub struct MissionData {
    pub frames: Vec<FrameRecord>,
    pub imu: Vec<ImuSample>,
    pub labels: Vec<GroundTruthLabel>,
}

impl Loaded<MissionFile> {
    pub fn validate(&self) -> Result<()> {
        let v = &self.value;
        v.tracker.validate().map_err(|e| Error::Config(format!("tracker: {e}")))?;
        v.ksa.validate().map_err(|e| Error::Config(format!("ksa: {e}")))?;
        v.synth.validate().map_err(|e| Error::Config(format!("synth: {e}")))?;
        v.comm.validate()
    }

    pub fn mission_data(&self, seed: u64) -> Result<MissionData> {
        let m = &self.value.mission;
        match (&m.detections, &m.imu, &m.labels) {
            (None, None, None) => {
                let cfg = SynthConfig { seed, ..self.value.synth.clone() };
                let s = crate::synth::generate(&cfg)?;
                Ok(MissionData { frames: s.frames, imu: s.imu, labels: s.labels })
            }
            (Some(d), Some(i), Some(l)) => Ok(MissionData {
                frames: read_jsonl(&self.resolve(d))?,
                imu: read_jsonl(&self.resolve(i))?,
                labels: read_jsonl(&self.resolve(l))?,
            }),
            _ => Err(Error::Config(
                "mission: give all of detections, imu and labels, or none of them for a synthetic mission".into(),
            )),
        }
    }
}

fn default_area() -> AreaSpec {
    AreaSpec { l: 600.0, delta: 15.0, r: 15.0 }
}

/// Four stations just outside the corners of the default 600 m area.
pub fn default_stations() -> Vec<BaseStation> {
    [(-50.0, -50.0), (650.0, -50.0), (-50.0, 650.0), (650.0, 650.0)]
        .into_iter()
        .map(|(x, y)| BaseStation { x, y, carrier_freq: 3.5e9 })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: Option<u64>,
    pub area: AreaSpec,
    pub stations: Vec<BaseStation>,
    pub planner: PlannerConfig,
}

impl Default for ScenarioFile {
    fn default() -> Self {
        Self { seed: None, area: default_area(), stations: default_stations(), planner: PlannerConfig::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostFile {
    pub specs: Vec<ConvSpec>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse<T: DeserializeOwned>(s: &str) -> std::result::Result<T, toml::de::Error> {
        toml::from_str(s)
    }

    #[test]
    fn defaults_from_empty_files() {
        assert_eq!(parse::<MissionFile>("").unwrap(), MissionFile::default());
        assert_eq!(parse::<ScenarioFile>("").unwrap(), ScenarioFile::default());
        assert!(parse::<CostFile>("").unwrap().specs.is_empty());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(parse::<MissionFile>("[ksa]\ntau = 100\nmuu = 3\n").is_err());
        assert!(parse::<ScenarioFile>("[planner]\nomgea = 0.4\n").is_err());
    }

    #[test]
    fn overrides_layer_over_preset() {
        let f: MissionFile = parse("[comm.params.\"ECC+\"]\neta = 0.01\nloss_prob = 0.1\n").unwrap();
        let p = f.comm.params_for(Mode::EccPlus).unwrap();
        assert_eq!(p.eta, 0.01);
        assert_eq!(p.loss_prob, 0.1);
        assert_eq!(p.t_infer_edge, ModeParams::paper_table(Mode::EccPlus).t_infer_edge);
        assert_eq!(f.comm.params_for(Mode::Ecc).unwrap(), ModeParams::paper_table(Mode::Ecc));
    }

    #[test]
    fn bad_override_reports_mode() {
        let f: MissionFile = parse("[comm.params.CO]\nloss_prob = 1.5\n").unwrap();
        let e = f.comm.validate().unwrap_err().to_string();
        assert!(e.contains("comm.params.\"CO\"") && e.contains("loss_prob"), "{e}");
        let f: MissionFile = parse("[comm.params.XYZ]\neta = 0\n").unwrap();
        assert!(f.comm.validate().is_err());
    }

    #[test]
    fn no_preset_needs_full_params() {
        let f: MissionFile = parse("[comm]\npreset = \"none\"\nmodes = [\"ECC\"]\nmode = \"ECC\"\n").unwrap();
        assert!(f.comm.validate().is_err());
    }

    #[test]
    fn partial_mission_files_rejected() {
        let l = Loaded { value: parse::<MissionFile>("[mission]\ndetections = \"d.jsonl\"\n").unwrap(), base: ".".into() };
        assert!(l.mission_data(0).unwrap_err().is_config());
    }
}
