//! TOML run configuration.
//!
//! ```toml
//! master_seed = 2016
//! samples_per_class = 500
//! output_dir = "out"             # default "falsikit-out"
//! weight_prior = "cancel"        # or "include"
//!
//! [falsification]
//! phi = 0.95                     # or alpha = 0.05; default phi = 0.95
//!
//! [noise]
//! kind = "iid"                   # or "per_channel"
//! sigma_fraction = 0.15          # of the measured std; or sigma / sigmas
//!
//! [simulation]
//! output_dt = 0.05
//! duration = 30.0
//! dt_int = 0.005                 # default output_dt / 10
//! channels = ["base_abs_accel"]
//!
//! [calibration]
//! excitation = "calibration.csv"
//! measurements = "measurements.csv"
//! # reference_modes = "modes.txt" for modal calibration
//!
//! [[prediction]]
//! label = "stronger"
//! excitation = "prediction.csv"
//! truth = "truth.csv"            # optional
//!
//! [physics.building]             # optional overrides of the bound structures
//! base_mass = 500.0
//!
//! [[model_class]]
//! id = "bouc_wen"
//! binding = "isolator:bouc_wen"
//! parameters = [
//!   { name = "k_post", prior = "lognormal", mean = 4.5, std_dev = 0.25 },
//! ]
//! fixed = { c_b = 20.0 }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{EnsembleSpec, ModelClassSpec, PriorKind, PriorSpec};
use crate::error::{Error, Result};
use crate::falsify::{ChannelLayout, FdrConfig, ResidualNoiseModel};
use crate::physics::SimulationSettings;
use crate::predict::WeightMode;
use crate::registry::{resolve_all, PhysicsContext};
use crate::series::{std_dev, MeasurementSet};

pub const DEFAULT_PHI: f64 = 0.95;
pub const DEFAULT_OUTPUT_DIR: &str = "falsikit-out";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    master_seed: u64,
    samples_per_class: usize,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    weight_prior: WeightMode,
    #[serde(default)]
    falsification: RawFalsification,
    noise: NoiseSpec,
    simulation: Option<RawSimulation>,
    calibration: RawCalibration,
    #[serde(default)]
    prediction: Vec<RawPrediction>,
    #[serde(default)]
    physics: PhysicsContext,
    #[serde(default)]
    model_class: Vec<RawClass>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFalsification {
    phi: Option<f64>,
    alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    output_dt: f64,
    duration: f64,
    dt_int: Option<f64>,
    channels: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibration {
    excitation: Option<PathBuf>,
    measurements: Option<PathBuf>,
    reference_modes: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrediction {
    label: String,
    excitation: PathBuf,
    truth: Option<PathBuf>,
    duration: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawClass {
    id: String,
    binding: String,
    #[serde(default)]
    parameters: Vec<RawParameter>,
    #[serde(default)]
    fixed: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParameter {
    name: String,
    prior: PriorKind,
    mean: f64,
    std_dev: f64,
    #[serde(default)]
    positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Iid,
    PerChannel,
}

/// Residual noise as configured; fractions are resolved against the
/// measurements by [`NoiseSpec::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub kind: NoiseKind,
    pub sigma: Option<f64>,
    pub sigmas: Option<Vec<f64>>,
    /// σ as a fraction of the measured standard deviation (whole record for
    /// `iid`, each channel for `per_channel`).
    pub sigma_fraction: Option<f64>,
    #[serde(default = "default_layout")]
    pub layout: ChannelLayout,
}

fn default_layout() -> ChannelLayout {
    ChannelLayout::Interleaved
}

impl NoiseSpec {
    fn validate(&self) -> Result<()> {
        let given = [self.sigma.is_some(), self.sigmas.is_some(), self.sigma_fraction.is_some()];
        if given.iter().filter(|g| **g).count() != 1 {
            return Err(Error::config("noise", "give exactly one of `sigma`, `sigmas`, `sigma_fraction`"));
        }
        match (self.kind, &self.sigma, &self.sigmas) {
            (NoiseKind::Iid, _, Some(_)) => return Err(Error::config("noise.sigmas", "needs kind = \"per_channel\"")),
            (NoiseKind::PerChannel, Some(_), _) => {
                return Err(Error::config("noise.sigma", "per_channel noise takes `sigmas`"))
            }
            _ => {}
        }
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        if let Some(s) = self.sigma {
            positive("noise.sigma", s)?;
        }
        if let Some(f) = self.sigma_fraction {
            positive("noise.sigma_fraction", f)?;
        }
        if let Some(s) = &self.sigmas {
            if s.is_empty() {
                return Err(Error::config("noise.sigmas", "must not be empty"));
            }
            for v in s {
                positive("noise.sigmas", *v)?;
            }
        }
        Ok(())
    }

    pub fn resolve(&self, measurements: Option<&MeasurementSet>) -> Result<ResidualNoiseModel> {
        let model = match (self.kind, self.sigma, &self.sigmas, self.sigma_fraction) {
            (NoiseKind::Iid, Some(s), _, _) => ResidualNoiseModel::iid(s),
            (NoiseKind::PerChannel, _, Some(s), _) => ResidualNoiseModel::per_channel(s.clone(), self.layout),
            (kind, _, _, Some(f)) => {
                let m = measurements.ok_or_else(|| {
                    Error::config("noise.sigma_fraction", "needs time-history measurements; give `sigma` or `sigmas`")
                })?;
                match kind {
                    NoiseKind::Iid => ResidualNoiseModel::iid(f * std_dev(&m.d)),
                    NoiseKind::PerChannel => ResidualNoiseModel::per_channel(
                        m.channel_std_devs().iter().map(|s| f * s).collect(),
                        ChannelLayout::Interleaved,
                    ),
                }
            }
            _ => return Err(Error::config("noise", "incomplete noise specification")),
        };
        model.validate()?;
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub output_dt: f64,
    pub duration: f64,
    pub dt_int: f64,
    pub channels: Vec<String>,
}

impl SimulationConfig {
    pub fn settings(&self) -> SimulationSettings {
        SimulationSettings::new(self.output_dt, self.duration).with_dt_int(self.dt_int)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationSource {
    TimeHistory { excitation: PathBuf, measurements: PathBuf },
    Modal { reference_modes: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionSource {
    pub label: String,
    pub excitation: PathBuf,
    pub truth: Option<PathBuf>,
    pub duration: f64,
}

/// Validated configuration with every default resolved.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub source: PathBuf,
    pub master_seed: u64,
    pub samples_per_class: usize,
    pub output_dir: PathBuf,
    pub weight_prior: WeightMode,
    pub falsification: FdrConfig,
    pub noise: NoiseSpec,
    pub simulation: Option<SimulationConfig>,
    pub calibration: CalibrationSource,
    pub predictions: Vec<PredictionSource>,
    pub physics: PhysicsContext,
    pub model_classes: Vec<ModelClassSpec>,
}

impl RunConfig {
    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            class_specs: self.model_classes.clone(),
            samples_per_class: self.samples_per_class,
            master_seed: self.master_seed,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path)
}

/// Parses `text` as if read from `path`.
pub fn parse_config_str(text: &str, path: &Path) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.span().map_or(1, |s| line_of(text, s.start)),
        message: e.message().trim().to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    let existing = |key: &str, p: &Path| -> Result<PathBuf> {
        let full = resolve(p);
        if full.is_file() {
            Ok(full)
        } else {
            Err(Error::config(key, format!("file `{}` does not exist", full.display())))
        }
    };

    if raw.samples_per_class == 0 {
        return Err(Error::config("samples_per_class", "must be >= 1"));
    }

    let falsification = match (raw.falsification.phi, raw.falsification.alpha) {
        (Some(_), Some(_)) => return Err(Error::config("falsification", "give either `phi` or `alpha`, not both")),
        (None, Some(alpha)) => FdrConfig::new(alpha)?,
        (phi, None) => FdrConfig::from_phi(phi.unwrap_or(DEFAULT_PHI))?,
    };

    raw.noise.validate()?;

    let simulation = match raw.simulation {
        Some(s) => {
            let dt_int = s.dt_int.unwrap_or(s.output_dt / 10.0);
            for (key, v) in [
                ("simulation.output_dt", s.output_dt),
                ("simulation.duration", s.duration),
                ("simulation.dt_int", dt_int),
            ] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::config(key, format!("must be positive, got {v}")));
                }
            }
            if s.channels.is_empty() {
                return Err(Error::config("simulation.channels", "name at least one output channel"));
            }
            Some(SimulationConfig {
                output_dt: s.output_dt,
                duration: s.duration,
                dt_int,
                channels: s.channels,
            })
        }
        None => None,
    };

    let c = raw.calibration;
    let calibration = match (c.excitation, c.measurements, c.reference_modes) {
        (Some(e), Some(m), None) => {
            if simulation.is_none() {
                return Err(Error::config("simulation", "time-history calibration needs a [simulation] section"));
            }
            CalibrationSource::TimeHistory {
                excitation: existing("calibration.excitation", &e)?,
                measurements: existing("calibration.measurements", &m)?,
            }
        }
        (None, None, Some(r)) => CalibrationSource::Modal {
            reference_modes: existing("calibration.reference_modes", &r)?,
        },
        _ => {
            return Err(Error::config(
                "calibration",
                "give `excitation` and `measurements`, or `reference_modes` alone",
            ))
        }
    };

    let mut predictions = Vec::new();
    for (i, p) in raw.prediction.into_iter().enumerate() {
        let key = |k: &str| format!("prediction[{i}].{k}");
        let Some(sim) = &simulation else {
            return Err(Error::config(key("excitation"), "prediction needs a [simulation] section"));
        };
        let duration = p.duration.unwrap_or(sim.duration);
        if !(duration > 0.0) {
            return Err(Error::config(key("duration"), format!("must be positive, got {duration}")));
        }
        if predictions.iter().any(|q: &PredictionSource| q.label == p.label) {
            return Err(Error::config(key("label"), format!("duplicate label `{}`", p.label)));
        }
        predictions.push(PredictionSource {
            excitation: existing(&key("excitation"), &p.excitation)?,
            truth: p.truth.map(|t| existing(&key("truth"), &t)).transpose()?,
            label: p.label,
            duration,
        });
    }

    if raw.model_class.is_empty() {
        return Err(Error::config("model_class", "define at least one model class"));
    }
    let model_classes: Vec<ModelClassSpec> = raw
        .model_class
        .into_iter()
        .map(|c| ModelClassSpec {
            parameter_names: c.parameters.iter().map(|p| p.name.clone()).collect(),
            priors: c
                .parameters
                .iter()
                .map(|p| PriorSpec {
                    kind: p.prior,
                    mean: p.mean,
                    std_dev: p.std_dev,
                    positive: p.positive,
                })
                .collect(),
            class_id: c.id,
            physics_binding: c.binding,
            fixed_constants: c.fixed,
        })
        .collect();

    let config = RunConfig {
        source: path.to_path_buf(),
        master_seed: raw.master_seed,
        samples_per_class: raw.samples_per_class,
        output_dir: resolve(&raw.output_dir.unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))),
        weight_prior: raw.weight_prior,
        falsification,
        noise: raw.noise,
        simulation,
        calibration,
        predictions,
        physics: raw.physics,
        model_classes,
    };
    config.ensemble().validate()?;
    resolve_all(&config.model_classes)?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn with_files(body: &str) -> (tempfile::TempDir, Result<RunConfig>) {
        let dir = tempfile::tempdir().unwrap();
        for f in ["cal.csv", "meas.csv", "modes.txt"] {
            fs::write(dir.path().join(f), "0 0\n0.05 0\n").unwrap();
        }
        let path = dir.path().join("run.toml");
        fs::write(&path, body).unwrap();
        let cfg = parse_config(&path);
        (dir, cfg)
    }

    const MINIMAL: &str = r#"
samples_per_class = 10
[noise]
sigma = 0.1
[simulation]
output_dt = 0.05
duration = 30.0
channels = ["base_abs_accel"]
[calibration]
excitation = "cal.csv"
measurements = "meas.csv"
[[model_class]]
id = "bw"
binding = "isolator:bouc_wen"
parameters = [
  { name = "k_post", prior = "lognormal", mean = 4.5, std_dev = 0.25 },
  { name = "c_b", prior = "lognormal", mean = 20.0, std_dev = 4.0 },
  { name = "r_k", prior = "uniform", mean = 0.16, std_dev = 0.0058 },
  { name = "q_y", prior = "uniform", mean = 4.75, std_dev = 0.2887 },
]
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let (dir, cfg) = with_files(MINIMAL);
        let cfg = cfg.unwrap();
        let sim = cfg.simulation.unwrap();
        assert!((sim.dt_int - 0.005).abs() < 1e-15);
        assert!((cfg.falsification.phi() - 0.95).abs() < 1e-12);
        assert_eq!(cfg.weight_prior, WeightMode::Cancel);
        assert_eq!(cfg.output_dir, dir.path().join(DEFAULT_OUTPUT_DIR));
        assert_eq!(cfg.physics, PhysicsContext::default());
    }

    #[test]
    fn alpha_out_of_range_names_the_key() {
        let (_d, cfg) = with_files(&MINIMAL.replace("[noise]", "[falsification]\nalpha = 1.2\n[noise]"));
        let msg = cfg.unwrap_err().to_string();
        assert!(msg.contains("falsification.alpha"), "{msg}");
    }

    #[test]
    fn unknown_binding_lists_registered() {
        let (_d, cfg) = with_files(&MINIMAL.replace("isolator:bouc_wen", "boucwen2"));
        let msg = cfg.unwrap_err().to_string();
        assert!(msg.contains("model_class.bw.physics_binding"), "{msg}");
        assert!(msg.contains("isolator:bouc_wen") && msg.contains("tmd:cubic:cubic"), "{msg}");
    }

    #[test]
    fn missing_key_and_syntax_errors_carry_location() {
        let (_d, cfg) = with_files(&MINIMAL.replace("samples_per_class = 10\n", ""));
        let msg = cfg.unwrap_err().to_string();
        assert!(msg.contains("samples_per_class"), "{msg}");
        let (_d, cfg) = with_files(&MINIMAL.replace("duration = 30.0", "duration = ="));
        match cfg.unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 7),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_file_is_reported() {
        let (_d, cfg) = with_files(&MINIMAL.replace("meas.csv", "nope.csv"));
        let msg = cfg.unwrap_err().to_string();
        assert!(msg.contains("calibration.measurements") && msg.contains("nope.csv"), "{msg}");
    }

    #[test]
    fn physics_overrides_merge_with_defaults() {
        let (_d, cfg) = with_files(&format!("{MINIMAL}\n[physics.building]\nbase_mass = 600.0\n"));
        let cfg = cfg.unwrap();
        assert_eq!(cfg.physics.building.base_mass, 600.0);
        assert_eq!(cfg.physics.building.story_masses, vec![300.0; 3]);
    }
}
