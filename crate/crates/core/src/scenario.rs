//! Ready-made synthetic studies: the base-isolated building with six
//! isolator classes, and a small modal-chain study.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::ensemble::{EnsembleSpec, ModelClassSpec, PriorSpec};
use crate::error::{Error, Result};
use crate::falsify::{ChannelLayout, FdrConfig, ResidualNoiseModel};
use crate::physics::{add_measurement_noise, synthetic_ground_motion, GroundMotionSpec, SimulationSettings};
use crate::predict::WeightMode;
use crate::registry::{Binding, ModalChain, PhysicsContext};
use crate::io::{format_excitation, format_timeseries, write_atomic};
use crate::series::{std_dev, ExcitationRecord, MeasurementSet};
use crate::study::{simulate_draw, Calibration, PredictionInput, Study};

/// True isolator parameters used to synthesize the measurements:
/// `k_post` [MN/m], `c_b` [kN·s/m], `r_k`, `q_y` [%W].
pub const ISOLATED_TRUTH: [f64; 4] = [4.0, 20.0, 0.1667, 5.0];
pub const ISOLATED_PARAMETERS: [&str; 4] = ["k_post", "c_b", "r_k", "q_y"];

/// Class ids and bindings of the isolated-building study.
pub const ISOLATED_CLASSES: [(&str, &str); 6] = [
    ("bouc_wen", "isolator:bouc_wen"),
    ("bilinear", "isolator:bilinear"),
    ("aashto", "isolator:aashto"),
    ("jpwri", "isolator:jpwri"),
    ("modified_aashto", "isolator:modified_aashto"),
    ("caltrans", "isolator:caltrans"),
];

pub fn isolated_class(class_id: &str, binding: &str) -> ModelClassSpec {
    let hysteretic = Binding::parse(binding).map(|b| matches!(b, Binding::Isolator(v) if v.is_hysteretic()));
    let last = if hysteretic.unwrap_or(true) {
        ("q_y", PriorSpec::uniform(4.75, 0.2887))
    } else {
        ("r_d", PriorSpec::uniform(2.5, 0.2887))
    };
    let params = [
        ("k_post", PriorSpec::lognormal(4.5, 0.25)),
        ("c_b", PriorSpec::lognormal(20.0, 4.0)),
        ("r_k", PriorSpec::uniform(0.16, 0.0058)),
        last,
    ];
    ModelClassSpec {
        class_id: class_id.into(),
        parameter_names: params.iter().map(|(n, _)| n.to_string()).collect(),
        priors: params.iter().map(|(_, p)| p.clone()).collect(),
        physics_binding: binding.into(),
        fixed_constants: BTreeMap::new(),
    }
}

/// Knobs of the isolated-building study.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolatedScenario {
    pub samples_per_class: usize,
    pub master_seed: u64,
    /// Seed of the calibration record; the prediction record uses `record_seed + 1`.
    pub record_seed: u64,
    pub noise_seed: u64,
    pub calibration_pga: f64,
    pub prediction_pga: f64,
    /// Measurement noise as a fraction of the clean response std.
    pub noise_fraction: f64,
    /// Residual σ as a fraction of the measured response std.
    pub sigma_fraction: f64,
    pub phi: f64,
    pub record_duration: f64,
    pub record_dt: f64,
    pub duration: f64,
    pub output_dt: f64,
    pub dt_int: f64,
    pub classes: Vec<(String, String)>,
}

impl Default for IsolatedScenario {
    fn default() -> Self {
        IsolatedScenario {
            samples_per_class: 500,
            master_seed: 2016,
            record_seed: 1940,
            noise_seed: 7,
            calibration_pga: 3.42,
            prediction_pga: 8.18,
            noise_fraction: 0.2,
            sigma_fraction: 0.15,
            phi: 0.95,
            record_duration: 40.0,
            record_dt: 0.02,
            duration: 30.0,
            output_dt: 0.05,
            dt_int: 0.005,
            classes: ISOLATED_CLASSES.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
        }
    }
}

pub const BASE_ACCEL: &str = "base_abs_accel";

impl IsolatedScenario {
    pub fn settings(&self) -> SimulationSettings {
        SimulationSettings::new(self.output_dt, self.duration).with_dt_int(self.dt_int)
    }

    pub fn truth_class(&self) -> ModelClassSpec {
        isolated_class("truth", "isolator:bouc_wen")
    }

    /// Builds the study: synthesizes both records, the noisy calibration
    /// measurements and the clean prediction reference.
    pub fn build(&self) -> Result<Study> {
        let physics = PhysicsContext::default();
        let channels = vec![BASE_ACCEL.to_string()];
        let settings = self.settings();
        let ensemble = EnsembleSpec {
            class_specs: self.classes.iter().map(|(id, b)| isolated_class(id, b)).collect(),
            samples_per_class: self.samples_per_class,
            master_seed: self.master_seed,
        };

        let calib = synthetic_ground_motion(
            &GroundMotionSpec::new(self.record_duration, self.record_dt, self.calibration_pga),
            "calibration",
            self.record_seed,
        )?;
        let predict = synthetic_ground_motion(
            &GroundMotionSpec::new(self.record_duration, self.record_dt, self.prediction_pga),
            "prediction",
            self.record_seed + 1,
        )?;

        let truth = self.truth_class();
        let binding = Binding::parse(&truth.physics_binding)?;
        let run = |rec: &ExcitationRecord| simulate_draw(&physics, &truth, binding, &ISOLATED_TRUTH, rec, &channels, &settings);
        let clean = run(&calib)?;
        let measurements = add_measurement_noise(&clean, self.noise_fraction, self.noise_seed)?;
        let sigma = self.sigma_fraction * std_dev(&measurements.d);
        let reference = run(&predict)?;

        Ok(Study {
            ensemble,
            physics,
            calibration: Calibration::TimeHistory {
                excitation: calib,
                measurements,
                settings,
            },
            channels,
            noise: ResidualNoiseModel::iid(sigma),
            fdr: FdrConfig::from_phi(self.phi)?,
            weight_mode: WeightMode::Cancel,
            predictions: vec![PredictionInput {
                label: "prediction".into(),
                excitation: predict,
                settings,
                truth: Some(MeasurementSet::new(reference.values, reference.dt, reference.channels)?),
            }],
        })
    }
}

impl IsolatedScenario {
    /// Writes the records, measurements, reference response and a run
    /// config into `dir`; returns the config path.
    pub fn write_files(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let study = self.build()?;
        let Calibration::TimeHistory {
            excitation,
            measurements,
            ..
        } = &study.calibration
        else {
            unreachable!("the isolated study calibrates on a time history");
        };
        let write = |name: &str, body: String| write_atomic(&dir.join(name), body.as_bytes());
        write("calibration.csv", format_excitation(excitation))?;
        write("measurements.csv", format_timeseries(measurements.dt, &measurements.channels, &measurements.d))?;
        let p = &study.predictions[0];
        write("prediction.csv", format_excitation(&p.excitation))?;
        if let Some(t) = &p.truth {
            write("truth.csv", format_timeseries(t.dt, &t.channels, &t.d))?;
        }
        write("run.toml", self.config_text(&study))?;
        Ok(dir.join("run.toml"))
    }

    fn config_text(&self, study: &Study) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "master_seed = {}", self.master_seed);
        let _ = writeln!(s, "samples_per_class = {}", self.samples_per_class);
        let _ = writeln!(s, "output_dir = \"out\"");
        let _ = writeln!(s, "weight_prior = \"cancel\"\n");
        let _ = writeln!(s, "[falsification]\nphi = {:?}\n", self.phi);
        let _ = writeln!(s, "[noise]\nkind = \"iid\"\nsigma_fraction = {:?}\n", self.sigma_fraction);
        let _ = writeln!(
            s,
            "[simulation]\noutput_dt = {:?}\nduration = {:?}\ndt_int = {:?}\nchannels = [\"{BASE_ACCEL}\"]\n",
            self.output_dt, self.duration, self.dt_int
        );
        let _ = writeln!(s, "[calibration]\nexcitation = \"calibration.csv\"\nmeasurements = \"measurements.csv\"\n");
        let _ = writeln!(
            s,
            "[[prediction]]\nlabel = \"{}\"\nexcitation = \"prediction.csv\"\ntruth = \"truth.csv\"\n",
            study.predictions[0].label
        );
        for class in &study.ensemble.class_specs {
            let _ = writeln!(s, "[[model_class]]\nid = \"{}\"\nbinding = \"{}\"\nparameters = [", class.class_id, class.physics_binding);
            for (name, prior) in class.parameter_names.iter().zip(&class.priors) {
                let kind = match prior.kind {
                    crate::ensemble::PriorKind::Normal => "normal",
                    crate::ensemble::PriorKind::Lognormal => "lognormal",
                    crate::ensemble::PriorKind::Uniform => "uniform",
                };
                let _ = writeln!(
                    s,
                    "  {{ name = \"{name}\", prior = \"{kind}\", mean = {:?}, std_dev = {:?} }},",
                    prior.mean, prior.std_dev
                );
            }
            let _ = writeln!(s, "]\n");
        }
        s
    }
}

/// Stiffness-scaled three-story chain calibrated against the nominal
/// chain's modes. Class `perturbed` scales each story by `U(1, spread)`;
/// class `truth` has no parameters and reproduces the reference exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalScenario {
    pub samples_per_class: usize,
    pub master_seed: u64,
    pub spread: f64,
    /// Frequency residual σ [Hz].
    pub sigma_freq: f64,
    /// `1 − MAC` residual σ.
    pub sigma_mac: f64,
    pub phi: f64,
}

impl Default for ModalScenario {
    fn default() -> Self {
        ModalScenario {
            samples_per_class: 500,
            master_seed: 2016,
            spread: 0.1,
            sigma_freq: 0.01,
            sigma_mac: 0.005,
            phi: 0.95,
        }
    }
}

impl ModalScenario {
    pub fn perturbed_class(&self, chain: &ModalChain) -> ModelClassSpec {
        let n = chain.stiffnesses.len();
        ModelClassSpec {
            class_id: "perturbed".into(),
            parameter_names: (1..=n).map(|i| format!("s{i}")).collect(),
            priors: vec![PriorSpec::uniform(1.0, self.spread); n],
            physics_binding: "chain:stiffness_scale".into(),
            fixed_constants: BTreeMap::new(),
        }
    }

    pub fn build(&self) -> Result<Study> {
        let physics = PhysicsContext::default();
        let reference = physics.chain.solve(&vec![1.0; physics.chain.stiffnesses.len()])?;
        let truth = ModelClassSpec {
            class_id: "truth".into(),
            parameter_names: Vec::new(),
            priors: Vec::new(),
            physics_binding: "chain:stiffness_scale".into(),
            fixed_constants: BTreeMap::new(),
        };
        Ok(Study {
            ensemble: EnsembleSpec {
                class_specs: vec![self.perturbed_class(&physics.chain), truth],
                samples_per_class: self.samples_per_class,
                master_seed: self.master_seed,
            },
            physics,
            calibration: Calibration::Modal { reference },
            channels: Vec::new(),
            noise: ResidualNoiseModel::per_channel(vec![self.sigma_freq, self.sigma_mac], ChannelLayout::Blocked),
            fdr: FdrConfig::from_phi(self.phi)?,
            weight_mode: WeightMode::Cancel,
            predictions: Vec::new(),
        })
    }
}
