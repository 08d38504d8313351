//! File-based orchestration: config → study → artifacts, manifest, report.
//!
//! Artifacts written to the output directory:
//!
//! - `ledger_<class>.csv`: every draw with its log-likelihood, the log bound,
//!   the verdict and the number of out-of-bound entries
//! - `weights_<class>.csv`: normalized weights of the unfalsified draws
//! - `prediction_<label>_<class>.csv`: weighted mean and spread per channel,
//!   next to the reference response when one was given
//! - `manifest.json` and `report.txt`

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{CalibrationSource, RunConfig};
use crate::error::{Error, Result};
use crate::falsify::ClassReport;
use crate::io::{fmt_f64, format_columns, ingest_excitation, ingest_measurements, read_modes, write_atomic};
use crate::predict::WeightedEnsemble;
use crate::study::{Calibration, ClassPrediction, PredictionInput, Stage, Study, StudyOutcome};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.txt";

/// Loads every referenced file and assembles the in-memory study.
pub fn build_study(config: &RunConfig) -> Result<Study> {
    let (calibration, channels, noise) = match &config.calibration {
        CalibrationSource::TimeHistory {
            excitation,
            measurements,
        } => {
            let sim = config
                .simulation
                .as_ref()
                .ok_or_else(|| Error::config("simulation", "time-history calibration needs a [simulation] section"))?;
            let settings = sim.settings();
            let record = ingest_excitation(excitation, "calibration")?;
            let m = ingest_measurements(measurements, &sim.channels)?;
            if (m.dt - sim.output_dt).abs() > 1e-9 * sim.output_dt {
                return Err(Error::config(
                    "simulation.output_dt",
                    format!("{} s differs from the measurement interval {} s", sim.output_dt, m.dt),
                ));
            }
            if m.steps() != settings.output_steps() {
                return Err(Error::config(
                    "simulation.duration",
                    format!(
                        "{} output samples expected but `{}` holds {}",
                        settings.output_steps(),
                        measurements.display(),
                        m.steps()
                    ),
                ));
            }
            let noise = config.noise.resolve(Some(&m))?;
            let calibration = Calibration::TimeHistory {
                excitation: record,
                measurements: m,
                settings,
            };
            (calibration, sim.channels.clone(), noise)
        }
        CalibrationSource::Modal { reference_modes } => {
            let reference = read_modes(reference_modes)?;
            (Calibration::Modal { reference }, Vec::new(), config.noise.resolve(None)?)
        }
    };

    let mut predictions = Vec::new();
    for p in &config.predictions {
        let sim = config
            .simulation
            .as_ref()
            .ok_or_else(|| Error::config("prediction", "prediction needs a [simulation] section"))?;
        let mut settings = sim.settings();
        settings.duration = p.duration;
        let truth = match &p.truth {
            Some(path) => {
                let t = ingest_measurements(path, &channels)?;
                if t.steps() != settings.output_steps() {
                    return Err(Error::Dimension(format!(
                        "`{}` holds {} samples, prediction `{}` produces {}",
                        path.display(),
                        t.steps(),
                        p.label,
                        settings.output_steps()
                    )));
                }
                Some(t)
            }
            None => None,
        };
        predictions.push(PredictionInput {
            label: p.label.clone(),
            excitation: ingest_excitation(&p.excitation, &p.label)?,
            settings,
            truth,
        });
    }

    Ok(Study {
        ensemble: config.ensemble(),
        physics: config.physics.clone(),
        calibration,
        channels,
        noise,
        fdr: config.falsification,
        weight_mode: config.weight_prior,
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub class_id: String,
    pub binding: String,
    pub parameter_names: Vec<String>,
    pub samples: usize,
    pub unfalsified: usize,
    pub falsified: usize,
    /// Calibration simulations that diverged (counted as falsified).
    pub diverged: usize,
    pub unfalsified_fraction: f64,
    /// Weighted parameter estimate over the unfalsified draws.
    pub estimate: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub label: String,
    pub class_id: String,
    pub simulations: usize,
    pub relative_rms_error: Option<f64>,
    pub artifact: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub master_seed: u64,
    pub requested_stage: Stage,
    pub completed_stages: Vec<Stage>,
    pub error: Option<String>,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
    pub alpha: f64,
    pub measurement_count: Option<usize>,
    pub log_bound: Option<f64>,
    pub classes: Vec<ClassSummary>,
    pub total_samples: usize,
    pub total_unfalsified: usize,
    pub total_falsified: usize,
    /// `N_f / N_s` over all classes, once falsification has run.
    pub savings_ratio: Option<f64>,
    pub calibration_simulations: usize,
    pub prediction_inputs: usize,
    pub prediction_simulations: usize,
    pub predictions: Vec<PredictionSummary>,
    /// Files written, relative to `output_dir`.
    pub artifacts: Vec<String>,
    pub output_dir: PathBuf,
    pub resolved_config: serde_json::Value,
}

fn config_hash(config: &RunConfig) -> Result<String> {
    let bytes = fs::read(&config.source).map_err(|e| Error::io(&config.source, e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn ledger_csv(report: &ClassReport) -> String {
    let mut s = String::from("sample_index");
    for n in &report.parameter_names {
        s.push(',');
        s.push_str(n);
    }
    s.push_str(",log_likelihood,log_bound,unfalsified,rejected_count\n");
    for v in &report.verdicts {
        s.push_str(&v.sample_index.to_string());
        for x in &v.theta {
            s.push(',');
            s.push_str(&fmt_f64(*x));
        }
        s.push_str(&format!(
            ",{},{},{},{}\n",
            fmt_f64(v.log_likelihood),
            fmt_f64(v.log_bound),
            v.unfalsified,
            v.rejected_count
        ));
    }
    s
}

fn weights_csv(w: &WeightedEnsemble) -> String {
    let mut s = String::from("sample_index");
    for n in &w.parameter_names {
        s.push(',');
        s.push_str(n);
    }
    s.push_str(",log_likelihood,weight\n");
    for e in &w.entries {
        s.push_str(&e.sample_index.to_string());
        for x in &e.theta {
            s.push(',');
            s.push_str(&fmt_f64(*x));
        }
        s.push_str(&format!(",{},{}\n", fmt_f64(e.log_likelihood), fmt_f64(e.weight)));
    }
    s
}

fn prediction_csv(p: &ClassPrediction, truth: Option<&[f64]>) -> String {
    let r = &p.result;
    let nc = r.channels.len();
    let column = |v: &[f64], c: usize| v.iter().skip(c).step_by(nc).copied().collect::<Vec<f64>>();
    let mut names = Vec::new();
    let mut columns = Vec::new();
    for (c, ch) in r.channels.iter().enumerate() {
        names.push(format!("{ch}_mean"));
        columns.push(column(&r.mean, c));
        names.push(format!("{ch}_std"));
        columns.push(column(&r.std_dev, c));
        if let Some(t) = truth {
            names.push(format!("{ch}_truth"));
            columns.push(column(t, c));
        }
    }
    format_columns(r.dt, &names, &columns)
}

fn write_artifact(dir: &Path, name: String, body: &str, manifest: &mut RunManifest) -> Result<()> {
    write_atomic(&dir.join(&name), body.as_bytes())?;
    manifest.artifacts.push(name);
    Ok(())
}

fn record_outcome(config: &RunConfig, study: &Study, out: &StudyOutcome, manifest: &mut RunManifest) -> Result<()> {
    let dir = &config.output_dir;
    manifest.completed_stages = out.completed.clone();
    manifest.timings.extend(out.timings.iter().map(|(k, v)| (k.clone(), *v)));
    manifest.calibration_simulations = out.calibration_simulations;
    let Some(report) = &out.report else {
        return Ok(());
    };
    manifest.measurement_count = Some(report.measurement_count);
    manifest.log_bound = Some(report.log_bound);
    manifest.total_samples = report.total_samples();
    manifest.total_unfalsified = report.total_unfalsified();
    manifest.total_falsified = report.total_falsified();
    manifest.savings_ratio = Some(report.total_falsified() as f64 / report.total_samples().max(1) as f64);
    for (i, class) in report.classes.iter().enumerate() {
        let spec = study.class_spec(&class.class_id);
        manifest.classes.push(ClassSummary {
            class_id: class.class_id.clone(),
            binding: spec.map(|s| s.physics_binding.clone()).unwrap_or_default(),
            parameter_names: class.parameter_names.clone(),
            samples: class.samples(),
            unfalsified: class.unfalsified_count(),
            falsified: class.falsified_count(),
            diverged: out.diverged.get(i).copied().unwrap_or(0),
            unfalsified_fraction: class.unfalsified_fraction(),
            estimate: out.estimates.get(&class.class_id).cloned(),
        });
        write_artifact(dir, format!("ledger_{}.csv", class.class_id), &ledger_csv(class), manifest)?;
    }
    for w in &out.weights {
        write_artifact(dir, format!("weights_{}.csv", w.class_id), &weights_csv(w), manifest)?;
    }
    manifest.prediction_simulations = out.prediction_simulations;
    for p in &out.predictions {
        let input = study.predictions.iter().find(|i| i.label == p.result.label);
        let name = format!("prediction_{}_{}.csv", p.result.label, p.result.class_id);
        let truth = input.and_then(|i| i.truth.as_ref()).map(|t| t.d.as_slice());
        write_artifact(dir, name.clone(), &prediction_csv(p, truth), manifest)?;
        manifest.predictions.push(PredictionSummary {
            label: p.result.label.clone(),
            class_id: p.result.class_id.clone(),
            simulations: p.result.simulations,
            relative_rms_error: p.relative_rms_error,
            artifact: name,
        });
    }
    Ok(())
}

fn write_manifest(manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::Domain {
        variant: "manifest",
        message: e.to_string(),
    })?;
    write_atomic(&manifest.output_dir.join(MANIFEST_FILE), json.as_bytes())
}

/// Runs every stage up to and including `until` and writes the artifacts.
///
/// Earlier stages are recomputed on every call; they are deterministic, so
/// their files are rewritten with identical bytes. When a stage fails the
/// manifest still records the stages that completed and the error.
pub fn run_pipeline(config: &RunConfig, until: Stage) -> Result<RunManifest> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = RunManifest {
        config_path: config.source.clone(),
        config_hash: config_hash(config)?,
        master_seed: config.master_seed,
        requested_stage: until,
        completed_stages: Vec::new(),
        error: None,
        timings: BTreeMap::new(),
        alpha: config.falsification.alpha,
        measurement_count: None,
        log_bound: None,
        classes: Vec::new(),
        total_samples: 0,
        total_unfalsified: 0,
        total_falsified: 0,
        savings_ratio: None,
        calibration_simulations: 0,
        prediction_inputs: config.predictions.len(),
        prediction_simulations: 0,
        predictions: Vec::new(),
        artifacts: Vec::new(),
        output_dir: dir.clone(),
        resolved_config: serde_json::to_value(config).map_err(|e| Error::Domain {
            variant: "manifest",
            message: e.to_string(),
        })?,
    };

    let t = Instant::now();
    let study = match build_study(config) {
        Ok(s) => s,
        Err(e) => {
            manifest.error = Some(e.to_string());
            write_manifest(&manifest)?;
            return Err(e);
        }
    };
    manifest.timings.insert("load".into(), t.elapsed().as_secs_f64());

    let mut outcome = StudyOutcome::default();
    let result = study.run_into(until, &mut outcome);
    if let Err(e) = &result {
        manifest.error = Some(e.to_string());
    }
    record_outcome(config, &study, &outcome, &mut manifest)?;
    let report = emit_report(&manifest);
    write_artifact(dir, REPORT_FILE.into(), &report, &mut manifest)?;
    write_manifest(&manifest)?;
    result.map(|_| manifest)
}

/// Human-readable summary: the falsification table with the savings line and
/// parameter estimates, then the prediction errors when predictions ran.
pub fn emit_report(manifest: &RunManifest) -> String {
    let mut s = String::new();
    s.push_str(&format!("config  {}\nsha256  {}\nseed    {}\n", manifest.config_path.display(), manifest.config_hash, manifest.master_seed));
    if let Some(e) = &manifest.error {
        s.push_str(&format!("error   {e}\n"));
    }
    if manifest.classes.is_empty() {
        return s;
    }
    s.push_str(&format!(
        "\nFalsification  (phi = {:.6}, alpha = {:.4e}, N_o = {}, ln bound = {:.4})\n",
        1.0 - manifest.alpha,
        manifest.alpha,
        manifest.measurement_count.unwrap_or(0),
        manifest.log_bound.unwrap_or(f64::NAN)
    ));
    let width = manifest.classes.iter().map(|c| c.class_id.len()).max().unwrap_or(5).max(5);
    s.push_str(&format!("{:<width$}  {:>7}  {:>7}  {:>7}  {:>11}\n", "class", "N_s", "N_u", "N_f", "unfalsified"));
    for c in &manifest.classes {
        s.push_str(&format!(
            "{:<width$}  {:>7}  {:>7}  {:>7}  {:>10.1}%\n",
            c.class_id,
            c.samples,
            c.unfalsified,
            c.falsified,
            100.0 * c.unfalsified_fraction
        ));
    }
    s.push_str(&format!(
        "{:<width$}  {:>7}  {:>7}  {:>7}\n",
        "total", manifest.total_samples, manifest.total_unfalsified, manifest.total_falsified
    ));
    if let Some(r) = manifest.savings_ratio {
        s.push_str(&format!(
            "simulation savings N_f/N_s = {}/{} = {:.1}%\n",
            manifest.total_falsified,
            manifest.total_samples,
            100.0 * r
        ));
    }
    let estimates: Vec<&ClassSummary> = manifest.classes.iter().filter(|c| c.estimate.is_some()).collect();
    if !estimates.is_empty() {
        s.push_str("\nParameter estimates (weighted over unfalsified models)\n");
        for c in estimates {
            let theta = c.estimate.as_deref().unwrap_or_default();
            let cells: Vec<String> = c.parameter_names.iter().zip(theta).map(|(n, v)| format!("{n} = {v:.4}")).collect();
            s.push_str(&format!("{:<width$}  {}\n", c.class_id, cells.join(", ")));
        }
    }
    if !manifest.predictions.is_empty() {
        s.push_str(&format!(
            "\nPrediction  ({} simulations for {} input(s))\n",
            manifest.prediction_simulations, manifest.prediction_inputs
        ));
        for p in &manifest.predictions {
            let err = p.relative_rms_error.map_or("n/a".to_string(), |e| format!("{:.4}%", 100.0 * e));
            s.push_str(&format!(
                "{:<12}  {:<width$}  {:>6} members  relative RMS error {err}  -> {}\n",
                p.label, p.class_id, p.simulations, p.artifact
            ));
        }
    }
    s
}
