//! Likelihood weights over the unfalsified models, parameter estimates and
//! weighted response prediction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ModelClassSpec;
use crate::error::{Error, Result};
use crate::falsify::{ClassReport, FalsificationVerdict};
use crate::series::SimulationOutput;

/// Whether the prior density multiplies the likelihood in the weights.
/// Samples are drawn from the prior, so `Cancel` is the consistent default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    #[default]
    Cancel,
    Include,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEntry {
    pub sample_index: usize,
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub weight: f64,
}

/// Normalized weights of one class, ordered by `sample_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedEnsemble {
    pub class_id: String,
    pub parameter_names: Vec<String>,
    pub entries: Vec<WeightedEntry>,
}

impl WeightedEnsemble {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }
}

/// `ln Σ exp(x_i)`, stable for arbitrarily negative inputs.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn weigh<'a>(
    class_id: &str,
    parameter_names: &[String],
    verdicts: impl Iterator<Item = &'a FalsificationVerdict>,
    spec: Option<&ModelClassSpec>,
    mode: WeightMode,
) -> Result<WeightedEnsemble> {
    let mut members: Vec<&FalsificationVerdict> = verdicts.filter(|v| v.log_likelihood.is_finite()).collect();
    members.sort_by_key(|v| v.sample_index);
    if members.is_empty() {
        return Err(Error::AllFalsified {
            class_id: class_id.to_string(),
        });
    }
    let log_w: Vec<f64> = members
        .iter()
        .map(|v| match (mode, spec) {
            (WeightMode::Include, Some(spec)) => v.log_likelihood + spec.ln_prior(&v.theta),
            _ => v.log_likelihood,
        })
        .collect();
    let lse = log_sum_exp(&log_w);
    let entries = members
        .iter()
        .zip(&log_w)
        .map(|(v, lw)| WeightedEntry {
            sample_index: v.sample_index,
            theta: v.theta.clone(),
            log_likelihood: v.log_likelihood,
            weight: (lw - lse).exp(),
        })
        .collect();
    Ok(WeightedEnsemble {
        class_id: class_id.to_string(),
        parameter_names: parameter_names.to_vec(),
        entries,
    })
}

/// Bayesian weights over every model of the class, falsified or not.
pub fn bayesian_weights(report: &ClassReport, spec: Option<&ModelClassSpec>, mode: WeightMode) -> Result<WeightedEnsemble> {
    weigh(&report.class_id, &report.parameter_names, report.verdicts.iter(), spec, mode)
}

/// Weights restricted to the unfalsified models; falsified models are absent.
pub fn post_falsification_weights(
    report: &ClassReport,
    spec: Option<&ModelClassSpec>,
    mode: WeightMode,
) -> Result<WeightedEnsemble> {
    weigh(&report.class_id, &report.parameter_names, report.unfalsified(), spec, mode)
}

/// `θ̂ = Σ w_i θ_i`.
pub fn estimate_parameters(ensemble: &WeightedEnsemble) -> Result<Vec<f64>> {
    let first = ensemble.entries.first().ok_or_else(|| Error::AllFalsified {
        class_id: ensemble.class_id.clone(),
    })?;
    let mut theta = vec![0.0; first.theta.len()];
    for e in &ensemble.entries {
        for (t, x) in theta.iter_mut().zip(&e.theta) {
            *t += e.weight * x;
        }
    }
    Ok(theta)
}

/// Highest log-likelihood; ties go to the lowest `(class_id, sample_index)`.
pub fn max_likelihood_model<'a>(verdicts: impl IntoIterator<Item = &'a FalsificationVerdict>) -> Option<&'a FalsificationVerdict> {
    verdicts.into_iter().fold(None, |best: Option<&FalsificationVerdict>, v| match best {
        None => Some(v),
        Some(b) => {
            let better = v.log_likelihood > b.log_likelihood
                || (v.log_likelihood == b.log_likelihood
                    && (v.class_id.as_str(), v.sample_index) < (b.class_id.as_str(), b.sample_index));
            Some(if better { v } else { b })
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub label: String,
    pub class_id: String,
    pub dt: f64,
    pub channels: Vec<String>,
    /// Weighted mean, stacked like the member outputs.
    pub mean: Vec<f64>,
    /// Weighted pointwise standard deviation.
    pub std_dev: Vec<f64>,
    /// Member simulations performed.
    pub simulations: usize,
}

impl PredictionResult {
    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.mean.iter().skip(ch).step_by(self.channels.len()).copied().collect()
    }
}

/// Simulates every member with `simulate` (in parallel) and reduces the
/// outputs in ascending `sample_index` order.
pub fn predict_response<F>(ensemble: &WeightedEnsemble, label: &str, simulate: F) -> Result<PredictionResult>
where
    F: Fn(&[f64]) -> Result<SimulationOutput> + Sync,
{
    if ensemble.is_empty() {
        return Err(Error::AllFalsified {
            class_id: ensemble.class_id.clone(),
        });
    }
    let runs: Vec<Result<SimulationOutput>> = ensemble.entries.par_iter().map(|e| simulate(&e.theta)).collect();
    let failed: Vec<usize> = runs
        .iter()
        .zip(&ensemble.entries)
        .filter(|(r, _)| r.is_err())
        .map(|(_, e)| e.sample_index)
        .collect();
    if !failed.is_empty() {
        return Err(Error::MemberDiverged {
            count: failed.len(),
            samples: failed.iter().map(|i| format!("{}#{i}", ensemble.class_id)).collect::<Vec<_>>().join(", "),
        });
    }
    let outputs: Vec<SimulationOutput> = runs.into_iter().map(|r| r.expect("checked")).collect();
    let first = &outputs[0];
    if outputs.iter().any(|o| o.values.len() != first.values.len() || o.channels != first.channels) {
        return Err(Error::Dimension("member outputs differ in layout".into()));
    }
    let n = first.values.len();
    let mut mean = vec![0.0; n];
    for (e, o) in ensemble.entries.iter().zip(&outputs) {
        for (m, v) in mean.iter_mut().zip(&o.values) {
            *m += e.weight * v;
        }
    }
    let mut var = vec![0.0; n];
    for (e, o) in ensemble.entries.iter().zip(&outputs) {
        for ((s, v), m) in var.iter_mut().zip(&o.values).zip(&mean) {
            *s += e.weight * (v - m) * (v - m);
        }
    }
    Ok(PredictionResult {
        label: label.to_string(),
        class_id: ensemble.class_id.clone(),
        dt: first.dt,
        channels: first.channels.clone(),
        mean,
        std_dev: var.into_iter().map(|v| v.max(0.0).sqrt()).collect(),
        simulations: outputs.len(),
    })
}

/// `‖u − û‖₂ / ‖u‖₂`.
pub fn relative_rms_error(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::Dimension(format!(
            "truth has {} samples, estimate {}",
            truth.len(),
            estimate.len()
        )));
    }
    let norm: f64 = truth.iter().map(|u| u * u).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::Domain {
            variant: "relative_rms_error",
            message: "reference series has zero norm".into(),
        });
    }
    let err: f64 = truth.iter().zip(estimate).map(|(u, e)| (u - e).powi(2)).sum::<f64>().sqrt();
    Ok(err / norm)
}
