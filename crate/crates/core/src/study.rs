//! In-memory falsification study: ensemble generation, calibration
//! simulation, falsification, weighting and prediction.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{generate_ensemble, EnsembleSpec, ModelClassSpec, ModelSample};
use crate::error::{Error, Result};
use crate::falsify::{falsify, residuals, ClassResiduals, FalsificationReport, FdrConfig, ResidualNoiseModel};
use crate::modal::{modal_residual, ModalResult};
use crate::physics::{simulate, SimulationSettings};
use crate::predict::{
    estimate_parameters, post_falsification_weights, predict_response, relative_rms_error, PredictionResult,
    WeightMode, WeightedEnsemble,
};
use crate::registry::{instantiate, resolve_all, Binding, ModelInstance, PhysicsContext};
use crate::series::{ExcitationRecord, MeasurementSet, SimulationOutput};

/// Data the ensemble is falsified against.
#[derive(Debug, Clone)]
pub enum Calibration {
    TimeHistory {
        excitation: ExcitationRecord,
        measurements: MeasurementSet,
        settings: SimulationSettings,
    },
    /// Residual is `[f_model − f_ref, 1 − MAC]`, compared against zero.
    Modal { reference: ModalResult },
}

impl Calibration {
    pub fn measurement_count(&self) -> usize {
        match self {
            Calibration::TimeHistory { measurements, .. } => measurements.len(),
            Calibration::Modal { reference } => 2 * reference.mode_count(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PredictionInput {
    pub label: String,
    pub excitation: ExcitationRecord,
    pub settings: SimulationSettings,
    /// Reference response on the same channels, when known.
    pub truth: Option<MeasurementSet>,
}

#[derive(Debug, Clone)]
pub struct Study {
    pub ensemble: EnsembleSpec,
    pub physics: PhysicsContext,
    pub calibration: Calibration,
    /// Output channels of time-history models, in stacking order.
    pub channels: Vec<String>,
    pub noise: ResidualNoiseModel,
    pub fdr: FdrConfig,
    pub weight_mode: WeightMode,
    pub predictions: Vec<PredictionInput>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Simulate,
    Falsify,
    Predict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassPrediction {
    pub result: PredictionResult,
    pub relative_rms_error: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct StudyOutcome {
    pub samples: Vec<Vec<ModelSample>>,
    /// Calibration simulations that diverged, per class.
    pub diverged: Vec<usize>,
    pub report: Option<FalsificationReport>,
    pub weights: Vec<WeightedEnsemble>,
    pub estimates: BTreeMap<String, Vec<f64>>,
    pub predictions: Vec<ClassPrediction>,
    pub calibration_simulations: usize,
    pub prediction_simulations: usize,
    pub timings: BTreeMap<String, f64>,
    pub completed: Vec<Stage>,
}

/// Time-history response of one draw of `spec` to `excitation`.
pub fn simulate_draw(
    ctx: &PhysicsContext,
    spec: &ModelClassSpec,
    binding: Binding,
    theta: &[f64],
    excitation: &ExcitationRecord,
    channels: &[String],
    settings: &SimulationSettings,
) -> Result<SimulationOutput> {
    match instantiate(binding, spec, theta, ctx)? {
        ModelInstance::Dynamic(system) => simulate(system.as_ref(), excitation, channels, settings),
        ModelInstance::Modal(_) => Err(Error::config(
            format!("model_class.{}.physics_binding", spec.class_id),
            "modal bindings have no time-history response",
        )),
    }
}

impl Study {
    pub fn class_spec(&self, class_id: &str) -> Option<&ModelClassSpec> {
        self.ensemble.class_specs.iter().find(|c| c.class_id == class_id)
    }

    pub fn bindings(&self) -> Result<BTreeMap<String, Binding>> {
        resolve_all(&self.ensemble.class_specs)
    }

    /// Time-history response of one draw to `excitation`.
    pub fn simulate_model(
        &self,
        spec: &ModelClassSpec,
        binding: Binding,
        theta: &[f64],
        excitation: &ExcitationRecord,
        settings: &SimulationSettings,
    ) -> Result<SimulationOutput> {
        simulate_draw(&self.physics, spec, binding, theta, excitation, &self.channels, settings)
    }

    /// Residual of one draw against the calibration data. `Ok(None)` marks a
    /// simulation that diverged.
    pub fn calibration_residual(&self, spec: &ModelClassSpec, binding: Binding, theta: &[f64]) -> Result<Option<Vec<f64>>> {
        match &self.calibration {
            Calibration::TimeHistory {
                excitation,
                measurements,
                settings,
            } => match self.simulate_model(spec, binding, theta, excitation, settings) {
                Ok(h) => residuals(&h, measurements).map(Some),
                Err(Error::Unstable { .. }) => Ok(None),
                Err(e) => Err(e),
            },
            Calibration::Modal { reference } => match instantiate(binding, spec, theta, &self.physics)? {
                ModelInstance::Modal(modes) => Ok(Some(modal_residual(&modes, reference)?.values)),
                ModelInstance::Dynamic(_) => Err(Error::config(
                    format!("model_class.{}.physics_binding", spec.class_id),
                    "modal calibration needs a modal binding",
                )),
            },
        }
    }

    pub fn calibration_residuals(&self, samples: &[Vec<ModelSample>]) -> Result<Vec<Vec<Option<Vec<f64>>>>> {
        let bindings = self.bindings()?;
        self.ensemble
            .class_specs
            .iter()
            .zip(samples)
            .map(|(spec, class_samples)| {
                let binding = bindings[&spec.class_id];
                class_samples
                    .par_iter()
                    .map(|s| self.calibration_residual(spec, binding, &s.theta))
                    .collect()
            })
            .collect()
    }

    pub fn falsify(&self, samples: &[Vec<ModelSample>], eps: &[Vec<Option<Vec<f64>>>]) -> Result<FalsificationReport> {
        let classes: Vec<ClassResiduals<'_>> = self
            .ensemble
            .class_specs
            .iter()
            .zip(samples)
            .zip(eps)
            .map(|((spec, s), e)| ClassResiduals {
                class_id: &spec.class_id,
                parameter_names: &spec.parameter_names,
                samples: s,
                residuals: e,
            })
            .collect();
        falsify(&classes, &self.noise, &self.fdr, self.calibration.measurement_count())
    }

    /// Weighted prediction of `input` from the given ensemble.
    pub fn predict(&self, weights: &WeightedEnsemble, input: &PredictionInput) -> Result<ClassPrediction> {
        let spec = self
            .class_spec(&weights.class_id)
            .ok_or_else(|| Error::config("model_class", format!("unknown class `{}`", weights.class_id)))?;
        let binding = Binding::parse(&spec.physics_binding)?;
        let result = predict_response(weights, &input.label, |theta| {
            self.simulate_model(spec, binding, theta, &input.excitation, &input.settings)
        })?;
        let relative_rms_error = match &input.truth {
            Some(truth) => {
                if truth.channels != result.channels {
                    return Err(Error::Dimension(format!(
                        "truth channels [{}] differ from predicted channels [{}]",
                        truth.channels.join(", "),
                        result.channels.join(", ")
                    )));
                }
                Some(relative_rms_error(&truth.d, &result.mean)?)
            }
            None => None,
        };
        Ok(ClassPrediction {
            result,
            relative_rms_error,
        })
    }

    /// Runs every stage up to and including `until`.
    pub fn run(&self, until: Stage) -> Result<StudyOutcome> {
        let mut out = StudyOutcome::default();
        self.run_into(until, &mut out)?;
        Ok(out)
    }

    /// Like [`Study::run`], leaving partial results in `out` when a stage fails.
    pub fn run_into(&self, until: Stage, out: &mut StudyOutcome) -> Result<()> {
        self.bindings()?;
        if matches!(self.calibration, Calibration::Modal { .. }) && !self.predictions.is_empty() {
            return Err(Error::config("prediction", "modal calibration does not support time-history prediction"));
        }

        let t = Instant::now();
        out.samples = generate_ensemble(&self.ensemble)?;
        let eps = self.calibration_residuals(&out.samples)?;
        out.diverged = eps.iter().map(|c| c.iter().filter(|e| e.is_none()).count()).collect();
        out.calibration_simulations = out.samples.iter().map(Vec::len).sum();
        out.timings.insert("simulate".into(), t.elapsed().as_secs_f64());
        out.completed.push(Stage::Simulate);
        if until == Stage::Simulate {
            return Ok(());
        }

        let t = Instant::now();
        let report = self.falsify(&out.samples, &eps)?;
        for class in &report.classes {
            if class.unfalsified_count() == 0 {
                continue;
            }
            let w = post_falsification_weights(class, self.class_spec(&class.class_id), self.weight_mode)?;
            out.estimates.insert(class.class_id.clone(), estimate_parameters(&w)?);
            out.weights.push(w);
        }
        out.report = Some(report);
        out.timings.insert("falsify".into(), t.elapsed().as_secs_f64());
        out.completed.push(Stage::Falsify);
        if until == Stage::Falsify {
            return Ok(());
        }

        let t = Instant::now();
        for input in &self.predictions {
            for w in &out.weights {
                let p = self.predict(w, input)?;
                out.prediction_simulations += p.result.simulations;
                out.predictions.push(p);
            }
        }
        out.timings.insert("predict".into(), t.elapsed().as_secs_f64());
        out.completed.push(Stage::Predict);
        Ok(())
    }
}
