//! Model classes, priors and deterministic ensemble sampling.
//!
//! Every sample draws from its own generator whose seed is a pure function of
//! `(master_seed, class_id, sample_index)`, so ensembles are identical no
//! matter how many threads produce them or in which order.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian;

const MAX_REDRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorKind {
    Normal,
    Lognormal,
    Uniform,
}

/// A prior given by the mean and standard deviation of the variate itself.
///
/// Lognormal priors are moment-matched in log space:
/// `σ_ln² = ln(1 + (s/m)²)` and `μ_ln = ln m − σ_ln²/2`.
/// Uniform priors span `[m − s√3, m + s√3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub kind: PriorKind,
    pub mean: f64,
    pub std_dev: f64,
    /// Normal priors only: reject non-positive draws and redraw.
    #[serde(default)]
    pub positive: bool,
}

impl PriorSpec {
    pub fn new(kind: PriorKind, mean: f64, std_dev: f64) -> Self {
        PriorSpec {
            kind,
            mean,
            std_dev,
            positive: false,
        }
    }

    pub fn normal(mean: f64, std_dev: f64) -> Self {
        Self::new(PriorKind::Normal, mean, std_dev)
    }

    pub fn lognormal(mean: f64, std_dev: f64) -> Self {
        Self::new(PriorKind::Lognormal, mean, std_dev)
    }

    pub fn uniform(mean: f64, std_dev: f64) -> Self {
        Self::new(PriorKind::Uniform, mean, std_dev)
    }

    pub fn positive(mut self) -> Self {
        self.positive = true;
        self
    }

    pub fn validate(&self, parameter: &str) -> Result<()> {
        let fail = |reason: &str| {
            Err(Error::InvalidPrior {
                parameter: parameter.to_string(),
                reason: reason.to_string(),
            })
        };
        if !self.mean.is_finite() || !self.std_dev.is_finite() {
            return fail("mean and std_dev must be finite");
        }
        if self.std_dev <= 0.0 {
            return fail("std_dev must be > 0");
        }
        match self.kind {
            PriorKind::Lognormal if self.mean <= 0.0 => fail("lognormal mean must be > 0"),
            PriorKind::Normal if self.positive && self.mean <= 0.0 => {
                fail("positive-truncated normal needs a positive mean")
            }
            _ => Ok(()),
        }
    }

    /// `(μ_ln, σ_ln)` of the underlying normal for a lognormal prior.
    pub fn log_space_moments(&self) -> (f64, f64) {
        let cv2 = (self.std_dev / self.mean).powi(2);
        let var_ln = cv2.ln_1p();
        (self.mean.ln() - 0.5 * var_ln, var_ln.sqrt())
    }

    /// Interval `[m − s√3, m + s√3]` of a uniform prior.
    pub fn uniform_bounds(&self) -> (f64, f64) {
        let half = self.std_dev * 3f64.sqrt();
        (self.mean - half, self.mean + half)
    }

    pub fn in_support(&self, x: f64) -> bool {
        match self.kind {
            PriorKind::Normal => x.is_finite() && (!self.positive || x > 0.0),
            PriorKind::Lognormal => x.is_finite() && x > 0.0,
            PriorKind::Uniform => {
                let (lo, hi) = self.uniform_bounds();
                (lo..=hi).contains(&x)
            }
        }
    }

    /// Log density at `x`; `-inf` outside the support.
    ///
    /// Positive-truncated normals are left unnormalized (the constant cancels
    /// in weight normalization).
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            PriorKind::Normal => {
                gaussian::ln_pdf((x - self.mean) / self.std_dev) - self.std_dev.ln()
            }
            PriorKind::Lognormal => {
                let (mu, sigma) = self.log_space_moments();
                gaussian::ln_pdf((x.ln() - mu) / sigma) - sigma.ln() - x.ln()
            }
            PriorKind::Uniform => {
                let (lo, hi) = self.uniform_bounds();
                -(hi - lo).ln()
            }
        }
    }
}

/// Draws one value from `spec`.
pub fn sample_prior<R: Rng + ?Sized>(spec: &PriorSpec, rng: &mut R, parameter: &str) -> Result<f64> {
    spec.validate(parameter)?;
    let value = match spec.kind {
        PriorKind::Normal => {
            let mut draw = spec.mean + spec.std_dev * rng.sample::<f64, _>(StandardNormal);
            if spec.positive {
                let mut tries = 0;
                while draw <= 0.0 {
                    tries += 1;
                    if tries > MAX_REDRAWS {
                        return Err(Error::InvalidPrior {
                            parameter: parameter.to_string(),
                            reason: "positive truncation rejected every draw".into(),
                        });
                    }
                    draw = spec.mean + spec.std_dev * rng.sample::<f64, _>(StandardNormal);
                }
            }
            draw
        }
        PriorKind::Lognormal => {
            let (mu, sigma) = spec.log_space_moments();
            (mu + sigma * rng.sample::<f64, _>(StandardNormal)).exp()
        }
        PriorKind::Uniform => {
            let (lo, hi) = spec.uniform_bounds();
            lo + (hi - lo) * rng.random::<f64>()
        }
    };
    if !value.is_finite() {
        return Err(Error::InvalidPrior {
            parameter: parameter.to_string(),
            reason: "draw is not finite".into(),
        });
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelClassSpec {
    pub class_id: String,
    pub parameter_names: Vec<String>,
    pub priors: Vec<PriorSpec>,
    pub physics_binding: String,
    #[serde(default)]
    pub fixed_constants: BTreeMap<String, f64>,
}

impl ModelClassSpec {
    pub fn validate(&self) -> Result<()> {
        if self.parameter_names.len() != self.priors.len() {
            return Err(Error::config(
                format!("model_class.{}.parameters", self.class_id),
                format!(
                    "{} parameter names but {} priors",
                    self.parameter_names.len(),
                    self.priors.len()
                ),
            ));
        }
        let mut seen = HashSet::new();
        for name in &self.parameter_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::config(
                    format!("model_class.{}.parameters", self.class_id),
                    format!("duplicate parameter `{name}`"),
                ));
            }
        }
        for (name, prior) in self.parameter_names.iter().zip(&self.priors) {
            prior.validate(name)?;
        }
        Ok(())
    }

    /// Joint log prior density of `theta` (independent parameters).
    pub fn ln_prior(&self, theta: &[f64]) -> f64 {
        self.priors.iter().zip(theta).map(|(p, &x)| p.ln_pdf(x)).sum()
    }

    pub fn parameter_index(&self, name: &str) -> Option<usize> {
        self.parameter_names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSample {
    pub class_id: String,
    pub theta: Vec<f64>,
    pub sample_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub class_specs: Vec<ModelClassSpec>,
    pub samples_per_class: usize,
    pub master_seed: u64,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.samples_per_class == 0 {
            return Err(Error::config("ensemble.samples_per_class", "must be >= 1"));
        }
        let mut ids = HashSet::new();
        for spec in &self.class_specs {
            if !ids.insert(spec.class_id.as_str()) {
                return Err(Error::config(
                    "model_class",
                    format!("duplicate class id `{}`", spec.class_id),
                ));
            }
            spec.validate()?;
        }
        Ok(())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Seed for one sample, a pure function of its identity.
pub fn sample_seed(master_seed: u64, class_id: &str, sample_index: usize) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ fnv1a(class_id.as_bytes()));
    splitmix64(h ^ sample_index as u64)
}

/// Draws a single sample of `spec` at `sample_index`.
pub fn draw_sample(spec: &ModelClassSpec, master_seed: u64, sample_index: usize) -> Result<ModelSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(master_seed, &spec.class_id, sample_index));
    let theta = spec
        .parameter_names
        .iter()
        .zip(&spec.priors)
        .map(|(name, prior)| {
            sample_prior(prior, &mut rng, name).map_err(|_| Error::Sampling {
                class_id: spec.class_id.clone(),
                sample_index,
                parameter: name.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelSample {
        class_id: spec.class_id.clone(),
        theta,
        sample_index,
    })
}

/// Generates `samples_per_class` samples for every class, in class order.
pub fn generate_ensemble(spec: &EnsembleSpec) -> Result<Vec<Vec<ModelSample>>> {
    spec.validate()?;
    spec.class_specs
        .iter()
        .map(|class| {
            (0..spec.samples_per_class)
                .into_par_iter()
                .map(|i| draw_sample(class, spec.master_seed, i))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}
