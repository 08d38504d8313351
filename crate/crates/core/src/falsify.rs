//! Residuals, Gaussian likelihoods, BH error bounds and the likelihood-bound
//! falsification test.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ModelSample;
use crate::error::{Error, Result};
use crate::gaussian::{self, LN_2PI};
use crate::series::{MeasurementSet, SimulationOutput};

/// Ordering of channels inside a stacked vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelLayout {
    /// `[c0(t0), c1(t0), c0(t1), ...]`.
    Interleaved,
    /// `[c0(t0), c0(t1), ..., c1(t0), ...]`.
    Blocked,
}

/// Diagonal Gaussian residual covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResidualNoiseModel {
    DiagonalIid { sigma: f64 },
    DiagonalPerChannel { sigmas: Vec<f64>, layout: ChannelLayout },
}

impl ResidualNoiseModel {
    pub fn iid(sigma: f64) -> Self {
        ResidualNoiseModel::DiagonalIid { sigma }
    }

    pub fn per_channel(sigmas: Vec<f64>, layout: ChannelLayout) -> Self {
        ResidualNoiseModel::DiagonalPerChannel { sigmas, layout }
    }

    pub fn validate(&self) -> Result<()> {
        let sigmas: &[f64] = match self {
            ResidualNoiseModel::DiagonalIid { sigma } => std::slice::from_ref(sigma),
            ResidualNoiseModel::DiagonalPerChannel { sigmas, .. } => sigmas,
        };
        if sigmas.is_empty() || sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::config("noise", "standard deviations must be positive and finite"));
        }
        Ok(())
    }

    /// Standard deviation of every entry of a length-`n` stacked vector.
    pub fn entry_sigmas(&self, n: usize) -> Result<Vec<f64>> {
        self.validate()?;
        match self {
            ResidualNoiseModel::DiagonalIid { sigma } => Ok(vec![*sigma; n]),
            ResidualNoiseModel::DiagonalPerChannel { sigmas, layout } => {
                let c = sigmas.len();
                if n % c != 0 {
                    return Err(Error::Dimension(format!("{n} residuals do not split into {c} channels")));
                }
                let steps = n / c;
                Ok((0..n)
                    .map(|i| match layout {
                        ChannelLayout::Interleaved => sigmas[i % c],
                        ChannelLayout::Blocked => sigmas[i / steps],
                    })
                    .collect())
            }
        }
    }
}

/// Target identification probability `φ = 1 − α`. `α` is stored directly so
/// that values far below machine epsilon remain representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdrConfig {
    pub alpha: f64,
}

impl FdrConfig {
    pub fn new(alpha: f64) -> Result<Self> {
        let config = FdrConfig { alpha };
        config.validate()?;
        Ok(config)
    }

    pub fn from_phi(phi: f64) -> Result<Self> {
        if !(phi > 0.0 && phi < 1.0) {
            return Err(Error::config("falsification.phi", format!("must lie in (0, 1), got {phi}")));
        }
        Self::new(1.0 - phi)
    }

    pub fn phi(&self) -> f64 {
        1.0 - self.alpha
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config(
                "falsification.alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// Per-rank significance `ᾱ_i = (i / n) α`, `i = 1..=n`.
    pub fn rank_levels(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|i| i as f64 / n as f64 * self.alpha).collect()
    }
}

/// `ε = h − d`, after checking that both describe the same channels.
pub fn residuals(h: &SimulationOutput, d: &MeasurementSet) -> Result<Vec<f64>> {
    if h.channels != d.channels {
        return Err(Error::Dimension(format!(
            "model channels [{}] differ from measured channels [{}]",
            h.channels.join(", "),
            d.channels.join(", ")
        )));
    }
    residuals_raw(&h.values, &d.d)
}

pub fn residuals_raw(h: &[f64], d: &[f64]) -> Result<Vec<f64>> {
    if h.len() != d.len() {
        return Err(Error::Dimension(format!("{} model outputs vs {} measurements", h.len(), d.len())));
    }
    Ok(h.iter().zip(d).map(|(a, b)| a - b).collect())
}

/// Gaussian log-likelihood of `eps` under a diagonal covariance.
pub fn log_likelihood(eps: &[f64], noise: &ResidualNoiseModel) -> Result<f64> {
    if let Some(i) = eps.iter().position(|e| !e.is_finite()) {
        return Err(Error::Domain {
            variant: "log_likelihood",
            message: format!("non-finite residual at index {i}"),
        });
    }
    let sigmas = noise.entry_sigmas(eps.len())?;
    Ok(log_likelihood_with(eps, &sigmas))
}

fn log_likelihood_with(eps: &[f64], sigmas: &[f64]) -> f64 {
    let n = eps.len() as f64;
    let mut log_det = 0.0;
    let mut quad = 0.0;
    for (e, s) in eps.iter().zip(sigmas) {
        log_det += s.ln();
        let r = e / s;
        quad += r * r;
    }
    -0.5 * n * LN_2PI - log_det - 0.5 * quad
}

/// Two-sided p-values of each residual under its zero-mean Gaussian marginal.
pub fn p_values(eps: &[f64], noise: &ResidualNoiseModel) -> Result<Vec<f64>> {
    let sigmas = noise.entry_sigmas(eps.len())?;
    Ok(eps.iter().zip(&sigmas).map(|(e, s)| gaussian::two_sided_p(e / s)).collect())
}

/// Standardized BH bounds `Φ⁻¹(1 − ᾱ_i / 2)` in rank order.
pub fn rank_quantiles(config: &FdrConfig, n: usize) -> Vec<f64> {
    config
        .rank_levels(n)
        .into_iter()
        .map(|a| gaussian::upper_quantile(0.5 * a))
        .collect()
}

/// Symmetric BH error bounds `(ε̲_i, ε̄_i)` in rank order for residuals of
/// standard deviation `sigma`.
pub fn bh_error_bounds(sigma: f64, config: &FdrConfig, n: usize) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    if !(sigma > 0.0) {
        return Err(Error::config("noise.sigma", "must be positive"));
    }
    Ok(rank_quantiles(config, n)
        .into_iter()
        .map(|z| (-sigma * z, sigma * z))
        .collect())
}

/// Log likelihood bound of one model and the number of entries outside
/// the bound assigned to their rank.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEvaluation {
    pub log_bound: f64,
    pub rejected_count: usize,
}

/// Indices of `eps` sorted by ascending p-value (largest standardized
/// residual first); ties keep entry order.
fn rank_order(eps: &[f64], sigmas: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..eps.len()).collect();
    let score: Vec<f64> = eps.iter().zip(sigmas).map(|(e, s)| (e / s).abs()).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]));
    order
}

fn log_bound_from(z: &[f64], sigmas: &[f64]) -> f64 {
    let rank_term: f64 = z.iter().map(|&z| gaussian::ln_pdf(z)).sum();
    let scale_term: f64 = sigmas.iter().map(|s| s.ln()).sum();
    rank_term - scale_term
}

fn count_rejections(eps: &[f64], sigmas: &[f64], z: &[f64]) -> usize {
    rank_order(eps, sigmas)
        .iter()
        .zip(z)
        .filter(|(&j, &bound)| (eps[j] / sigmas[j]).abs() > bound)
        .count()
}

/// Likelihood bound for `eps`: entries are ranked by p-value, rank `i`
/// receives the interval `±σ_j z_i`, and the bound is the product of the
/// Gaussian densities at the interval endpoints (summed in log space).
pub fn likelihood_bound(eps: &[f64], noise: &ResidualNoiseModel, config: &FdrConfig) -> Result<BoundEvaluation> {
    config.validate()?;
    let sigmas = noise.entry_sigmas(eps.len())?;
    let z = rank_quantiles(config, eps.len());
    // Rank i contributes φ(z_i) / σ_(i). The σ_(i) run over a permutation of
    // the entry σ's, so they are summed in entry order, which keeps the
    // result independent of `eps` and identical to the cached value.
    Ok(BoundEvaluation {
        log_bound: log_bound_from(&z, &sigmas),
        rejected_count: count_rejections(eps, &sigmas, &z),
    })
}

/// Precomputed bound for a fixed `(noise, config, n)`; reused across models.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCache {
    pub noise: ResidualNoiseModel,
    pub config: FdrConfig,
    sigmas: Vec<f64>,
    z: Vec<f64>,
    log_bound: f64,
}

impl BoundCache {
    pub fn new(noise: &ResidualNoiseModel, config: &FdrConfig, n: usize) -> Result<Self> {
        config.validate()?;
        let sigmas = noise.entry_sigmas(n)?;
        let z = rank_quantiles(config, n);
        let log_bound = log_bound_from(&z, &sigmas);
        Ok(BoundCache {
            noise: noise.clone(),
            config: *config,
            sigmas,
            z,
            log_bound,
        })
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn log_bound(&self) -> f64 {
        self.log_bound
    }

    pub fn rank_bounds(&self) -> &[f64] {
        &self.z
    }

    fn check(&self, eps: &[f64]) -> Result<()> {
        if eps.len() != self.len() {
            return Err(Error::Dimension(format!(
                "{} residuals for a bound built over {}",
                eps.len(),
                self.len()
            )));
        }
        Ok(())
    }

    pub fn evaluate(&self, eps: &[f64]) -> Result<BoundEvaluation> {
        self.check(eps)?;
        Ok(BoundEvaluation {
            log_bound: self.log_bound,
            rejected_count: count_rejections(eps, &self.sigmas, &self.z),
        })
    }

    pub fn log_likelihood(&self, eps: &[f64]) -> Result<f64> {
        self.check(eps)?;
        if let Some(i) = eps.iter().position(|e| !e.is_finite()) {
            return Err(Error::Domain {
                variant: "log_likelihood",
                message: format!("non-finite residual at index {i}"),
            });
        }
        Ok(log_likelihood_with(eps, &self.sigmas))
    }

    /// Verdict for one model; `None` residuals (the model could not be
    /// simulated) are falsified with `-inf` log-likelihood.
    pub fn verdict(&self, sample: &ModelSample, eps: Option<&[f64]>) -> Result<FalsificationVerdict> {
        let (log_likelihood, rejected_count) = match eps {
            Some(eps) => (self.log_likelihood(eps)?, self.evaluate(eps)?.rejected_count),
            None => (f64::NEG_INFINITY, self.len()),
        };
        Ok(FalsificationVerdict {
            class_id: sample.class_id.clone(),
            sample_index: sample.sample_index,
            theta: sample.theta.clone(),
            log_likelihood,
            log_bound: self.log_bound,
            unfalsified: log_likelihood > self.log_bound,
            rejected_count,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationVerdict {
    pub class_id: String,
    pub sample_index: usize,
    pub theta: Vec<f64>,
    pub log_likelihood: f64,
    pub log_bound: f64,
    pub unfalsified: bool,
    pub rejected_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub class_id: String,
    pub parameter_names: Vec<String>,
    /// Ordered by `sample_index`.
    pub verdicts: Vec<FalsificationVerdict>,
}

impl ClassReport {
    pub fn samples(&self) -> usize {
        self.verdicts.len()
    }

    pub fn unfalsified_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.unfalsified).count()
    }

    pub fn falsified_count(&self) -> usize {
        self.samples() - self.unfalsified_count()
    }

    pub fn unfalsified_fraction(&self) -> f64 {
        if self.verdicts.is_empty() {
            0.0
        } else {
            self.unfalsified_count() as f64 / self.samples() as f64
        }
    }

    pub fn unfalsified(&self) -> impl Iterator<Item = &FalsificationVerdict> {
        self.verdicts.iter().filter(|v| v.unfalsified)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub classes: Vec<ClassReport>,
    pub alpha: f64,
    pub log_bound: f64,
    pub measurement_count: usize,
}

impl FalsificationReport {
    pub fn class(&self, class_id: &str) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn total_samples(&self) -> usize {
        self.classes.iter().map(ClassReport::samples).sum()
    }

    pub fn total_unfalsified(&self) -> usize {
        self.classes.iter().map(ClassReport::unfalsified_count).sum()
    }

    pub fn total_falsified(&self) -> usize {
        self.total_samples() - self.total_unfalsified()
    }
}

/// One class worth of models with their residuals (`None` for models whose
/// simulation failed).
pub struct ClassResiduals<'a> {
    pub class_id: &'a str,
    pub parameter_names: &'a [String],
    pub samples: &'a [ModelSample],
    pub residuals: &'a [Option<Vec<f64>>],
}

/// Applies the likelihood-bound test to every model.
pub fn falsify(classes: &[ClassResiduals<'_>], noise: &ResidualNoiseModel, config: &FdrConfig, n: usize) -> Result<FalsificationReport> {
    let cache = BoundCache::new(noise, config, n)?;
    let classes = classes
        .iter()
        .map(|c| {
            if c.samples.len() != c.residuals.len() {
                return Err(Error::Dimension(format!(
                    "class `{}`: {} samples but {} residual vectors",
                    c.class_id,
                    c.samples.len(),
                    c.residuals.len()
                )));
            }
            let mut verdicts = c
                .samples
                .par_iter()
                .zip(c.residuals.par_iter())
                .map(|(s, e)| cache.verdict(s, e.as_deref()))
                .collect::<Result<Vec<_>>>()?;
            verdicts.sort_by_key(|v| v.sample_index);
            Ok(ClassReport {
                class_id: c.class_id.to_string(),
                parameter_names: c.parameter_names.to_vec(),
                verdicts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FalsificationReport {
        classes,
        alpha: config.alpha,
        log_bound: cache.log_bound(),
        measurement_count: n,
    })
}
