//! Sampled excitation records, simulated outputs and measurements.
//!
//! Multi-channel data are stored interleaved by time step:
//! `[c0(t0), c1(t0), c0(t1), c1(t1), ...]`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationRecord {
    /// Sampling interval [s].
    pub dt: f64,
    /// Interleaved samples (ground acceleration [m/s²] or force [kN]).
    pub samples: Vec<f64>,
    pub label: String,
    pub channel_count: usize,
}

impl ExcitationRecord {
    pub fn new(label: impl Into<String>, dt: f64, samples: Vec<f64>, channel_count: usize) -> Result<Self> {
        let label = label.into();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain {
                variant: "excitation",
                message: format!("`{label}`: dt must be positive, got {dt}"),
            });
        }
        if !(1..=2).contains(&channel_count) {
            return Err(Error::Dimension(format!(
                "`{label}`: excitation channel count must be 1 or 2, got {channel_count}"
            )));
        }
        if samples.len() % channel_count != 0 || samples.is_empty() {
            return Err(Error::Dimension(format!(
                "`{label}`: {} samples do not fill {channel_count} channel(s)",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                variant: "excitation",
                message: format!("`{label}`: non-finite sample at step {}", i / channel_count),
            });
        }
        Ok(ExcitationRecord {
            dt,
            samples,
            label,
            channel_count,
        })
    }

    pub fn single(label: impl Into<String>, dt: f64, samples: Vec<f64>) -> Result<Self> {
        Self::new(label, dt, samples, 1)
    }

    /// Number of time steps.
    pub fn steps(&self) -> usize {
        self.samples.len() / self.channel_count
    }

    pub fn duration(&self) -> f64 {
        self.steps() as f64 * self.dt
    }

    /// Samples of time step `step` (clamped to the last step).
    pub fn at(&self, step: usize) -> &[f64] {
        let s = step.min(self.steps() - 1) * self.channel_count;
        &self.samples[s..s + self.channel_count]
    }

    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.samples.iter().skip(ch).step_by(self.channel_count).copied().collect()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }

    /// Returns a copy with every sample multiplied by `factor`.
    pub fn scaled(&self, factor: f64, label: impl Into<String>) -> Self {
        ExcitationRecord {
            dt: self.dt,
            samples: self.samples.iter().map(|v| v * factor).collect(),
            label: label.into(),
            channel_count: self.channel_count,
        }
    }
}

/// Stacked model outputs `h(θ)` sampled at the measurement interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub dt: f64,
    pub values: Vec<f64>,
    pub channels: Vec<String>,
}

impl SimulationOutput {
    pub fn steps(&self) -> usize {
        if self.channels.is_empty() {
            0
        } else {
            self.values.len() / self.channels.len()
        }
    }

    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.values.iter().skip(ch).step_by(self.channels.len()).copied().collect()
    }
}

/// Measured data `d`, stacked exactly like [`SimulationOutput`].
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub d: Vec<f64>,
    pub dt: f64,
    pub channels: Vec<String>,
}

impl MeasurementSet {
    pub fn new(d: Vec<f64>, dt: f64, channels: Vec<String>) -> Result<Self> {
        if d.is_empty() || channels.is_empty() || d.len() % channels.len() != 0 {
            return Err(Error::Dimension(format!(
                "{} measurements for {} channel(s)",
                d.len(),
                channels.len()
            )));
        }
        if let Some(i) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                variant: "measurement",
                message: format!("non-finite entry at index {i}"),
            });
        }
        Ok(MeasurementSet { d, dt, channels })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.d.len() / self.channels.len()
    }

    pub fn channel(&self, ch: usize) -> Vec<f64> {
        self.d.iter().skip(ch).step_by(self.channels.len()).copied().collect()
    }

    /// Population standard deviation of each channel.
    pub fn channel_std_devs(&self) -> Vec<f64> {
        (0..self.channels.len()).map(|c| std_dev(&self.channel(c))).collect()
    }
}

impl From<SimulationOutput> for MeasurementSet {
    fn from(out: SimulationOutput) -> Self {
        MeasurementSet {
            d: out.values,
            dt: out.dt,
            channels: out.channels,
        }
    }
}

pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt()
}
