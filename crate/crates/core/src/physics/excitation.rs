//! Synthetic excitation: band-limited noise, enveloped ground motion, wind
//! loads, and measurement noise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::series::{std_dev, ExcitationRecord, MeasurementSet, SimulationOutput};

/// Direct-form-I biquad (RBJ cookbook coefficients, normalized by `a0`).
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
    x: [f64; 2],
    y: [f64; 2],
}

impl Biquad {
    fn new(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Biquad {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [a1 / a0, a2 / a0],
            x: [0.0; 2],
            y: [0.0; 2],
        }
    }

    fn butterworth(f0: f64, dt: f64, high_pass: bool) -> Self {
        let w0 = 2.0 * PI * f0 * dt;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * std::f64::consts::FRAC_1_SQRT_2);
        let b = if high_pass {
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0]
        } else {
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0]
        };
        Biquad::new(b, 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    /// Bilinear transform of `(b2 s² + b1 s + b0) / (a2 s² + a1 s + a0)`.
    fn from_analog(b: [f64; 3], a: [f64; 3], dt: f64) -> Self {
        let k = 2.0 / dt;
        let z = |c: [f64; 3]| {
            let (c0, c1, c2) = (c[0], c[1] * k, c[2] * k * k);
            [c2 + c1 + c0, 2.0 * (c0 - c2), c2 - c1 + c0]
        };
        let (bz, az) = (z(b), z(a));
        Biquad::new(bz, az[0], az[1], az[2])
    }

    fn step(&mut self, x: f64) -> f64 {
        let y = self.b[0] * x + self.b[1] * self.x[0] + self.b[2] * self.x[1] - self.a[0] * self.y[0] - self.a[1] * self.y[1];
        self.x = [x, self.x[0]];
        self.y = [y, self.y[0]];
        y
    }
}

/// Band-pass made of `order / 4` second-order high-pass and as many
/// second-order low-pass Butterworth sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPass {
    pub f_low: f64,
    pub f_high: f64,
    pub order: usize,
}

impl BandPass {
    pub fn new(f_low: f64, f_high: f64, order: usize) -> Self {
        BandPass { f_low, f_high, order }
    }

    fn validate(&self, dt: f64) -> Result<()> {
        let nyquist = 0.5 / dt;
        if !(self.f_low > 0.0 && self.f_low < self.f_high && self.f_high < nyquist) {
            return Err(Error::Domain {
                variant: "band_pass",
                message: format!(
                    "need 0 < f_low < f_high < Nyquist ({nyquist} Hz); got {}..{}",
                    self.f_low, self.f_high
                ),
            });
        }
        if self.order == 0 || self.order % 4 != 0 {
            return Err(Error::Domain {
                variant: "band_pass",
                message: format!("order must be a positive multiple of 4, got {}", self.order),
            });
        }
        Ok(())
    }

    fn sections(&self, dt: f64) -> Vec<Biquad> {
        let per_side = self.order / 4;
        (0..per_side)
            .map(|_| Biquad::butterworth(self.f_low, dt, true))
            .chain((0..per_side).map(|_| Biquad::butterworth(self.f_high, dt, false)))
            .collect()
    }

    /// Filters `x` in place through every section.
    pub fn apply(&self, dt: f64, x: &mut [f64]) -> Result<()> {
        self.validate(dt)?;
        let mut sections = self.sections(dt);
        for v in x.iter_mut() {
            *v = sections.iter_mut().fold(*v, |acc, s| s.step(acc));
        }
        Ok(())
    }
}

/// Spectral shape of synthetic ground motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GroundSpectrum {
    BandPass(BandPass),
    /// Kanai-Tajimi soil filter (`omega_g`, `zeta_g`) followed by a
    /// Clough-Penzien high-pass (`omega_f`, `zeta_f`) [rad/s].
    CloughPenzien {
        omega_g: f64,
        zeta_g: f64,
        omega_f: f64,
        zeta_f: f64,
    },
}

impl GroundSpectrum {
    /// Firm-soil parameters commonly fitted to the 1940 El Centro record.
    pub const FIRM_SOIL: GroundSpectrum = GroundSpectrum::CloughPenzien {
        omega_g: 15.6,
        zeta_g: 0.6,
        omega_f: 1.5,
        zeta_f: 0.6,
    };

    /// `n` samples of shaped Gaussian white noise with unit standard deviation.
    pub fn noise(&self, n: usize, dt: f64, seed: u64) -> Result<Vec<f64>> {
        let (omega_g, zeta_g, omega_f, zeta_f) = match *self {
            GroundSpectrum::BandPass(band) => return band_limited_noise(n, dt, band, seed),
            GroundSpectrum::CloughPenzien {
                omega_g,
                zeta_g,
                omega_f,
                zeta_f,
            } => (omega_g, zeta_g, omega_f, zeta_f),
        };
        if !(omega_g > 0.0 && zeta_g > 0.0 && omega_f > 0.0 && zeta_f > 0.0) || omega_g * dt >= PI {
            return Err(Error::Domain {
                variant: "clough_penzien",
                message: format!("filter parameters must be positive and below Nyquist at dt {dt}"),
            });
        }
        let mut sections = [
            Biquad::from_analog([omega_g * omega_g, 2.0 * zeta_g * omega_g, 0.0], [omega_g * omega_g, 2.0 * zeta_g * omega_g, 1.0], dt),
            Biquad::from_analog([0.0, 0.0, 1.0], [omega_f * omega_f, 2.0 * zeta_f * omega_f, 1.0], dt),
        ];
        let lead = (4.0 * PI / omega_f / dt).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out: Vec<f64> = (0..n + lead)
            .map(|_| {
                let w: f64 = rng.sample(StandardNormal);
                sections.iter_mut().fold(w, |acc, s| s.step(acc))
            })
            .skip(lead)
            .collect();
        let s = std_dev(&out);
        if s > 0.0 {
            out.iter_mut().for_each(|v| *v /= s);
        }
        Ok(out)
    }
}

/// `n` samples of band-passed Gaussian white noise scaled to unit standard
/// deviation. A lead-in of `2 / f_low` seconds is filtered and discarded.
pub fn band_limited_noise(n: usize, dt: f64, band: BandPass, seed: u64) -> Result<Vec<f64>> {
    band.validate(dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lead = (2.0 / band.f_low / dt).ceil() as usize;
    let mut x: Vec<f64> = (0..n + lead).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    band.apply(dt, &mut x)?;
    let mut out = x.split_off(lead);
    let s = std_dev(&out);
    if s > 0.0 {
        out.iter_mut().for_each(|v| *v /= s);
    }
    Ok(out)
}

/// Earthquake-like record: band-limited noise shaped by a build-up, strong
/// phase and exponential decay, scaled to the requested peak [m/s²].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundMotionSpec {
    pub duration: f64,
    pub dt: f64,
    pub pga: f64,
    pub spectrum: GroundSpectrum,
    /// End of the quadratic build-up [s].
    pub rise: f64,
    /// End of the strong phase [s].
    pub strong_end: f64,
    /// Decay rate after the strong phase [1/s].
    pub decay: f64,
}

impl GroundMotionSpec {
    pub fn new(duration: f64, dt: f64, pga: f64) -> Self {
        GroundMotionSpec {
            duration,
            dt,
            pga,
            spectrum: GroundSpectrum::FIRM_SOIL,
            rise: 2.0,
            strong_end: 10.0,
            decay: 0.2,
        }
    }

    pub fn envelope(&self, t: f64) -> f64 {
        if t < self.rise {
            (t / self.rise).powi(2)
        } else if t <= self.strong_end {
            1.0
        } else {
            (-self.decay * (t - self.strong_end)).exp()
        }
    }
}

pub fn synthetic_ground_motion(spec: &GroundMotionSpec, label: &str, seed: u64) -> Result<ExcitationRecord> {
    if !(spec.pga > 0.0) || !(spec.duration > 0.0) {
        return Err(Error::Domain {
            variant: "ground_motion",
            message: "peak acceleration and duration must be positive".into(),
        });
    }
    let n = (spec.duration / spec.dt).round() as usize;
    let mut a = spec.spectrum.noise(n, spec.dt, seed)?;
    for (i, v) in a.iter_mut().enumerate() {
        *v *= spec.envelope(i as f64 * spec.dt);
    }
    let peak = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter_mut().for_each(|v| *v *= spec.pga / peak);
    ExcitationRecord::single(label, spec.dt, a)
}

/// Fluctuating wind force [kN per unit load profile] with standard deviation `amplitude`.
pub fn wind_load(duration: f64, dt: f64, amplitude: f64, band: BandPass, label: &str, seed: u64) -> Result<ExcitationRecord> {
    let n = (duration / dt).round() as usize;
    let w = band_limited_noise(n, dt, band, seed)?;
    ExcitationRecord::single(label, dt, w.into_iter().map(|v| v * amplitude).collect())
}

/// Adds i.i.d. zero-mean Gaussian noise with standard deviation
/// `fraction × std(channel)` to each channel of `clean`.
pub fn add_measurement_noise(clean: &SimulationOutput, fraction: f64, seed: u64) -> Result<MeasurementSet> {
    if !(fraction >= 0.0) {
        return Err(Error::Domain {
            variant: "measurement_noise",
            message: format!("noise fraction must be >= 0, got {fraction}"),
        });
    }
    let nc = clean.channels.len();
    let sigmas: Vec<f64> = (0..nc).map(|c| fraction * std_dev(&clean.channel(c))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = clean
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let e: f64 = rng.sample(StandardNormal);
            v + sigmas[i % nc] * e
        })
        .collect();
    MeasurementSet::new(d, clean.dt, clean.channels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Magnitude response of the cascade at `f`, evaluated from the coefficients.
    fn gain(band: &BandPass, dt: f64, f: f64) -> f64 {
        cascade_gain(&band.sections(dt), dt, f)
    }

    fn cascade_gain(sections: &[Biquad], dt: f64, f: f64) -> f64 {
        let w = 2.0 * PI * f * dt;
        sections
            .iter()
            .map(|s| {
                let z = |k: f64| (-(k * w)).sin_cos();
                let (num_re, num_im) = (0..3).fold((0.0, 0.0), |(re, im), k| {
                    let (s_, c) = z(k as f64);
                    (re + s.b[k] * c, im + s.b[k] * s_)
                });
                let (s1, c1) = z(1.0);
                let (s2, c2) = z(2.0);
                let den_re = 1.0 + s.a[0] * c1 + s.a[1] * c2;
                let den_im = s.a[0] * s1 + s.a[1] * s2;
                (num_re.hypot(num_im)) / den_re.hypot(den_im)
            })
            .product()
    }

    #[test]
    fn band_pass_passes_centre_and_rejects_tails() {
        let band = BandPass::new(0.35, 1.5, 4);
        let dt = 0.05;
        assert!(gain(&band, dt, 0.75) > 0.8);
        assert!(gain(&band, dt, 0.03) < 0.02);
        assert!(gain(&band, dt, 8.0) < 0.05);
        // Butterworth corners sit at −3 dB.
        let g = gain(&BandPass::new(0.1, 5.0, 4), 0.005, 5.0);
        assert!((g - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02, "{g}");
    }

    #[test]
    fn bilinear_transform_matches_prewarped_analog_gain() {
        let (wg, zg) = (15.6, 0.6);
        let dt = 0.02;
        let biquad = Biquad::from_analog([wg * wg, 2.0 * zg * wg, 0.0], [wg * wg, 2.0 * zg * wg, 1.0], dt);
        for f in [0.1, 1.0, 2.5, 6.0, 12.0] {
            // The bilinear map sends ω to (2/dt)·tan(ω dt / 2).
            let w = 2.0 / dt * (PI * f * dt).tan();
            let num = (wg.powi(4) + (2.0 * zg * wg * w).powi(2)).sqrt();
            let den = ((wg * wg - w * w).powi(2) + (2.0 * zg * wg * w).powi(2)).sqrt();
            let g = cascade_gain(std::slice::from_ref(&biquad), dt, f);
            assert!((g - num / den).abs() < 1e-9 * (num / den), "f={f}: {g} vs {}", num / den);
        }
    }

    #[test]
    fn clough_penzien_noise_is_unit_and_deterministic() {
        let a = GroundSpectrum::FIRM_SOIL.noise(1500, 0.02, 3).unwrap();
        assert_eq!(a, GroundSpectrum::FIRM_SOIL.noise(1500, 0.02, 3).unwrap());
        assert!((std_dev(&a) - 1.0).abs() < 1e-12);
        let bad = GroundSpectrum::CloughPenzien {
            omega_g: 15.6,
            zeta_g: 0.6,
            omega_f: 1.5,
            zeta_f: 0.6,
        };
        assert!(bad.noise(100, 0.25, 1).is_err());
    }

    #[test]
    fn noise_is_unit_and_deterministic() {
        let band = BandPass::new(0.2, 8.0, 4);
        let a = band_limited_noise(2000, 0.02, band, 7).unwrap();
        let b = band_limited_noise(2000, 0.02, band, 7).unwrap();
        assert_eq!(a, b);
        assert!((std_dev(&a) - 1.0).abs() < 1e-12);
        assert!(BandPass::new(0.2, 30.0, 4).apply(0.02, &mut [0.0]).is_err());
        assert!(BandPass::new(0.2, 3.0, 2).apply(0.02, &mut [0.0]).is_err());
    }

    #[test]
    fn ground_motion_hits_requested_peak() {
        let spec = GroundMotionSpec::new(40.0, 0.02, 3.42);
        let rec = synthetic_ground_motion(&spec, "eq", 1).unwrap();
        assert_eq!(rec.steps(), 2000);
        assert!((rec.peak() - 3.42).abs() < 1e-12);
    }

    fn clean() -> SimulationOutput {
        let values = (0..1200).map(|i| (i as f64 * 0.1).sin() * if i % 2 == 0 { 1.0 } else { 5.0 }).collect();
        SimulationOutput {
            dt: 0.05,
            values,
            channels: vec!["a".into(), "b".into()],
        }
    }

    #[test]
    fn zero_noise_is_identity() {
        let c = clean();
        assert_eq!(add_measurement_noise(&c, 0.0, 3).unwrap().d, c.values);
    }

    #[test]
    fn noise_level_per_channel() {
        let c = clean();
        let m = add_measurement_noise(&c, 0.2, 11).unwrap();
        for ch in 0..2 {
            let added: Vec<f64> = m.channel(ch).iter().zip(c.channel(ch)).map(|(d, h)| d - h).collect();
            let target = 0.2 * std_dev(&c.channel(ch));
            assert!((std_dev(&added) / target - 1.0).abs() < 0.05);
        }
        let other = add_measurement_noise(&c, 0.2, 12).unwrap();
        assert_ne!(m.d, other.d);
    }
}
