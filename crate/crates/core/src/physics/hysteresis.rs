//! Bouc-Wen evolution laws, uniaxial and coupled biaxial.

use crate::error::{Error, Result};

/// Uniaxial Bouc-Wen law `ż = A v − β v |z|ⁿ − γ z |v| |z|ⁿ⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoucWen {
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n_pow: f64,
}

impl BoucWen {
    /// `A = 2β = 2γ = 1/x_y`, which makes loading and unloading stiffness
    /// equal and saturates `z` at 1.
    pub fn symmetric(yield_displacement: f64, n_pow: f64) -> Self {
        let a = 1.0 / yield_displacement;
        BoucWen {
            a,
            beta: 0.5 * a,
            gamma: 0.5 * a,
            n_pow,
        }
    }

    /// Saturation level `(A/(β+γ))^(1/n)`.
    pub fn z_max(&self) -> f64 {
        (self.a / (self.beta + self.gamma)).powf(1.0 / self.n_pow)
    }

    /// `|z|ⁿ` and `|z|ⁿ⁻¹` with `|z|` clamped to the saturation level and
    /// `|z|⁰ = 1`. Large exponents go through `exp(n ln|z|)`.
    fn powers(&self, z: f64) -> (f64, f64) {
        let az = z.abs().min(self.z_max());
        if self.n_pow == 1.0 {
            return (az, 1.0);
        }
        if az == 0.0 {
            return (0.0, if self.n_pow > 1.0 { 0.0 } else { 1.0 });
        }
        let ln = az.ln();
        ((self.n_pow * ln).exp(), ((self.n_pow - 1.0) * ln).exp())
    }

    /// Rate of the evolutionary variable for velocity `v`.
    #[inline]
    pub fn rate(&self, z: f64, v: f64) -> f64 {
        let (zn, zn1) = self.powers(z);
        self.a * v - self.beta * v * zn - self.gamma * z * v.abs() * zn1
    }
}

/// Checked [`BoucWen::rate`].
pub fn boucwen_rate(z: f64, v: f64, law: &BoucWen) -> Result<f64> {
    if !z.is_finite() || !v.is_finite() {
        return Err(Error::Domain {
            variant: "bouc_wen",
            message: format!("non-finite state z={z}, v={v}"),
        });
    }
    if law.n_pow < 1.0 {
        return Err(Error::Domain {
            variant: "bouc_wen",
            message: format!("n_pow must be >= 1, got {}", law.n_pow),
        });
    }
    Ok(law.rate(z, v))
}

/// Coupled biaxial law; the x equation is divided by `D^y` and the y
/// equation by `D^x`. Steel dampers use `D^x = D^y = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiaxialBoucWen {
    pub a: f64,
    pub beta: f64,
    pub gamma: f64,
    pub d_x: f64,
    pub d_y: f64,
}

impl BiaxialBoucWen {
    #[inline]
    pub fn rates(&self, zx: f64, zy: f64, vx: f64, vy: f64) -> (f64, f64) {
        let (a, b, g) = (self.a, self.beta, self.gamma);
        let x = a * vx - b * (vx * zx).abs() * zx - g * vx * zx * zx - b * (vy * zy).abs() * zx - g * vy * zx * zy;
        let y = a * vy - b * (vy * zy).abs() * zy - g * vy * zy * zy - b * (vx * zx).abs() * zy - g * vx * zy * zx;
        (x / self.d_y, y / self.d_x)
    }
}

/// Checked [`BiaxialBoucWen::rates`].
pub fn biaxial_hysteresis_rates(zx: f64, zy: f64, vx: f64, vy: f64, law: &BiaxialBoucWen) -> Result<(f64, f64)> {
    if [zx, zy, vx, vy].iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain {
            variant: "biaxial_bouc_wen",
            message: format!("non-finite state ({zx}, {zy}, {vx}, {vy})"),
        });
    }
    if law.d_x <= 0.0 || law.d_y <= 0.0 {
        return Err(Error::Domain {
            variant: "biaxial_bouc_wen",
            message: "yield displacements must be positive".into(),
        });
    }
    Ok(law.rates(zx, zy, vx, vy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_slope_and_saturation() {
        let bw = BoucWen::symmetric(0.02, 1.0);
        assert_eq!(boucwen_rate(0.0, 0.3, &bw).unwrap(), bw.a * 0.3);
        assert_eq!(boucwen_rate(1.0, 0.3, &bw).unwrap(), 0.0);
        assert!(boucwen_rate(f64::NAN, 0.3, &bw).is_err());
        let bilinear = BoucWen::symmetric(0.02, 100.0);
        assert_eq!(bilinear.rate(0.0, 0.1), bilinear.a * 0.1);
        assert!(bilinear.rate(1.0, 0.1).abs() < 1e-12);
        // Over-saturated states are pulled back while loading.
        assert!(bilinear.rate(1.01, 0.1) < 0.0);
    }

    #[test]
    fn unloading_stiffness_matches_loading() {
        // z = 1, v < 0: A v − β v − γ |v| = v (A − β + γ) = A v when β = γ.
        let bw = BoucWen::symmetric(0.05, 1.0);
        let v = -0.2;
        assert!((bw.rate(1.0, v) - bw.a * v).abs() < 1e-12);
    }

    #[test]
    fn biaxial_decouples_without_y_motion() {
        let law = BiaxialBoucWen {
            a: 1.0,
            beta: 0.25,
            gamma: 0.35,
            d_x: 0.8,
            d_y: 0.8,
        };
        let (zx, vx) = (0.4, 1.5);
        let (rx, ry) = biaxial_hysteresis_rates(zx, 0.0, vx, 0.0, &law).unwrap();
        let uniaxial = (law.a * vx - law.beta * (vx * zx).abs() * zx - law.gamma * vx * zx * zx) / law.d_y;
        assert_eq!(rx, uniaxial);
        assert_eq!(ry, 0.0);
        assert_eq!(biaxial_hysteresis_rates(0.3, -0.2, 0.0, 0.0, &law).unwrap(), (0.0, 0.0));
    }
}
