//! Isolation-layer force laws: hysteretic (Bouc-Wen, bilinear) and the
//! code-specified equivalent-linear variants.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::hysteresis::BoucWen;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsolatorVariant {
    BoucWen,
    Bilinear,
    Aashto,
    Jpwri,
    ModifiedAashto,
    Caltrans,
}

impl IsolatorVariant {
    pub const ALL: [IsolatorVariant; 6] = [
        IsolatorVariant::BoucWen,
        IsolatorVariant::Bilinear,
        IsolatorVariant::Aashto,
        IsolatorVariant::Jpwri,
        IsolatorVariant::ModifiedAashto,
        IsolatorVariant::Caltrans,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IsolatorVariant::BoucWen => "bouc_wen",
            IsolatorVariant::Bilinear => "bilinear",
            IsolatorVariant::Aashto => "aashto",
            IsolatorVariant::Jpwri => "jpwri",
            IsolatorVariant::ModifiedAashto => "modified_aashto",
            IsolatorVariant::Caltrans => "caltrans",
        }
    }

    pub fn is_hysteretic(self) -> bool {
        matches!(self, IsolatorVariant::BoucWen | IsolatorVariant::Bilinear)
    }

    /// Bouc-Wen exponent for the hysteretic variants.
    pub fn n_pow(self) -> Option<f64> {
        match self {
            IsolatorVariant::BoucWen => Some(1.0),
            IsolatorVariant::Bilinear => Some(100.0),
            _ => None,
        }
    }
}

/// Isolator parameters in catalogue units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsolatorParams {
    pub variant: IsolatorVariant,
    /// Post-yield stiffness [MN/m].
    pub k_post: f64,
    /// Linear viscous damping [kN·s/m].
    pub c_b: f64,
    /// Hardness ratio `k_post / k_pre`.
    pub r_k: f64,
    /// Yield force [% of structure weight]; hysteretic variants.
    pub q_y_percent: Option<f64>,
    /// Shear ductility ratio; equivalent-linear variants.
    pub r_d: Option<f64>,
}

impl IsolatorParams {
    /// Pre-yield stiffness [MN/m].
    pub fn k_pre(&self) -> f64 {
        self.k_post / self.r_k
    }

    fn validate(&self) -> Result<()> {
        let bad = |message: String| {
            Err(Error::Domain {
                variant: self.variant.name(),
                message,
            })
        };
        if !(self.k_post > 0.0) {
            return bad(format!("k_post must be > 0, got {}", self.k_post));
        }
        if !(self.c_b >= 0.0) {
            return bad(format!("c_b must be >= 0, got {}", self.c_b));
        }
        if !(self.r_k > 0.0 && self.r_k < 1.0) {
            return bad(format!("r_k must lie in (0, 1), got {}", self.r_k));
        }
        Ok(())
    }

    /// Resolves the force law for a structure of weight `weight` [kN] and
    /// total isolated mass `mass` [Mg].
    pub fn law(&self, weight: f64, mass: f64) -> Result<IsolatorLaw> {
        self.validate()?;
        let k_pre = self.k_pre() * 1e3;
        let k_post = self.k_post * 1e3;
        if let Some(n_pow) = self.variant.n_pow() {
            let q_pct = self.q_y_percent.ok_or_else(|| Error::Domain {
                variant: self.variant.name(),
                message: "yield force Q_y is required".into(),
            })?;
            let q_y = q_pct / 100.0 * weight;
            if !(q_y > 0.0) {
                return Err(Error::Domain {
                    variant: self.variant.name(),
                    message: format!("yield force must be > 0, got {q_pct} %W"),
                });
            }
            Ok(IsolatorLaw::Hysteretic {
                c_b: self.c_b,
                k_post,
                q_y: q_y * (1.0 - self.r_k),
                bouc_wen: BoucWen::symmetric(q_y / k_pre, n_pow),
            })
        } else {
            let r_d = self.r_d.ok_or_else(|| Error::Domain {
                variant: self.variant.name(),
                message: "ductility ratio r_d is required".into(),
            })?;
            let (zeta, k_eq) = equivalent_linear_params(self.variant, self.r_k, r_d, k_pre)?;
            Ok(IsolatorLaw::Linear {
                c: self.c_b + 2.0 * zeta * (k_eq * mass).sqrt(),
                k: k_eq,
            })
        }
    }
}

/// `(ζ_eq, k_eq)` of an equivalent-linear isolator; `k_eq` has the units of `k_pre`.
pub fn equivalent_linear_params(variant: IsolatorVariant, r_k: f64, r_d: f64, k_pre: f64) -> Result<(f64, f64)> {
    let domain = |message: String| Error::Domain {
        variant: variant.name(),
        message,
    };
    if !(r_k > 0.0 && r_k < 1.0) {
        return Err(domain(format!("r_k must lie in (0, 1), got {r_k}")));
    }
    if !(r_d > 1.0) {
        return Err(domain(format!("ductility ratio must exceed 1, got {r_d}")));
    }
    let code = |rho: f64| {
        let hardening = 1.0 + r_k * (rho - 1.0);
        let zeta = 2.0 * (1.0 - r_k) * (1.0 - 1.0 / rho) / (PI * hardening);
        (zeta, k_pre / rho * hardening)
    };
    match variant {
        IsolatorVariant::Aashto => Ok(code(r_d)),
        IsolatorVariant::Jpwri => {
            let rho = 0.7 * r_d;
            if rho <= 1.0 {
                return Err(domain(format!("ρ = 0.7·r_d = {rho} must exceed 1")));
            }
            Ok(code(rho))
        }
        IsolatorVariant::ModifiedAashto => {
            let denom = 6.0 - 10.0 * r_k;
            if denom <= 0.0 {
                return Err(domain(format!("damping correction undefined for r_k = {r_k}")));
            }
            let (zeta, k_eq) = code(r_d);
            let stiffness_corr = (1.0 - 0.737 * (r_d - 1.0) / (r_d * r_d)).powi(-2);
            Ok((zeta * r_d.powf(0.58) / denom, k_eq * stiffness_corr))
        }
        IsolatorVariant::Caltrans => {
            let zeta = 0.0587 * (r_d - 1.0).powf(0.371);
            let k_eq = k_pre * (1.0 + (1.0 + 0.13 * (r_d - 1.0).powf(1.137)).ln()).powi(-2);
            Ok((zeta, k_eq))
        }
        IsolatorVariant::BoucWen | IsolatorVariant::Bilinear => {
            Err(domain("hysteretic variants have no equivalent-linear form".into()))
        }
    }
}

/// Isolator force law in solver units (kN, m, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsolatorLaw {
    /// `f = c_b ẋ + k_post x + q_y z`, `q_y = Q_y (1 − r_k)`.
    Hysteretic {
        c_b: f64,
        k_post: f64,
        q_y: f64,
        bouc_wen: BoucWen,
    },
    /// `f = (c_b + c_eq) ẋ + k_eq x`.
    Linear { c: f64, k: f64 },
}

impl IsolatorLaw {
    #[inline]
    pub fn force(&self, x: f64, v: f64, z: f64) -> f64 {
        match *self {
            IsolatorLaw::Hysteretic { c_b, k_post, q_y, .. } => c_b * v + k_post * x + q_y * z,
            IsolatorLaw::Linear { c, k } => c * v + k * x,
        }
    }

    pub fn hysteresis(&self) -> Option<&BoucWen> {
        match self {
            IsolatorLaw::Hysteretic { bouc_wen, .. } => Some(bouc_wen),
            IsolatorLaw::Linear { .. } => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aashto_hand_values() {
        let r_k = 0.1667;
        let r_d = 2.5;
        let (zeta, k_eq) = equivalent_linear_params(IsolatorVariant::Aashto, r_k, r_d, 1.0).unwrap();
        let expected_zeta = 2.0 * (1.0 - r_k) * (1.0 - 1.0 / r_d) / (PI * (1.0 + r_k * (r_d - 1.0)));
        assert!((zeta - expected_zeta).abs() < 1e-12);
        assert!((zeta - 0.2546).abs() < 1e-4);
        let (_, k_exact) = equivalent_linear_params(IsolatorVariant::Aashto, 1.0 / 6.0, 2.5, 24.0).unwrap();
        assert!((k_exact - 12.0).abs() < 1e-12);
        assert!((k_eq - (1.0 + r_k * 1.5) / 2.5).abs() < 1e-12);
    }

    #[test]
    fn caltrans_hand_value() {
        let (zeta, k_eq) = equivalent_linear_params(IsolatorVariant::Caltrans, 0.16, 2.5, 10.0).unwrap();
        assert!((zeta - 0.0587 * 1.5_f64.powf(0.371)).abs() < 1e-12);
        assert!((zeta - 0.0682).abs() < 1e-4);
        let k = 10.0 / (1.0 + (1.0 + 0.13 * 1.5_f64.powf(1.137)).ln()).powi(2);
        assert!((k_eq - k).abs() < 1e-12);
    }

    #[test]
    fn jpwri_small_ductility_is_domain_error() {
        let err = equivalent_linear_params(IsolatorVariant::Jpwri, 0.16, 1.2, 1.0).unwrap_err();
        assert!(err.to_string().contains("jpwri"));
        assert!(equivalent_linear_params(IsolatorVariant::Aashto, 0.16, 0.9, 1.0).is_err());
    }

    #[test]
    fn unit_ductility_limit_has_no_damping() {
        for variant in [
            IsolatorVariant::Aashto,
            IsolatorVariant::ModifiedAashto,
            IsolatorVariant::Caltrans,
        ] {
            let (zeta, _) = equivalent_linear_params(variant, 0.16, 1.0 + 1e-12, 1.0).unwrap();
            assert!(zeta < 1e-4, "{variant:?}: {zeta}");
        }
        let (zeta, _) = equivalent_linear_params(IsolatorVariant::Jpwri, 0.16, 1.0 / 0.7 + 1e-12, 1.0).unwrap();
        assert!(zeta < 1e-9);
    }

    #[test]
    fn modified_aashto_applies_corrections() {
        let (r_k, r_d) = (0.16, 2.5);
        let (z0, k0) = equivalent_linear_params(IsolatorVariant::Aashto, r_k, r_d, 3.0).unwrap();
        let (z1, k1) = equivalent_linear_params(IsolatorVariant::ModifiedAashto, r_k, r_d, 3.0).unwrap();
        assert!((z1 - z0 * r_d.powf(0.58) / (6.0 - 10.0 * r_k)).abs() < 1e-12);
        assert!((k1 - k0 / (1.0 - 0.737 * (r_d - 1.0) / (r_d * r_d)).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn hysteretic_law_yields_at_q_y() {
        let p = IsolatorParams {
            variant: IsolatorVariant::BoucWen,
            k_post: 4.0,
            c_b: 20.0,
            r_k: 1.0 / 6.0,
            q_y_percent: Some(5.0),
            r_d: None,
        };
        let weight = 13_729.31;
        let law = p.law(weight, 1400.0).unwrap();
        let IsolatorLaw::Hysteretic { k_post, q_y, bouc_wen, .. } = law else {
            panic!("expected hysteretic law");
        };
        let x_y = 1.0 / bouc_wen.a;
        // Saturated force at the yield displacement equals Q_y.
        assert!((k_post * x_y + q_y - 0.05 * weight).abs() < 1e-9);
        // Initial stiffness k_post + q_y·A equals k_pre.
        assert!((k_post + q_y * bouc_wen.a - 24_000.0).abs() < 1e-8);
    }
}
