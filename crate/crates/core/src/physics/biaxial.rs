//! Rigid mass on a biaxial isolation layer of rubber bearings, elastic
//! sliding bearings and steel-damper pairs, under two-component ground motion.
//!
//! Hysteretic device laws work in centimetres: velocities are converted
//! before entering the evolution law and steel-damper stiffnesses are kN/cm.

use serde::{Deserialize, Serialize};

use super::building::GRAVITY;
use super::hysteresis::BiaxialBoucWen;
use super::DynamicSystem;
use crate::error::{Error, Result};

const CM: f64 = 100.0;

/// Elastic sliding bearing relationship.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElasticSlidingBearing {
    /// `f = k u` per axis, `k` in kN/m.
    Linear { k: f64 },
    /// `f = μW Z` with `Z` following the coupled law.
    Hysteretic { mu_w: f64, law: BiaxialBoucWen },
}

/// Steel-damper pair relationship.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteelDamper {
    /// `f = k u` per axis, `k` in kN/m.
    Linear { k: f64 },
    /// `f = α K u + (1 − α) K Z`, `K = [[k, k_xy], [k_xy, k]]` in kN/cm and
    /// `Z` in cm (the coupled law with `D = 1`).
    Hysteretic { k: f64, k_xy: f64, alpha: f64, law: BiaxialBoucWen },
}

impl ElasticSlidingBearing {
    fn is_hysteretic(&self) -> bool {
        matches!(self, ElasticSlidingBearing::Hysteretic { .. })
    }
}

impl SteelDamper {
    fn is_hysteretic(&self) -> bool {
        matches!(self, SteelDamper::Hysteretic { .. })
    }
}

/// Device parameters of the isolation layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiaxialDeviceParams {
    /// Rubber-bearing stiffness [kN/m].
    pub k_rb: f64,
    pub esb: ElasticSlidingBearing,
    pub sd: SteelDamper,
}

impl BiaxialDeviceParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |message: &str| {
            Err(Error::Domain {
                variant: "biaxial_base",
                message: message.into(),
            })
        };
        if !(self.k_rb > 0.0) {
            return bad("rubber-bearing stiffness must be positive");
        }
        match self.esb {
            ElasticSlidingBearing::Linear { k } if !(k > 0.0) => return bad("sliding-bearing stiffness must be positive"),
            ElasticSlidingBearing::Hysteretic { mu_w, law } => {
                if !(mu_w > 0.0) || !(law.d_x > 0.0) || !(law.d_y > 0.0) {
                    return bad("sliding-bearing μW and yield displacements must be positive");
                }
            }
            _ => {}
        }
        match self.sd {
            SteelDamper::Linear { k } if !(k > 0.0) => return bad("steel-damper stiffness must be positive"),
            SteelDamper::Hysteretic { k, alpha, .. } => {
                if !(k > 0.0) {
                    return bad("steel-damper stiffness must be positive");
                }
                if !(alpha > 0.0 && alpha < 1.0) {
                    return bad("steel-damper α must lie in (0, 1)");
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Layout of the isolated mass and its devices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiaxialBaseModel {
    /// Isolated mass [Mg].
    pub mass: f64,
    pub rubber_bearings: usize,
    pub sliding_bearings: usize,
    pub damper_pairs: usize,
    /// Viscous ratio on the rubber-bearing stiffness, per axis.
    pub damping_ratio: f64,
}

impl Default for BiaxialBaseModel {
    fn default() -> Self {
        BiaxialBaseModel {
            mass: 686.0,
            rubber_bearings: 2,
            sliding_bearings: 2,
            damper_pairs: 2,
            damping_ratio: 0.02,
        }
    }
}

impl BiaxialBaseModel {
    pub fn weight(&self) -> f64 {
        GRAVITY * self.mass
    }

    pub fn assemble(&self, devices: BiaxialDeviceParams) -> Result<BiaxialBase> {
        devices.validate()?;
        if !(self.mass > 0.0) || !(self.damping_ratio >= 0.0) {
            return Err(Error::Domain {
                variant: "biaxial_base",
                message: "mass must be positive and damping non-negative".into(),
            });
        }
        let k_rb = self.rubber_bearings as f64 * devices.k_rb;
        Ok(BiaxialBase {
            model: *self,
            devices,
            damping: 2.0 * self.damping_ratio * (k_rb * self.mass).sqrt(),
        })
    }
}

/// Assembled system. State `[u_x, u_y, v_x, v_y, Z_esb_x, Z_esb_y, Z_sd_x, Z_sd_y]`
/// relative to the ground; inputs are interleaved `(a_gx, a_gy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiaxialBase {
    model: BiaxialBaseModel,
    devices: BiaxialDeviceParams,
    damping: f64,
}

impl BiaxialBase {
    /// Per-device forces `(rb, esb, sd)` [kN], each an (x, y) pair for one device.
    pub fn device_forces(&self, state: &[f64]) -> [[f64; 2]; 3] {
        let (ux, uy) = (state[0], state[1]);
        let rb = [self.devices.k_rb * ux, self.devices.k_rb * uy];
        let esb = match self.devices.esb {
            ElasticSlidingBearing::Linear { k } => [k * ux, k * uy],
            ElasticSlidingBearing::Hysteretic { mu_w, .. } => [mu_w * state[4], mu_w * state[5]],
        };
        let sd = match self.devices.sd {
            SteelDamper::Linear { k } => [k * ux, k * uy],
            SteelDamper::Hysteretic { k, k_xy, alpha, .. } => {
                let (ucx, ucy) = (ux * CM, uy * CM);
                let (zx, zy) = (state[6], state[7]);
                [
                    alpha * (k * ucx + k_xy * ucy) + (1.0 - alpha) * (k * zx + k_xy * zy),
                    alpha * (k_xy * ucx + k * ucy) + (1.0 - alpha) * (k_xy * zx + k * zy),
                ]
            }
        };
        [rb, esb, sd]
    }

    fn restoring(&self, state: &[f64]) -> [f64; 2] {
        let [rb, esb, sd] = self.device_forces(state);
        let m = &self.model;
        let mut f = [0.0; 2];
        for a in 0..2 {
            f[a] = m.rubber_bearings as f64 * rb[a]
                + m.sliding_bearings as f64 * esb[a]
                + m.damper_pairs as f64 * sd[a]
                + self.damping * state[2 + a];
        }
        f
    }
}

impl DynamicSystem for BiaxialBase {
    fn state_dim(&self) -> usize {
        8
    }

    fn input_channels(&self) -> usize {
        2
    }

    fn derivative(&self, state: &[f64], input: &[f64], rate: &mut [f64]) {
        let f = self.restoring(state);
        rate[0] = state[2];
        rate[1] = state[3];
        rate[2] = -input[0] - f[0] / self.model.mass;
        rate[3] = -input[1] - f[1] / self.model.mass;
        let (vx, vy) = (state[2] * CM, state[3] * CM);
        (rate[4], rate[5]) = match self.devices.esb {
            ElasticSlidingBearing::Hysteretic { law, .. } => law.rates(state[4], state[5], vx, vy),
            ElasticSlidingBearing::Linear { .. } => (0.0, 0.0),
        };
        (rate[6], rate[7]) = match self.devices.sd {
            SteelDamper::Hysteretic { law, .. } => law.rates(state[6], state[7], vx, vy),
            SteelDamper::Linear { .. } => (0.0, 0.0),
        };
    }

    fn project(&self, state: &mut [f64]) {
        // Radial clamp onto the limit surface |Z|² ≤ A / (β + γ).
        let clamp = |law: &BiaxialBoucWen, zx: &mut f64, zy: &mut f64| {
            let limit = law.a / (law.beta + law.gamma);
            if !(law.beta >= 0.0 && limit > 0.0) {
                return;
            }
            let r2 = *zx * *zx + *zy * *zy;
            if r2 > limit {
                let s = (limit / r2).sqrt();
                *zx *= s;
                *zy *= s;
            }
        };
        let (esb, sd) = state[4..8].split_at_mut(2);
        if let ElasticSlidingBearing::Hysteretic { law, .. } = &self.devices.esb {
            let (x, y) = esb.split_at_mut(1);
            clamp(law, &mut x[0], &mut y[0]);
        }
        if let SteelDamper::Hysteretic { law, .. } = &self.devices.sd {
            let (x, y) = sd.split_at_mut(1);
            clamp(law, &mut x[0], &mut y[0]);
        }
    }

    fn channels(&self) -> Vec<String> {
        [
            "abs_accel_x",
            "abs_accel_y",
            "disp_x",
            "disp_y",
            "esb_force_x",
            "esb_force_y",
            "sd_force_x",
            "sd_force_y",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn outputs(&self, state: &[f64], rate: &[f64], input: &[f64], out: &mut [f64]) {
        let [_, esb, sd] = self.device_forces(state);
        out[0] = rate[2] + input[0];
        out[1] = rate[3] + input[1];
        out[2] = state[0];
        out[3] = state[1];
        out[4] = esb[0];
        out[5] = esb[1];
        out[6] = sd[0];
        out[7] = sd[1];
    }
}

impl ElasticSlidingBearing {
    /// Hysteretic sliding bearing with `A = 1` and equal yield displacements `d` [cm].
    pub fn hysteretic(mu_w: f64, d: f64, beta: f64, gamma: f64) -> Self {
        ElasticSlidingBearing::Hysteretic {
            mu_w,
            law: BiaxialBoucWen {
                a: 1.0,
                beta,
                gamma,
                d_x: d,
                d_y: d,
            },
        }
    }
}

impl SteelDamper {
    /// Hysteretic damper pair with `A = 1` and `D = 1`.
    pub fn hysteretic(k: f64, k_xy: f64, alpha: f64, beta: f64, gamma: f64) -> Self {
        SteelDamper::Hysteretic {
            k,
            k_xy,
            alpha,
            law: BiaxialBoucWen {
                a: 1.0,
                beta,
                gamma,
                d_x: 1.0,
                d_y: 1.0,
            },
        }
    }
}

impl BiaxialDeviceParams {
    pub fn hysteretic_devices(&self) -> (bool, bool) {
        (self.esb.is_hysteretic(), self.sd.is_hysteretic())
    }
}
