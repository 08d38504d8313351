//! Wind-excited frame with roof tuned mass dampers.
//!
//! The frame is a pair of planar shear chains (x and y) sharing one roof.
//! One TMD acts in x and two identical TMDs act in y. Each TMD carries a
//! linear tuning spring plus a device force from [`TmdLaw`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::building::{Tridiagonal, GRAVITY};
use super::hysteresis::BoucWen;
use super::DynamicSystem;
use crate::error::{Error, Result};
use crate::modal;

/// Device force law of a TMD, in kN with `u` [m] and `u̇` [m/s] relative to the roof.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TmdLaw {
    Linear { c1: f64 },
    Cubic { c1: f64, c3: f64 },
    /// `q_y z + k_post u`, with `z` following `bw`.
    BoucWen { k_post: f64, q_y: f64, bw: BoucWen },
    /// `coef |u̇|^0.8 sgn(u̇) + c_lin u̇`.
    PowerLaw { coef: f64, c_lin: f64 },
}

impl TmdLaw {
    /// Bouc-Wen device from the hardness ratio, the yield force [kN] and a fixed
    /// pre-yield stiffness [kN/m].
    pub fn bouc_wen(r_k: f64, q_y: f64, k_pre: f64) -> Result<Self> {
        if !(r_k > 0.0 && r_k < 1.0) || !(q_y > 0.0) || !(k_pre > 0.0) {
            return Err(Error::Domain {
                variant: "tmd_bouc_wen",
                message: format!("need 0 < r_k < 1, Q_y > 0, k_pre > 0; got r_k={r_k}, Q_y={q_y}, k_pre={k_pre}"),
            });
        }
        Ok(TmdLaw::BoucWen {
            k_post: r_k * k_pre,
            q_y: q_y * (1.0 - r_k),
            bw: BoucWen::symmetric(q_y / k_pre, 1.0),
        })
    }

    pub fn hysteresis(&self) -> Option<&BoucWen> {
        match self {
            TmdLaw::BoucWen { bw, .. } => Some(bw),
            _ => None,
        }
    }
}

/// Device force for relative velocity `v`, relative displacement `u` and
/// evolutionary variable `z` (ignored by the viscous laws).
#[inline]
pub fn tmd_force(law: &TmdLaw, v: f64, u: f64, z: f64) -> f64 {
    match *law {
        TmdLaw::Linear { c1 } => c1 * v,
        TmdLaw::Cubic { c1, c3 } => c3 * v * v * v + c1 * v,
        TmdLaw::BoucWen { k_post, q_y, .. } => q_y * z + k_post * u,
        TmdLaw::PowerLaw { coef, c_lin } => coef * v.abs().powf(0.8) * v.signum() + c_lin * v,
    }
}

/// Geometry and tuning of the reduced wind-excited frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TmdFrameModel {
    pub floors: usize,
    /// Mass of every floor [Mg].
    pub floor_mass: f64,
    /// Fixed-base fundamental frequencies [Hz].
    pub frequency_x: f64,
    pub frequency_y: f64,
    /// Rayleigh ratio applied to modes 1 and 2 of each chain.
    pub damping_ratio: f64,
    /// TMD masses as fractions of the building mass.
    pub tmd_ratio_x: f64,
    pub tmd_ratio_y: f64,
    pub tmd_count_y: usize,
    /// Wind direction measured from the x axis [deg].
    pub wind_angle_deg: f64,
    /// Exponent of the height profile of the floor loads.
    pub height_exponent: f64,
}

impl Default for TmdFrameModel {
    fn default() -> Self {
        TmdFrameModel {
            floors: 20,
            floor_mass: 1000.0,
            frequency_x: 0.5893,
            frequency_y: 0.5718,
            damping_ratio: 0.02,
            tmd_ratio_x: 0.011,
            tmd_ratio_y: 0.0055,
            tmd_count_y: 2,
            wind_angle_deg: 30.0,
            height_exponent: 0.3,
        }
    }
}

impl TmdFrameModel {
    pub fn building_mass(&self) -> f64 {
        self.floors as f64 * self.floor_mass
    }

    pub fn tmd_mass_x(&self) -> f64 {
        self.tmd_ratio_x * self.building_mass()
    }

    pub fn tmd_mass_y(&self) -> f64 {
        self.tmd_ratio_y * self.building_mass()
    }

    /// Weight of the x TMD and of one y TMD [kN].
    pub fn tmd_weights(&self) -> (f64, f64) {
        (GRAVITY * self.tmd_mass_x(), GRAVITY * self.tmd_mass_y())
    }

    /// Tuning-spring stiffnesses [kN/m], targeting `f / (1 + μ)` with μ the
    /// total TMD mass ratio in that direction.
    pub fn tmd_stiffnesses(&self) -> (f64, f64) {
        let mu_x = self.tmd_ratio_x;
        let mu_y = self.tmd_ratio_y * self.tmd_count_y as f64;
        let k = |m: f64, f: f64, mu: f64| m * (2.0 * PI * f / (1.0 + mu)).powi(2);
        (
            k(self.tmd_mass_x(), self.frequency_x, mu_x),
            k(self.tmd_mass_y(), self.frequency_y, mu_y),
        )
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            self.floor_mass,
            self.frequency_x,
            self.frequency_y,
            self.tmd_ratio_x,
            self.tmd_ratio_y,
        ];
        if self.floors < 2 || self.tmd_count_y == 0 || positive.iter().any(|v| !(*v > 0.0)) || !(self.damping_ratio >= 0.0) {
            return Err(Error::Domain {
                variant: "tmd_frame",
                message: "floors >= 2, at least one y TMD, positive masses, ratios and frequencies required".into(),
            });
        }
        Ok(())
    }

    /// Uniform chain tuned to `frequency` with Rayleigh damping in modes 1 and 2.
    fn chain(&self, frequency: f64) -> Result<(Tridiagonal, Tridiagonal)> {
        let n = self.floors;
        let masses = vec![self.floor_mass; n];
        let unit = Tridiagonal::shear_chain(&vec![1.0; n]);
        let modes = modal::solve_modes(&unit_mass(n, self.floor_mass), &unit.to_dense(), 2)?;
        let scale = (2.0 * PI * frequency / modes.angular_frequencies()[0]).powi(2);
        let stiffness = Tridiagonal::shear_chain(&vec![scale; n]);
        let w = modes.angular_frequencies();
        let (wi, wj) = (w[0] * scale.sqrt(), w[1] * scale.sqrt());
        let zeta = self.damping_ratio;
        let damping = stiffness.combine(2.0 * zeta * wi * wj / (wi + wj), &masses, 2.0 * zeta / (wi + wj));
        Ok((stiffness, damping))
    }

    /// Normalized floor load shape `(z_i / H)^p`.
    pub fn load_profile(&self) -> Vec<f64> {
        let n = self.floors as f64;
        (1..=self.floors)
            .map(|i| (i as f64 / n).powf(self.height_exponent))
            .collect()
    }

    pub fn assemble(&self, law_x: TmdLaw, law_y: TmdLaw) -> Result<TmdFrame> {
        self.validate()?;
        let (kx, cx) = self.chain(self.frequency_x)?;
        let (ky, cy) = self.chain(self.frequency_y)?;
        let (kt_x, kt_y) = self.tmd_stiffnesses();
        let angle = self.wind_angle_deg.to_radians();
        Ok(TmdFrame {
            floors: self.floors,
            floor_mass: self.floor_mass,
            stiffness: [kx, ky],
            damping: [cx, cy],
            profile: self.load_profile(),
            direction: [angle.cos(), angle.sin()],
            tmd_mass: [self.tmd_mass_x(), self.tmd_mass_y()],
            tmd_spring: [kt_x, kt_y],
            tmd_count_y: self.tmd_count_y,
            law: [law_x, law_y],
        })
    }
}

fn unit_mass(n: usize, m: f64) -> nalgebra::DMatrix<f64> {
    nalgebra::DMatrix::from_diagonal_element(n, n, m)
}

/// Assembled frame. Input is a scalar wind force history [kN] per unit
/// profile; floor `i` receives `w(t)·profile_i·(cos θ, sin θ)`.
///
/// State layout: `[X (n), Y (n), u_x, u_y1..u_ym]` displacements, the same
/// block of velocities, then one `z` per TMD. TMD displacements are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct TmdFrame {
    floors: usize,
    floor_mass: f64,
    stiffness: [Tridiagonal; 2],
    damping: [Tridiagonal; 2],
    profile: Vec<f64>,
    direction: [f64; 2],
    tmd_mass: [f64; 2],
    tmd_spring: [f64; 2],
    tmd_count_y: usize,
    law: [TmdLaw; 2],
}

impl TmdFrame {
    fn dofs(&self) -> usize {
        2 * self.floors + 1 + self.tmd_count_y
    }

    fn tmds(&self) -> usize {
        1 + self.tmd_count_y
    }

    /// Direction (0 = x, 1 = y) of TMD `j`.
    fn tmd_axis(j: usize) -> usize {
        usize::from(j > 0)
    }

    /// Relative displacement, relative velocity and total force exerted on TMD `j`.
    fn tmd_state(&self, state: &[f64], j: usize) -> (f64, f64, f64) {
        let n = self.floors;
        let dofs = self.dofs();
        let axis = Self::tmd_axis(j);
        let roof = axis * n + n - 1;
        let u = state[2 * n + j] - state[roof];
        let v = state[dofs + 2 * n + j] - state[dofs + roof];
        let z = state[2 * dofs + j];
        let force = self.tmd_spring[axis] * u + tmd_force(&self.law[axis], v, u, z);
        (u, v, force)
    }
}

impl DynamicSystem for TmdFrame {
    fn state_dim(&self) -> usize {
        2 * self.dofs() + self.tmds()
    }

    fn derivative(&self, state: &[f64], input: &[f64], rate: &mut [f64]) {
        let n = self.floors;
        let dofs = self.dofs();
        let w = input[0];
        let (disp_rate, rest) = rate.split_at_mut(dofs);
        let (acc, z_rate) = rest.split_at_mut(dofs);
        disp_rate.copy_from_slice(&state[dofs..2 * dofs]);
        acc.fill(0.0);
        for axis in 0..2 {
            let x = &state[axis * n..axis * n + n];
            let v = &state[dofs + axis * n..dofs + axis * n + n];
            let out = &mut acc[axis * n..axis * n + n];
            self.stiffness[axis].mul_add(x, out);
            self.damping[axis].mul_add(v, out);
            for i in 0..n {
                out[i] = -out[i];
                out[i] += w * self.direction[axis] * self.profile[i];
            }
        }
        for j in 0..self.tmds() {
            let axis = Self::tmd_axis(j);
            let (_, v, force) = self.tmd_state(state, j);
            acc[axis * n + n - 1] += force;
            acc[2 * n + j] = -force / self.tmd_mass[axis];
            z_rate[j] = match self.law[axis].hysteresis() {
                Some(bw) => bw.rate(state[2 * dofs + j], v),
                None => 0.0,
            };
        }
        for a in &mut acc[..2 * n] {
            *a /= self.floor_mass;
        }
    }

    fn project(&self, state: &mut [f64]) {
        let offset = 2 * self.dofs();
        for j in 0..self.tmds() {
            if let Some(bw) = self.law[Self::tmd_axis(j)].hysteresis() {
                let limit = bw.z_max();
                state[offset + j] = state[offset + j].clamp(-limit, limit);
            }
        }
    }

    fn channels(&self) -> Vec<String> {
        let mut names = vec!["roof_accel_x".to_string(), "roof_accel_y".to_string()];
        names.push("roof_disp_x".into());
        names.push("roof_disp_y".into());
        names.push("tmd_x_force".into());
        names.push("tmd_x_disp".into());
        for j in 1..=self.tmd_count_y {
            names.push(format!("tmd_y{j}_force"));
            names.push(format!("tmd_y{j}_disp"));
        }
        names
    }

    fn outputs(&self, state: &[f64], rate: &[f64], _input: &[f64], out: &mut [f64]) {
        let n = self.floors;
        let dofs = self.dofs();
        out[0] = rate[dofs + n - 1];
        out[1] = rate[dofs + 2 * n - 1];
        out[2] = state[n - 1];
        out[3] = state[2 * n - 1];
        for j in 0..self.tmds() {
            let (u, _, force) = self.tmd_state(state, j);
            out[4 + 2 * j] = force;
            out[5 + 2 * j] = u;
        }
    }
}
