//! Shear-building superstructures, fixed-base or on an isolation layer.
//!
//! Solver units: mass [Mg], force [kN], length [m], time [s].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::isolator::IsolatorLaw;
use super::DynamicSystem;
use crate::error::{Error, Result};
use crate::modal;

pub const GRAVITY: f64 = 9.80665;

/// Story-count limit for the stack-allocated isolated-building kernel.
pub const MAX_STORIES: usize = 64;

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn diagonal(diag: Vec<f64>) -> Self {
        let off = vec![0.0; diag.len().saturating_sub(1)];
        Tridiagonal { diag, off }
    }

    /// Stiffness of a fixed-base shear chain from story stiffnesses.
    pub fn shear_chain(stiffnesses: &[f64]) -> Self {
        let n = stiffnesses.len();
        let diag = (0..n)
            .map(|i| stiffnesses[i] + stiffnesses.get(i + 1).copied().unwrap_or(0.0))
            .collect();
        let off = (1..n).map(|i| -stiffnesses[i]).collect();
        Tridiagonal { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `a·M + b·self` for a diagonal `M`.
    pub fn combine(&self, a: f64, mass: &[f64], b: f64) -> Self {
        Tridiagonal {
            diag: self.diag.iter().zip(mass).map(|(k, m)| a * m + b * k).collect(),
            off: self.off.iter().map(|k| b * k).collect(),
        }
    }

    /// Adds `self · x` into `y`.
    #[inline]
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] += acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = self.off[i];
                m[(i + 1, i)] = self.off[i];
            }
        }
        m
    }
}

/// Superstructure of a shear building with Rayleigh damping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShearBuildingModel {
    /// Floor masses from the first story up [Mg].
    pub story_masses: Vec<f64>,
    /// Story stiffnesses [MN/m].
    pub story_stiffnesses: Vec<f64>,
    /// One-based fixed-base modes that receive `damping_ratio`.
    pub damping_modes: (usize, usize),
    pub damping_ratio: f64,
    /// Base (isolation-level) mass [Mg].
    pub base_mass: f64,
}

/// Three 300 Mg stories at 40 MN/m on a 500 Mg base, 3% in modes 1 and 2.
impl Default for ShearBuildingModel {
    fn default() -> Self {
        ShearBuildingModel {
            story_masses: vec![300.0; 3],
            story_stiffnesses: vec![40.0; 3],
            damping_modes: (1, 2),
            damping_ratio: 0.03,
            base_mass: 500.0,
        }
    }
}

impl ShearBuildingModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.story_masses.len();
        if n == 0 || self.story_stiffnesses.len() != n {
            return Err(Error::Dimension(format!(
                "{} story masses and {} story stiffnesses",
                n,
                self.story_stiffnesses.len()
            )));
        }
        if self.story_masses.iter().chain(&self.story_stiffnesses).any(|v| !(*v > 0.0)) {
            return Err(Error::Domain {
                variant: "shear_building",
                message: "story masses and stiffnesses must be positive".into(),
            });
        }
        if !(self.base_mass >= 0.0) || !(self.damping_ratio >= 0.0) {
            return Err(Error::Domain {
                variant: "shear_building",
                message: "base mass and damping ratio must be non-negative".into(),
            });
        }
        let (i, j) = self.damping_modes;
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::Domain {
                variant: "shear_building",
                message: format!("damping modes ({i}, {j}) outside 1..={n}"),
            });
        }
        Ok(())
    }

    pub fn stories(&self) -> usize {
        self.story_masses.len()
    }

    /// Superstructure plus base mass [Mg].
    pub fn total_mass(&self) -> f64 {
        self.story_masses.iter().sum::<f64>() + self.base_mass
    }

    /// Weight of the whole isolated structure [kN].
    pub fn weight(&self) -> f64 {
        GRAVITY * self.total_mass()
    }

    /// Stiffness in solver units [kN/m].
    pub fn stiffness(&self) -> Tridiagonal {
        let k: Vec<f64> = self.story_stiffnesses.iter().map(|k| k * 1e3).collect();
        Tridiagonal::shear_chain(&k)
    }

    pub fn mass_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.story_masses))
    }

    /// Mass- and stiffness-proportional coefficients `(a0, a1)` giving the
    /// target ratio in the two designated fixed-base modes.
    pub fn rayleigh_coefficients(&self) -> Result<(f64, f64)> {
        self.validate()?;
        let modes = modal::solve_modes(&self.mass_matrix(), &self.stiffness().to_dense(), self.stories())?;
        let w = modes.angular_frequencies();
        let (wi, wj) = (w[self.damping_modes.0 - 1], w[self.damping_modes.1 - 1]);
        let zeta = self.damping_ratio;
        Ok((2.0 * zeta * wi * wj / (wi + wj), 2.0 * zeta / (wi + wj)))
    }

    /// `C_s = a0 M_s + a1 K_s` [kN·s/m].
    pub fn damping(&self) -> Result<Tridiagonal> {
        let (a0, a1) = self.rayleigh_coefficients()?;
        Ok(self.stiffness().combine(a0, &self.story_masses, a1))
    }

    /// The superstructure on a fixed base.
    pub fn fixed_base(&self) -> Result<LinearChain> {
        LinearChain::new(self.story_masses.clone(), self.stiffness(), self.damping()?)
    }

    /// The superstructure on an isolation layer with force law `law`.
    pub fn isolated(&self, law: IsolatorLaw) -> Result<IsolatedBuilding> {
        if self.stories() > MAX_STORIES {
            return Err(Error::Dimension(format!(
                "isolated buildings support at most {MAX_STORIES} stories, got {}",
                self.stories()
            )));
        }
        Ok(IsolatedBuilding {
            masses: self.story_masses.clone(),
            stiffness: self.stiffness(),
            damping: self.damping()?,
            base_mass: self.base_mass,
            law,
        })
    }
}

/// Fixed-base chain under ground acceleration; displacements are relative
/// to the ground. State `[X, Ẋ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearChain {
    pub masses: Vec<f64>,
    pub stiffness: Tridiagonal,
    pub damping: Tridiagonal,
}

impl LinearChain {
    pub fn new(masses: Vec<f64>, stiffness: Tridiagonal, damping: Tridiagonal) -> Result<Self> {
        if stiffness.len() != masses.len() || damping.len() != masses.len() {
            return Err(Error::Dimension("chain matrices must match the mass count".into()));
        }
        Ok(LinearChain {
            masses,
            stiffness,
            damping,
        })
    }

    /// Kinetic plus strain energy.
    pub fn energy(&self, state: &[f64]) -> f64 {
        let n = self.masses.len();
        let (x, v) = state.split_at(n);
        let mut kx = vec![0.0; n];
        self.stiffness.mul_add(x, &mut kx);
        0.5 * (0..n).map(|i| self.masses[i] * v[i] * v[i] + x[i] * kx[i]).sum::<f64>()
    }
}

impl DynamicSystem for LinearChain {
    fn state_dim(&self) -> usize {
        2 * self.masses.len()
    }

    fn derivative(&self, state: &[f64], input: &[f64], rate: &mut [f64]) {
        let n = self.masses.len();
        let ag = input[0];
        let (x, v) = state.split_at(n);
        let (dx, dv) = rate.split_at_mut(n);
        dx.copy_from_slice(v);
        dv.fill(0.0);
        self.stiffness.mul_add(x, dv);
        self.damping.mul_add(v, dv);
        for i in 0..n {
            dv[i] = -ag - dv[i] / self.masses[i];
        }
    }

    fn channels(&self) -> Vec<String> {
        let n = self.masses.len();
        (1..=n)
            .map(|i| format!("floor{i}_abs_accel"))
            .chain((1..=n).map(|i| format!("floor{i}_disp")))
            .collect()
    }

    fn outputs(&self, state: &[f64], rate: &[f64], input: &[f64], out: &mut [f64]) {
        let n = self.masses.len();
        for i in 0..n {
            out[i] = rate[n + i] + input[0];
            out[n + i] = state[i];
        }
    }
}

/// Superstructure on an isolation layer. State `[X_s, Ẋ_s, x_b, ẋ_b, z]`
/// with every displacement relative to the ground; `z` is carried (and stays
/// zero) for linear isolators.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolatedBuilding {
    pub masses: Vec<f64>,
    pub stiffness: Tridiagonal,
    pub damping: Tridiagonal,
    pub base_mass: f64,
    pub law: IsolatorLaw,
}

impl IsolatedBuilding {
    fn stories(&self) -> usize {
        self.masses.len()
    }

    /// Superstructure force `C_s (Ẋ_s − 1ẋ_b) + K_s (X_s − 1x_b)`.
    fn story_forces(&self, state: &[f64], forces: &mut [f64]) {
        let n = self.stories();
        let (xb, vb) = (state[2 * n], state[2 * n + 1]);
        let mut rel = [0.0; MAX_STORIES];
        let mut relv = [0.0; MAX_STORIES];
        let (rel, relv) = (&mut rel[..n], &mut relv[..n]);
        for i in 0..n {
            rel[i] = state[i] - xb;
            relv[i] = state[n + i] - vb;
        }
        forces.fill(0.0);
        self.stiffness.mul_add(rel, forces);
        self.damping.mul_add(relv, forces);
    }

    /// Total mechanical energy (linear isolators only; hysteretic energy is not stored).
    pub fn energy(&self, state: &[f64]) -> f64 {
        let n = self.stories();
        let (xb, vb) = (state[2 * n], state[2 * n + 1]);
        let rel: Vec<f64> = (0..n).map(|i| state[i] - xb).collect();
        let mut krel = vec![0.0; n];
        self.stiffness.mul_add(&rel, &mut krel);
        let k_iso = match self.law {
            IsolatorLaw::Linear { k, .. } => k,
            IsolatorLaw::Hysteretic { k_post, .. } => k_post,
        };
        let kinetic: f64 = (0..n).map(|i| self.masses[i] * state[n + i].powi(2)).sum::<f64>() + self.base_mass * vb * vb;
        let strain: f64 = rel.iter().zip(&krel).map(|(a, b)| a * b).sum::<f64>() + k_iso * xb * xb;
        0.5 * (kinetic + strain)
    }
}

impl DynamicSystem for IsolatedBuilding {
    fn state_dim(&self) -> usize {
        2 * self.stories() + 3
    }

    fn derivative(&self, state: &[f64], input: &[f64], rate: &mut [f64]) {
        let n = self.stories();
        let ag = input[0];
        let (xb, vb, z) = (state[2 * n], state[2 * n + 1], state[2 * n + 2]);
        let mut f = [0.0; MAX_STORIES];
        let forces = &mut f[..n];
        self.story_forces(state, forces);
        rate[..n].copy_from_slice(&state[n..2 * n]);
        for i in 0..n {
            rate[n + i] = -ag - forces[i] / self.masses[i];
        }
        let fb = self.law.force(xb, vb, z);
        let coupling: f64 = forces.iter().sum();
        rate[2 * n] = vb;
        rate[2 * n + 1] = -ag + (coupling - fb) / self.base_mass;
        rate[2 * n + 2] = match self.law.hysteresis() {
            Some(bw) => bw.rate(z, vb),
            None => 0.0,
        };
    }

    fn project(&self, state: &mut [f64]) {
        if let Some(bw) = self.law.hysteresis() {
            let i = 2 * self.stories() + 2;
            let limit = bw.z_max();
            state[i] = state[i].clamp(-limit, limit);
        }
    }

    fn channels(&self) -> Vec<String> {
        let n = self.stories();
        let mut names = vec![
            "base_abs_accel".to_string(),
            "base_disp".to_string(),
            "base_vel".to_string(),
            "isolator_force".to_string(),
            "z".to_string(),
        ];
        names.extend((1..=n).map(|i| format!("floor{i}_abs_accel")));
        names
    }

    fn outputs(&self, state: &[f64], rate: &[f64], input: &[f64], out: &mut [f64]) {
        let n = self.stories();
        let ag = input[0];
        let (xb, vb, z) = (state[2 * n], state[2 * n + 1], state[2 * n + 2]);
        out[0] = rate[2 * n + 1] + ag;
        out[1] = xb;
        out[2] = vb;
        out[3] = self.law.force(xb, vb, z);
        out[4] = z;
        for i in 0..n {
            out[5 + i] = rate[n + i] + ag;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::isolator::{IsolatorParams, IsolatorVariant};

    pub(crate) fn benchmark_building() -> ShearBuildingModel {
        ShearBuildingModel {
            story_masses: vec![300.0; 3],
            story_stiffnesses: vec![40.0; 3],
            damping_modes: (1, 2),
            damping_ratio: 0.03,
            base_mass: 500.0,
        }
    }

    #[test]
    fn weight_matches_catalogue() {
        assert!((benchmark_building().weight() / 1e3 - 13.729).abs() < 1e-3);
    }

    #[test]
    fn rayleigh_hits_target_ratio_in_designated_modes() {
        let b = benchmark_building();
        let c = b.damping().unwrap().to_dense();
        let m = b.mass_matrix();
        let modes = modal::solve_modes(&m, &b.stiffness().to_dense(), 3).unwrap();
        let w = modes.angular_frequencies();
        for j in [0, 1] {
            let phi = modes.shape(j);
            let modal_c = (phi.transpose() * &c * &phi)[(0, 0)];
            let modal_m = (phi.transpose() * &m * &phi)[(0, 0)];
            let zeta = modal_c / (2.0 * w[j] * modal_m);
            assert!((zeta - 0.03).abs() / 0.03 < 1e-8, "mode {j}: {zeta}");
        }
    }

    #[test]
    fn pre_yield_restoring_force() {
        let b = benchmark_building();
        let params = IsolatorParams {
            variant: IsolatorVariant::Bilinear,
            k_post: 4.0,
            c_b: 0.0,
            r_k: 1.0 / 6.0,
            q_y_percent: Some(5.0),
            r_d: None,
        };
        let law = params.law(b.weight(), b.total_mass()).unwrap();
        let bw = *law.hysteresis().unwrap();
        // Drive z along a slow monotonic path to x_b = 0.5 x_y and compare to k_pre x_b.
        let x_target = 0.5 / bw.a;
        let steps = 200_000;
        let dx = x_target / steps as f64;
        let mut z = 0.0;
        for _ in 0..steps {
            z += bw.rate(z, 1.0) * dx;
        }
        let force = law.force(x_target, 0.0, z);
        assert!((force - 24_000.0 * x_target).abs() / force < 1e-3, "{force}");
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let t = Tridiagonal::shear_chain(&[3.0, 2.0, 1.0]);
        let x = [1.0, -2.0, 0.5];
        let mut y = [0.0; 3];
        t.mul_add(&x, &mut y);
        let dense = t.to_dense() * nalgebra::DVector::from_column_slice(&x);
        for i in 0..3 {
            assert!((y[i] - dense[i]).abs() < 1e-14);
        }
        let (_, k) = modal::shear_chain_matrices(&[1.0; 3], &[3.0, 2.0, 1.0]);
        assert_eq!(t.to_dense(), k);
    }
}
