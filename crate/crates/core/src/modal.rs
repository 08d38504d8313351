//! Natural frequencies, mode shapes and modal residuals for small linear models.
//!
//! The generalized problem `K φ = λ M φ` is reduced to a standard symmetric
//! one through the Cholesky factor of `M`, solved densely, and mapped back.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModalResult {
    /// Eigenvalues `λ = ω²` in ascending order [rad²/s²].
    pub eigenvalues: Vec<f64>,
    /// Natural frequencies [Hz], ascending.
    pub frequencies: Vec<f64>,
    /// DOF × modes; unit Euclidean norm, largest-magnitude entry positive.
    pub mode_shapes: DMatrix<f64>,
}

impl ModalResult {
    pub fn from_parts(frequencies: Vec<f64>, mode_shapes: DMatrix<f64>) -> Result<Self> {
        if frequencies.len() != mode_shapes.ncols() {
            return Err(Error::Dimension(format!(
                "{} frequencies but {} mode shapes",
                frequencies.len(),
                mode_shapes.ncols()
            )));
        }
        let eigenvalues = frequencies.iter().map(|f| (2.0 * PI * f).powi(2)).collect();
        let mut mode_shapes = mode_shapes;
        for mut col in mode_shapes.column_iter_mut() {
            normalize_shape(&mut col);
        }
        Ok(ModalResult {
            eigenvalues,
            frequencies,
            mode_shapes,
        })
    }

    pub fn mode_count(&self) -> usize {
        self.frequencies.len()
    }

    pub fn angular_frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect()
    }

    pub fn shape(&self, mode: usize) -> DVector<f64> {
        self.mode_shapes.column(mode).into_owned()
    }
}

fn normalize_shape<S>(col: &mut nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::U1, S>)
where
    S: nalgebra::StorageMut<f64, nalgebra::Dyn, nalgebra::U1>,
{
    let norm = col.norm();
    if norm > 0.0 {
        *col /= norm;
    }
    let pivot = col.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if pivot < 0.0 {
        col.neg_mut();
    }
}

/// Solves `K φ = λ M φ` for the `n_modes` lowest modes.
pub fn solve_modes(mass: &DMatrix<f64>, stiffness: &DMatrix<f64>, n_modes: usize) -> Result<ModalResult> {
    let n = mass.nrows();
    if !mass.is_square() || stiffness.shape() != mass.shape() {
        return Err(Error::Dimension(format!(
            "mass {:?} and stiffness {:?} must be equal square matrices",
            mass.shape(),
            stiffness.shape()
        )));
    }
    if n_modes == 0 || n_modes > n {
        return Err(Error::Dimension(format!("requested {n_modes} modes from {n} DOF")));
    }
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Decomposition("mass matrix is not symmetric positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Decomposition("singular Cholesky factor".into()))?;
    let reduced = &l_inv * stiffness * l_inv.transpose();
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reduced);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    order.truncate(n_modes);

    let back = l_inv.transpose();
    let mut shapes = DMatrix::zeros(n, n_modes);
    let mut eigenvalues = Vec::with_capacity(n_modes);
    for (j, &idx) in order.iter().enumerate() {
        let mut phi = &back * eig.eigenvectors.column(idx);
        normalize_shape(&mut phi);
        shapes.set_column(j, &phi);
        // Rigid modes can come out as tiny negatives.
        eigenvalues.push(eig.eigenvalues[idx].max(0.0));
    }
    let frequencies = eigenvalues.iter().map(|l| l.sqrt() / (2.0 * PI)).collect();
    Ok(ModalResult {
        eigenvalues,
        frequencies,
        mode_shapes: shapes,
    })
}

/// Modal assurance criterion `|aᵀb|² / (aᵀa · bᵀb)`.
pub fn mac(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("MAC of lengths {} and {}", a.len(), b.len())));
    }
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    if aa == 0.0 || bb == 0.0 {
        return Err(Error::Domain {
            variant: "mac",
            message: "zero-norm mode shape".into(),
        });
    }
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((ab * ab / (aa * bb)).clamp(0.0, 1.0))
}

/// Stacked residual: frequency errors [Hz] followed by `1 − MAC` per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalResidual {
    pub values: Vec<f64>,
    pub mode_count: usize,
}

impl ModalResidual {
    pub fn frequency_errors(&self) -> &[f64] {
        &self.values[..self.mode_count]
    }

    pub fn shape_errors(&self) -> &[f64] {
        &self.values[self.mode_count..]
    }
}

/// Pairs modes by sorted index.
pub fn modal_residual(model: &ModalResult, reference: &ModalResult) -> Result<ModalResidual> {
    let n = reference.mode_count();
    if model.mode_count() != n {
        return Err(Error::Dimension(format!(
            "model has {} modes, reference has {n}",
            model.mode_count()
        )));
    }
    if model.mode_shapes.nrows() != reference.mode_shapes.nrows() {
        return Err(Error::Dimension(format!(
            "model shapes have {} DOF, reference shapes have {}",
            model.mode_shapes.nrows(),
            reference.mode_shapes.nrows()
        )));
    }
    let mut values = Vec::with_capacity(2 * n);
    values.extend(model.frequencies.iter().zip(&reference.frequencies).map(|(m, r)| m - r));
    for i in 0..n {
        let m = mac(model.mode_shapes.column(i).as_slice(), reference.mode_shapes.column(i).as_slice())?;
        values.push(1.0 - m);
    }
    Ok(ModalResidual { values, mode_count: n })
}

/// Mass and stiffness of a fixed-base shear chain (story 1 at the ground).
pub fn shear_chain_matrices(masses: &[f64], stiffnesses: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = masses.len();
    let m = DMatrix::from_diagonal(&DVector::from_column_slice(masses));
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] += stiffnesses[i];
        if i + 1 < n {
            k[(i, i)] += stiffnesses[i + 1];
            k[(i, i + 1)] -= stiffnesses[i + 1];
            k[(i + 1, i)] -= stiffnesses[i + 1];
        }
    }
    (m, k)
}
