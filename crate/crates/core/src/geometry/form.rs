//! Hermitian forms on tangent spaces, used for the Kobayashi metric and its
//! pullbacks.

use super::{C64, GeometryError};
use nalgebra::{DMatrix, DVector};

/// Positive semi-definite Hermitian form `v |-> v* H v`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    matrix: DMatrix<C64>,
}

impl HermitianForm {
    /// Validates Hermitian symmetry (1e-12 relative) and positive
    /// semi-definiteness (eigenvalues above `-1e-10 * |H|`).
    pub fn new(matrix: DMatrix<C64>) -> Result<Self, GeometryError> {
        let scale = matrix.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        let tol = 1e-12 * scale.max(1.0);
        let mut asym = 0.0_f64;
        for j in 0..matrix.nrows() {
            for k in 0..matrix.ncols() {
                asym = asym.max((matrix[(j, k)] - matrix[(k, j)].conj()).norm());
            }
        }
        if asym > tol {
            return Err(GeometryError::NotHermitian(asym));
        }
        let form = Self { matrix };
        if let Some(min) = form.eigenvalues().last().copied() {
            if min < -1e-10 * scale.max(1.0) {
                return Err(GeometryError::NotPositive(min));
            }
        }
        Ok(form)
    }

    /// Constructor for matrices produced by `J* H J` sandwiches, which are
    /// Hermitian by construction; symmetrizes to clean up rounding.
    pub fn from_sandwich(matrix: DMatrix<C64>) -> Self {
        let herm = matrix.map(|c| c) * C64::new(0.5, 0.0)
            + matrix.adjoint() * C64::new(0.5, 0.0);
        Self { matrix: herm }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Evaluates `v* H v` (real for Hermitian `H`).
    pub fn evaluate(&self, v: &[C64]) -> f64 {
        let v = DVector::from_column_slice(v);
        let hv = &self.matrix * &v;
        v.dotc(&hv).re
    }

    /// Eigenvalues sorted in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = self.matrix.clone().symmetric_eigen();
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        vals
    }
}
