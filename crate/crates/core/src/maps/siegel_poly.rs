//! Triangular polynomial self-maps of the Siegel half-space:
//! `z' = alpha z + c^T u + i u^T S u + beta`, `u' = A u + b` with `alpha`
//! real positive, `S` symmetric. The class is closed under composition,
//! which is what makes coefficient-level commutation certificates and
//! induced base maps exact. Both explicit example families live here.

use super::MapsError;
use crate::geometry::{C64, SiegelPoint};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPolynomial {
    dim: usize,
    alpha: f64,
    linear: DVector<C64>,
    quad: DMatrix<C64>,
    constant: C64,
    matrix: DMatrix<C64>,
    offset: DVector<C64>,
}

impl SiegelPolynomial {
    pub fn new(
        dim: usize,
        alpha: f64,
        linear: DVector<C64>,
        quad: DMatrix<C64>,
        constant: C64,
        matrix: DMatrix<C64>,
        offset: DVector<C64>,
    ) -> Result<Self, MapsError> {
        let n = dim.checked_sub(1).ok_or_else(|| {
            MapsError::InvalidParameters("Siegel polynomial needs dimension >= 1".into())
        })?;
        if linear.len() != n
            || offset.len() != n
            || quad.nrows() != n
            || quad.ncols() != n
            || matrix.nrows() != n
            || matrix.ncols() != n
        {
            return Err(MapsError::InvalidParameters(format!(
                "coefficient shapes do not match dimension {dim}"
            )));
        }
        let scale = quad.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
        let mut asym = 0.0_f64;
        for j in 0..n {
            for k in 0..n {
                asym = asym.max((quad[(j, k)] - quad[(k, j)]).norm());
            }
        }
        if asym > 1e-12 * scale.max(1.0) {
            return Err(MapsError::InvalidParameters(format!(
                "quadratic coefficient matrix must be symmetric (asymmetry {asym})"
            )));
        }
        if !alpha.is_finite() {
            return Err(MapsError::InvalidParameters("alpha must be finite".into()));
        }
        Ok(Self {
            dim,
            alpha,
            linear,
            quad,
            constant,
            matrix,
            offset,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let n = dim - 1;
        Self {
            dim,
            alpha: 1.0,
            linear: DVector::zeros(n),
            quad: DMatrix::zeros(n, n),
            constant: C64::new(0.0, 0.0),
            matrix: DMatrix::identity(n, n),
            offset: DVector::zeros(n),
        }
    }

    /// The hyperbolic example `f(z, w, y) = (2z + i w^2, w, sqrt2 y_1, ...,
    /// sqrt2 y_{q-1}, 0, ..., 0)` on `H^m`, written with `u = (w, y)`.
    pub fn example_hyperbolic(m: usize, q: usize) -> Result<Self, MapsError> {
        if m < 2 || q < 1 || q > m - 1 {
            return Err(MapsError::InvalidParameters(format!(
                "example_hyperbolic requires 1 <= q <= m-1, got m={m}, q={q}"
            )));
        }
        let n = m - 1;
        let mut quad = DMatrix::zeros(n, n);
        quad[(0, 0)] = C64::new(1.0, 0.0);
        let mut matrix = DMatrix::zeros(n, n);
        matrix[(0, 0)] = C64::new(1.0, 0.0);
        for j in 1..q {
            matrix[(j, j)] = C64::new(2.0_f64.sqrt(), 0.0);
        }
        Self::new(
            m,
            2.0,
            DVector::zeros(n),
            quad,
            C64::new(0.0, 0.0),
            matrix,
            DVector::zeros(n),
        )
    }

    /// The parabolic example `g(z, w, y) = (z + i r^2 - 2 r w, w - i r,
    /// y_1, ..., y_{p-2}, 0, ..., 0)` on `H^m`.
    pub fn example_parabolic(m: usize, p: usize, r: f64) -> Result<Self, MapsError> {
        if m < 2 || p < 2 || p > m || r == 0.0 || !r.is_finite() {
            return Err(MapsError::InvalidParameters(format!(
                "example_parabolic requires 2 <= p <= m and r != 0, got m={m}, p={p}, r={r}"
            )));
        }
        let n = m - 1;
        let mut linear = DVector::zeros(n);
        linear[0] = C64::new(-2.0 * r, 0.0);
        let mut matrix = DMatrix::zeros(n, n);
        for j in 0..p - 1 {
            matrix[(j, j)] = C64::new(1.0, 0.0);
        }
        let mut offset = DVector::zeros(n);
        offset[0] = C64::new(0.0, -r);
        Self::new(
            m,
            1.0,
            linear,
            DMatrix::zeros(n, n),
            C64::new(0.0, r * r),
            matrix,
            offset,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn linear(&self) -> &DVector<C64> {
        &self.linear
    }

    pub fn quad(&self) -> &DMatrix<C64> {
        &self.quad
    }

    pub fn constant(&self) -> C64 {
        self.constant
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn offset(&self) -> &DVector<C64> {
        &self.offset
    }

    /// Evaluation in scaled coordinates. With the input represented as
    /// `(2^e z, 2^{e/2} u)` the image at the same exponent is
    /// `z' = alpha z + i u^T S u + 2^{-e/2} c^T u + 2^{-e} beta`,
    /// `u' = A u + 2^{-e/2} b`, so orbits never materialize `2^e z`.
    pub fn eval(&self, x: &SiegelPoint) -> Result<SiegelPoint, MapsError> {
        if x.dim() != self.dim {
            return Err(MapsError::DomainMismatch);
        }
        let e = x.scale();
        let (z, u) = x.scaled_parts();
        let half = f64::powi(2.0, -(e / 2));
        let full = half * half;
        let su: Vec<C64> = (0..u.len())
            .map(|j| (0..u.len()).map(|k| self.quad[(j, k)] * u[k]).sum())
            .collect();
        let usu: C64 = u.iter().zip(&su).map(|(a, b)| a * b).sum();
        let cu: C64 = self.linear.iter().zip(u).map(|(c, v)| c * v).sum();
        let z_new = z * self.alpha + C64::new(0.0, 1.0) * usu + cu * half + self.constant * full;
        let u_new: Vec<C64> = (0..u.len())
            .map(|j| {
                let row: C64 = (0..u.len()).map(|k| self.matrix[(j, k)] * u[k]).sum();
                row + self.offset[j] * half
            })
            .collect();
        SiegelPoint::from_scaled(z_new, u_new, e).map_err(|_| MapsError::DomainViolation {
            detail: format!(
                "image of a point left the Siegel domain (alpha = {}, scale 2^{e})",
                self.alpha
            ),
        })
    }

    /// Complex Jacobian at `x` in materialized coordinates:
    /// `[[alpha, c^T + 2i (S U)^T], [0, A]]`.
    pub fn jacobian(&self, x: &SiegelPoint) -> Result<DMatrix<C64>, MapsError> {
        if x.dim() != self.dim {
            return Err(MapsError::DomainMismatch);
        }
        let (_, u) = x.materialize();
        let n = self.dim - 1;
        let mut j = DMatrix::zeros(self.dim, self.dim);
        j[(0, 0)] = C64::new(self.alpha, 0.0);
        for k in 0..n {
            let su: C64 = (0..n).map(|l| self.quad[(k, l)] * u[l]).sum();
            j[(0, k + 1)] = self.linear[k] + C64::new(0.0, 2.0) * su;
            for l in 0..n {
                j[(k + 1, l + 1)] = self.matrix[(k, l)];
            }
        }
        Ok(j)
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &SiegelPolynomial) -> Result<SiegelPolynomial, MapsError> {
        if self.dim != other.dim {
            return Err(MapsError::DomainMismatch);
        }
        let f = self;
        let g = other;
        let alpha = f.alpha * g.alpha;
        let at = g.matrix.transpose();
        let sb = &f.quad * &g.offset;
        let linear = &g.linear * C64::new(f.alpha, 0.0)
            + &at * &f.linear
            + (&at * sb.clone()) * C64::new(0.0, 2.0);
        let quad = &g.quad * C64::new(f.alpha, 0.0) + &at * &f.quad * &g.matrix;
        let cb: C64 = f.linear.iter().zip(g.offset.iter()).map(|(c, b)| c * b).sum();
        let bsb: C64 = g.offset.iter().zip(sb.iter()).map(|(b, s)| b * s).sum();
        let constant =
            g.constant * f.alpha + cb + C64::new(0.0, 1.0) * bsb + f.constant;
        let matrix = &f.matrix * &g.matrix;
        let offset = &f.matrix * &g.offset + &f.offset;
        SiegelPolynomial::new(self.dim, alpha, linear, quad, constant, matrix, offset)
    }

    pub fn power(&self, n: u32) -> Result<SiegelPolynomial, MapsError> {
        let mut acc = SiegelPolynomial::identity(self.dim);
        for _ in 0..n {
            acc = self.compose(&acc)?;
        }
        Ok(acc)
    }

    /// Largest absolute difference between coefficients of two maps,
    /// relative to the larger coefficient magnitude.
    pub fn coefficient_distance(&self, other: &SiegelPolynomial) -> f64 {
        let mut scale = (self.alpha.abs().max(other.alpha.abs()))
            .max(self.constant.norm().max(other.constant.norm()));
        for (a, b) in self.linear.iter().zip(other.linear.iter()) {
            scale = scale.max(a.norm()).max(b.norm());
        }
        for (a, b) in self.quad.iter().zip(other.quad.iter()) {
            scale = scale.max(a.norm()).max(b.norm());
        }
        for (a, b) in self.matrix.iter().zip(other.matrix.iter()) {
            scale = scale.max(a.norm()).max(b.norm());
        }
        for (a, b) in self.offset.iter().zip(other.offset.iter()) {
            scale = scale.max(a.norm()).max(b.norm());
        }
        let scale = scale.max(1.0);
        let mut d = (self.alpha - other.alpha).abs();
        d = d.max((self.constant - other.constant).norm());
        d = d.max(
            self.linear
                .iter()
                .zip(other.linear.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        d = d.max(
            self.quad
                .iter()
                .zip(other.quad.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        d = d.max(
            self.matrix
                .iter()
                .zip(other.matrix.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        d = d.max(
            self.offset
                .iter()
                .zip(other.offset.iter())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max),
        );
        d / scale
    }

    /// Analytic self-map test. Writing `Im z = |u|^2 + h`, the image defect
    /// is `alpha h + F(u)` with the real quadratic function
    /// `F(u) = alpha |u|^2 + Im(c^T u) + Re(u^T S u) + Im beta - |A u + b|^2`.
    /// `F >= 0` everywhere together with `alpha > 0` certifies the self-map
    /// property. Returns the infimum of `F` (or `None` when unbounded below).
    pub fn analytic_margin(&self) -> Option<f64> {
        if !(self.alpha > 0.0) {
            return None;
        }
        let n = self.dim - 1;
        if n == 0 {
            let margin = self.constant.im;
            return Some(margin);
        }
        // Real coordinates v = (x, y), u = x + i y.
        let m2 = 2 * n;
        let mut quad = DMatrix::<f64>::zeros(m2, m2);
        for j in 0..n {
            quad[(j, j)] += self.alpha;
            quad[(n + j, n + j)] += self.alpha;
            for k in 0..n {
                let s = self.quad[(j, k)];
                quad[(j, k)] += s.re;
                quad[(n + j, n + k)] -= s.re;
                quad[(j, n + k)] -= s.im;
                quad[(n + j, k)] -= s.im;
            }
        }
        // |L v + b_v|^2 with L = [[A_R, -A_I], [A_I, A_R]].
        let mut l = DMatrix::<f64>::zeros(m2, m2);
        for j in 0..n {
            for k in 0..n {
                let a = self.matrix[(j, k)];
                l[(j, k)] = a.re;
                l[(j, n + k)] = -a.im;
                l[(n + j, k)] = a.im;
                l[(n + j, n + k)] = a.re;
            }
        }
        let mut bv = DVector::<f64>::zeros(m2);
        for j in 0..n {
            bv[j] = self.offset[j].re;
            bv[n + j] = self.offset[j].im;
        }
        let quad = quad - l.transpose() * &l;
        let mut lin = DVector::<f64>::zeros(m2);
        for j in 0..n {
            lin[j] = self.linear[j].im;
            lin[n + j] = self.linear[j].re;
        }
        lin -= l.transpose() * &bv * 2.0;
        let constant = self.constant.im - bv.dot(&bv);
        // Minimize v^T Q v + lin^T v + constant via the eigendecomposition
        // of the symmetric part of Q.
        let sym = (quad.clone() + quad.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        let tol = 1e-10 * eig.eigenvalues.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut min = constant;
        for (idx, lam) in eig.eigenvalues.iter().enumerate() {
            let dir = eig.eigenvectors.column(idx);
            let g = dir.dot(&lin);
            if *lam > tol {
                min -= g * g / (4.0 * lam);
            } else if *lam < -tol || g.abs() > tol {
                // Negative curvature or a linear slope along a flat
                // direction: unbounded below.
                return None;
            }
        }
        Some(min)
    }
}
