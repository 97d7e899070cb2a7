//! Automorphisms of the unit ball parametrized as `z -> phi_a(-U z)` with
//! `U` unitary and `a` the image of the origin. Composition and inversion
//! stay inside the parametrization via Jacobian extraction at the origin,
//! avoiding any matrix-group representation.

use super::MapsError;
use crate::geometry::{BallInvolution, BallPoint, C64};
use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct BallAutomorphism {
    unitary: DMatrix<C64>,
    center: Vec<C64>,
    involution: BallInvolution,
}

impl BallAutomorphism {
    pub fn new(unitary: DMatrix<C64>, center: Vec<C64>) -> Result<Self, MapsError> {
        let q = center.len();
        if unitary.nrows() != q || unitary.ncols() != q {
            return Err(MapsError::InvalidParameters(format!(
                "unitary part must be {q} x {q}"
            )));
        }
        let gram = unitary.adjoint() * &unitary;
        let mut dev = 0.0_f64;
        for j in 0..q {
            for k in 0..q {
                let expect = if j == k { 1.0 } else { 0.0 };
                dev = dev.max((gram[(j, k)] - C64::new(expect, 0.0)).norm());
            }
        }
        if dev > 1e-12 {
            return Err(MapsError::InvalidParameters(format!(
                "matrix is not unitary (deviation {dev})"
            )));
        }
        let involution = BallInvolution::new(center.clone())
            .map_err(|e| MapsError::InvalidParameters(e.to_string()))?;
        Ok(Self {
            unitary,
            center,
            involution,
        })
    }

    pub fn identity(q: usize) -> Self {
        Self::new(DMatrix::identity(q, q), vec![C64::new(0.0, 0.0); q]).unwrap()
    }

    /// Unitary rotation `z -> U z`.
    pub fn rotation(unitary: DMatrix<C64>) -> Result<Self, MapsError> {
        let q = unitary.nrows();
        Self::new(unitary, vec![C64::new(0.0, 0.0); q])
    }

    /// The involution `phi_a` itself, i.e. `U = -I`.
    pub fn involution(center: Vec<C64>) -> Result<Self, MapsError> {
        let q = center.len();
        Self::new(DMatrix::identity(q, q) * C64::new(-1.0, 0.0), center)
    }

    /// Hyperbolic automorphism of the disc `z -> (z + a)/(1 + a z)` for real
    /// `a` in (-1, 1), with Denjoy-Wolff point 1 and dilation (1-a)/(1+a).
    pub fn disc_hyperbolic(a: f64) -> Result<Self, MapsError> {
        if !(a.abs() < 1.0) {
            return Err(MapsError::InvalidParameters(format!(
                "Mobius parameter must satisfy |a| < 1, got {a}"
            )));
        }
        // phi_c(-z) with c = a: (c + z)/(1 + conj(c) z).
        Self::new(DMatrix::identity(1, 1), vec![C64::new(a, 0.0)])
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn unitary(&self) -> &DMatrix<C64> {
        &self.unitary
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    fn rotate(&self, z: &[C64]) -> Vec<C64> {
        (0..self.dim())
            .map(|j| {
                -(0..self.dim())
                    .map(|k| self.unitary[(j, k)] * z[k])
                    .sum::<C64>()
            })
            .collect()
    }

    pub fn eval(&self, x: &BallPoint) -> Result<BallPoint, MapsError> {
        if x.dim() != self.dim() {
            return Err(MapsError::DomainMismatch);
        }
        // |(-U)z| = |z|, so the rotated point keeps the boundary gap.
        let rotated = BallPoint::with_gap(self.rotate(x.coords()), x.boundary_gap());
        Ok(self.involution.apply(&rotated))
    }

    /// Action on raw coordinates, valid on the closed ball (used for
    /// boundary fixed points).
    pub fn eval_raw(&self, z: &[C64]) -> Vec<C64> {
        self.involution.apply_raw(&self.rotate(z))
    }

    pub fn jacobian(&self, z: &[C64]) -> DMatrix<C64> {
        let rotated = self.rotate(z);
        let j_phi = self.involution.jacobian(&rotated);
        j_phi * (&self.unitary * C64::new(-1.0, 0.0))
    }

    /// Recovers parameters from the value and Jacobian of an automorphism at
    /// the origin: `a = h(0)` and `-U = J_{phi_a}(0)^{-1} J_h(0)` with the
    /// closed-form inverse `J_{phi_a}(0)^{-1} = -(P/gap + Q/s)`.
    fn from_action(value0: Vec<C64>, jac0: DMatrix<C64>) -> Result<Self, MapsError> {
        let q = value0.len();
        let norm_sq: f64 = value0.iter().map(|c| c.norm_sqr()).sum();
        let gap = 1.0 - norm_sq;
        if !(gap > 0.0) {
            return Err(MapsError::InvalidParameters(
                "composition center left the open ball".into(),
            ));
        }
        let s = gap.sqrt();
        let mut inv = DMatrix::<C64>::zeros(q, q);
        for j in 0..q {
            for k in 0..q {
                let p_jk = if norm_sq == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    value0[j] * value0[k].conj() / norm_sq
                };
                let q_jk = if j == k { C64::new(1.0, 0.0) - p_jk } else { -p_jk };
                inv[(j, k)] = -(p_jk / gap + q_jk / s);
            }
        }
        let u = -(inv * jac0);
        let u = reunitarize(u);
        Self::new(u, value0)
    }

    /// Composition `self . other` (automorphism group law).
    pub fn compose(&self, other: &BallAutomorphism) -> Result<BallAutomorphism, MapsError> {
        if self.dim() != other.dim() {
            return Err(MapsError::DomainMismatch);
        }
        let zero = vec![C64::new(0.0, 0.0); self.dim()];
        let mid = other.eval_raw(&zero);
        let value0 = self.eval_raw(&mid);
        let jac0 = self.jacobian(&mid) * other.jacobian(&zero);
        Self::from_action(value0, jac0)
    }

    /// Inverse automorphism: `gamma^{-1}(z) = -U* phi_a(z)`.
    pub fn inverse(&self) -> BallAutomorphism {
        let q = self.dim();
        let zero = vec![C64::new(0.0, 0.0); q];
        let uh = self.unitary.adjoint();
        let phi0 = self.involution.apply_raw(&zero);
        let value0: Vec<C64> = (0..q)
            .map(|j| -(0..q).map(|k| uh[(j, k)] * phi0[k]).sum::<C64>())
            .collect();
        let jac0 = (uh * C64::new(-1.0, 0.0)) * self.involution.jacobian(&zero);
        Self::from_action(value0, jac0).expect("inverse of an automorphism is an automorphism")
    }

    /// Coefficient-level distance: compares centers and unitary parts.
    pub fn parameter_distance(&self, other: &BallAutomorphism) -> f64 {
        let mut d = self
            .center
            .iter()
            .zip(&other.center)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0_f64, f64::max);
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                d = d.max((self.unitary[(j, k)] - other.unitary[(j, k)]).norm());
            }
        }
        d
    }
}

/// Projects a numerically-unitary matrix back onto the unitary group via the
/// polar factor of its SVD.
pub(crate) fn reunitarize(m: DMatrix<C64>) -> DMatrix<C64> {
    if m.nrows() == 0 {
        return m;
    }
    let svd = m.clone().svd(true, true);
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => u * v_t,
        _ => m,
    }
}

/// Builds a unitary matrix sending the unit vector `a` to `e_1`: a phase
/// rotation making the first component real followed by a Householder
/// reflection.
pub fn unitary_sending_to_e1(a: &[C64]) -> Result<DMatrix<C64>, MapsError> {
    let q = a.len();
    let norm: f64 = a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(MapsError::InvalidParameters(format!(
            "expected a unit vector, norm = {norm}"
        )));
    }
    let phase = if a[0].norm() < 1e-14 {
        C64::new(1.0, 0.0)
    } else {
        a[0].conj() / a[0].norm()
    };
    let b: Vec<C64> = a.iter().map(|c| c * phase).collect();
    // b has real nonnegative first component; reflect b to e_1.
    let mut u = b.clone();
    u[0] -= C64::new(1.0, 0.0);
    let usq: f64 = u.iter().map(|c| c.norm_sqr()).sum();
    let mut h = DMatrix::<C64>::identity(q, q);
    if usq > 1e-28 {
        for j in 0..q {
            for k in 0..q {
                h[(j, k)] -= u[j] * u[k].conj() * (2.0 / usq);
            }
        }
    }
    // Total map: H . diag-phase applied first on coordinate 0 is wrong; the
    // phase acts as scalar multiplication of the whole reflection input, so
    // fold it into H column-wise: V z = H (phase * z).
    Ok(h * C64::new(phase.re, phase.im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{kobayashi_distance_ball, MetricConvention};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_automorphism(rng: &mut ChaCha8Rng, q: usize) -> BallAutomorphism {
        // Random center + random unitary from QR-like Gram-Schmidt.
        let center: Vec<C64> = (0..q)
            .map(|_| c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)))
            .collect();
        let mut cols: Vec<DVector<C64>> = Vec::new();
        for _ in 0..q {
            let mut v = DVector::from_iterator(
                q,
                (0..q).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
            );
            for prev in &cols {
                let proj = prev.dotc(&v);
                v -= prev * proj;
            }
            let n = v.norm();
            cols.push(v / C64::new(n, 0.0));
        }
        let u = DMatrix::from_columns(&cols);
        BallAutomorphism::new(u, center).unwrap()
    }

    #[test]
    fn identity_acts_trivially() {
        let id = BallAutomorphism::identity(2);
        let x = BallPoint::new(vec![c(0.2, 0.3), c(-0.1, 0.4)]).unwrap();
        let y = id.eval(&x).unwrap();
        assert!(x.euclidean_distance(&y) < 1e-15);
        let j = id.jacobian(x.coords());
        for j_ in 0..2 {
            for k in 0..2 {
                let expect = if j_ == k { 1.0 } else { 0.0 };
                assert!((j[(j_, k)] - c(expect, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn disc_automorphism_formula() {
        // (z + 1/2)/(1 + z/2).
        let m = BallAutomorphism::disc_hyperbolic(0.5).unwrap();
        let x = BallPoint::new(vec![c(0.3, 0.2)]).unwrap();
        let y = m.eval(&x).unwrap();
        let z = c(0.3, 0.2);
        let expect = (z + 0.5) / (z * 0.5 + 1.0);
        assert!((y.coords()[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn automorphisms_are_kobayashi_isometries() {
        let conv = MetricConvention::default();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let q = rng.gen_range(1..=3);
            let g = random_automorphism(&mut rng, q);
            let r = 0.5 / (q as f64).sqrt();
            let sample = |rng: &mut ChaCha8Rng| {
                BallPoint::new(
                    (0..q)
                        .map(|_| c(rng.gen_range(-r..r), rng.gen_range(-r..r)))
                        .collect(),
                )
                .unwrap()
            };
            let x = sample(&mut rng);
            let y = sample(&mut rng);
            let before = kobayashi_distance_ball(&x, &y, &conv).unwrap();
            let after =
                kobayashi_distance_ball(&g.eval(&x).unwrap(), &g.eval(&y).unwrap(), &conv)
                    .unwrap();
            assert!((before - after).abs() < 1e-9, "{before} vs {after}");
        }
    }

    #[test]
    fn compose_matches_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let q = rng.gen_range(1..=3);
            let g1 = random_automorphism(&mut rng, q);
            let g2 = random_automorphism(&mut rng, q);
            let comp = g1.compose(&g2).unwrap();
            let x = BallPoint::new(
                (0..q)
                    .map(|_| c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)))
                    .collect(),
            )
            .unwrap();
            let via_comp = comp.eval(&x).unwrap();
            let via_steps = g1.eval(&g2.eval(&x).unwrap()).unwrap();
            assert!(via_comp.euclidean_distance(&via_steps) < 1e-12);
        }
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let q = rng.gen_range(1..=3);
            let g = random_automorphism(&mut rng, q);
            let inv = g.inverse();
            let id = g.compose(&inv).unwrap();
            assert!(id.parameter_distance(&BallAutomorphism::identity(q)) < 1e-11);
        }
    }

    #[test]
    fn householder_sends_unit_vector_to_e1() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let q = rng.gen_range(1..=4);
            let mut v: Vec<C64> = (0..q)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let n: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            for x in &mut v {
                *x /= n;
            }
            let u = unitary_sending_to_e1(&v).unwrap();
            let img: Vec<C64> = (0..q)
                .map(|j| (0..q).map(|k| u[(j, k)] * v[k]).sum())
                .collect();
            assert!((img[0] - c(1.0, 0.0)).norm() < 1e-12, "img = {img:?}");
            for x in &img[1..] {
                assert!(x.norm() < 1e-12);
            }
            let gram = u.adjoint() * &u;
            for j in 0..q {
                for k in 0..q {
                    let expect = if j == k { 1.0 } else { 0.0 };
                    assert!((gram[(j, k)] - c(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }
}
