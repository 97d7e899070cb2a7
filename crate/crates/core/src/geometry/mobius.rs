//! The standard Mobius involution `phi_a` of the unit ball:
//! `phi_a(z) = (a - P_a z - s_a Q_a z)/(1 - <z, a>)` with `P_a` the
//! projection onto `a`, `Q_a = I - P_a` and `s_a = sqrt(1 - |a|^2)`.
//! It swaps `0` and `a` and is its own inverse.

use super::ball::{herm, BallPoint};
use super::{C64, GeometryError};
use nalgebra::DMatrix;

/// Precomputed data of one involution `phi_a`.
#[derive(Debug, Clone)]
pub struct BallInvolution {
    center: Vec<C64>,
    center_norm_sq: f64,
    gap: f64,
    s: f64,
}

impl BallInvolution {
    pub fn new(center: Vec<C64>) -> Result<Self, GeometryError> {
        let norm_sq: f64 = center.iter().map(|c| c.norm_sqr()).sum();
        let gap = 1.0 - norm_sq;
        if !(gap > 0.0) {
            return Err(GeometryError::NotInBall { norm_sq });
        }
        Ok(Self {
            center,
            center_norm_sq: norm_sq,
            gap,
            s: gap.sqrt(),
        })
    }

    pub fn center(&self) -> &[C64] {
        &self.center
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `phi_a(z)` on raw coordinates (valid on the closed ball).
    pub fn apply_raw(&self, z: &[C64]) -> Vec<C64> {
        let denom = C64::new(1.0, 0.0) - herm(z, &self.center);
        if self.center_norm_sq == 0.0 {
            return z.iter().map(|c| -c / denom).collect();
        }
        let proj = herm(z, &self.center) / self.center_norm_sq;
        self.center
            .iter()
            .zip(z)
            .map(|(a, zj)| {
                let p = proj * a;
                let q = zj - p;
                (a - p - q * self.s) / denom
            })
            .collect()
    }

    /// `phi_a` on an interior point, propagating the boundary gap through
    /// `gap(phi_a z) = gap_a gap_z / |1 - <z, a>|^2`. The gap is floored at
    /// the smallest positive double: deep orbits shrink it geometrically and
    /// would otherwise underflow to an (invalid) zero.
    pub fn apply(&self, z: &BallPoint) -> BallPoint {
        let denom_sq = (C64::new(1.0, 0.0) - herm(z.coords(), &self.center)).norm_sqr();
        let gap = (self.gap * z.boundary_gap() / denom_sq).max(f64::MIN_POSITIVE);
        BallPoint::with_gap(self.apply_raw(z.coords()), gap)
    }

    /// Complex Jacobian of `phi_a` at `z`:
    /// `J = [-(P + sQ) + phi_a(z) conj(a)^T] / (1 - <z, a>)`.
    pub fn jacobian(&self, z: &[C64]) -> DMatrix<C64> {
        let q = self.dim();
        let denom = C64::new(1.0, 0.0) - herm(z, &self.center);
        let image = self.apply_raw(z);
        let mut m = DMatrix::<C64>::zeros(q, q);
        for j in 0..q {
            for k in 0..q {
                let p_jk = if self.center_norm_sq == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    self.center[j] * self.center[k].conj() / self.center_norm_sq
                };
                let q_jk = if j == k { C64::new(1.0, 0.0) - p_jk } else { -p_jk };
                m[(j, k)] = (-(p_jk + q_jk * self.s) + image[j] * self.center[k].conj()) / denom;
            }
        }
        m
    }

    /// Jacobian at the origin in closed form: `-(gap * P + s * Q)`.
    pub fn jacobian_at_origin(&self) -> DMatrix<C64> {
        self.jacobian(&vec![C64::new(0.0, 0.0); self.dim()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn swaps_center_and_origin() {
        let phi = BallInvolution::new(vec![c(0.3, 0.2), c(-0.1, 0.4)]).unwrap();
        let at_zero = phi.apply(&BallPoint::origin(2));
        for (x, a) in at_zero.coords().iter().zip(phi.center()) {
            assert!((x - a).norm() < 1e-15);
        }
        let at_center =
            phi.apply(&BallPoint::new(vec![c(0.3, 0.2), c(-0.1, 0.4)]).unwrap());
        assert!(at_center.coords().iter().all(|x| x.norm() < 1e-14));
    }

    #[test]
    fn is_an_involution() {
        let phi = BallInvolution::new(vec![c(0.5, -0.2), c(0.1, 0.3)]).unwrap();
        let z = BallPoint::new(vec![c(-0.2, 0.4), c(0.3, 0.1)]).unwrap();
        let back = phi.apply(&phi.apply(&z));
        assert!(z.euclidean_distance(&back) < 1e-14);
        assert!((z.boundary_gap() - back.boundary_gap()).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let phi = BallInvolution::new(vec![c(0.4, 0.1), c(-0.2, 0.25)]).unwrap();
        let z = vec![c(0.1, -0.3), c(0.2, 0.2)];
        let j = phi.jacobian(&z);
        let h = 1e-7;
        for k in 0..2 {
            let mut zp = z.clone();
            zp[k] += c(h, 0.0);
            let fp = phi.apply_raw(&zp);
            let f0 = phi.apply_raw(&z);
            for row in 0..2 {
                let fd = (fp[row] - f0[row]) / h;
                assert!(
                    (fd - j[(row, k)]).norm() < 1e-6,
                    "row {row} col {k}: {fd} vs {}",
                    j[(row, k)]
                );
            }
        }
    }
}
