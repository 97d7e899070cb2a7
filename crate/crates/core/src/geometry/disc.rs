//! Mobius transformations of the complex plane restricted to disc work:
//! fitting through point pairs, fixed points, and the automorphism test.

use super::C64;

/// `z -> (a z + b)/(c z + d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MobiusMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

impl MobiusMap {
    pub fn identity() -> Self {
        Self {
            a: C64::new(1.0, 0.0),
            b: C64::new(0.0, 0.0),
            c: C64::new(0.0, 0.0),
            d: C64::new(1.0, 0.0),
        }
    }

    /// Normalizes to determinant 1 (up to a global sign).
    pub fn normalized(&self) -> Self {
        let det = self.a * self.d - self.b * self.c;
        let k = det.sqrt();
        Self {
            a: self.a / k,
            b: self.b / k,
            c: self.c / k,
            d: self.d / k,
        }
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    pub fn derivative(&self, z: C64) -> C64 {
        let det = self.a * self.d - self.b * self.c;
        let denom = self.c * z + self.d;
        det / (denom * denom)
    }

    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        MobiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Least-squares fit of a Mobius map through input/output pairs; needs
    /// at least three pairs in general position. Returns the map and its
    /// worst residual over the pairs.
    pub fn fit(pairs: &[(C64, C64)]) -> Option<(MobiusMap, f64)> {
        if pairs.len() < 3 {
            return None;
        }
        // Each pair gives a row of the homogeneous system
        // a z + b - w c z - w d = 0 in the unknowns (a, b, c, d).
        let n = pairs.len();
        let mut m = nalgebra::DMatrix::<C64>::zeros(n.max(4), 4);
        for (i, (z, w)) in pairs.iter().enumerate() {
            m[(i, 0)] = *z;
            m[(i, 1)] = C64::new(1.0, 0.0);
            m[(i, 2)] = -w * z;
            m[(i, 3)] = -w;
        }
        let svd = m.clone().svd(false, true);
        let vt = svd.v_t?;
        let row = vt.nrows() - 1;
        let map = MobiusMap {
            a: vt[(row, 0)].conj(),
            b: vt[(row, 1)].conj(),
            c: vt[(row, 2)].conj(),
            d: vt[(row, 3)].conj(),
        };
        let scale = [map.a, map.b, map.c, map.d]
            .iter()
            .map(|x| x.norm())
            .fold(0.0_f64, f64::max);
        if scale < 1e-14 {
            return None;
        }
        let residual = pairs
            .iter()
            .map(|(z, w)| (map.apply(*z) - w).norm())
            .fold(0.0_f64, f64::max);
        Some((map, residual))
    }

    /// True when the map carries the unit disc onto itself. Up to a complex
    /// scalar an automorphism matrix has the form [[u, v], [conj v, conj u]]
    /// with |u| > |v|, which is equivalent to the scalar-free conditions
    /// |a| = |d|, |b| = |c|, a conj(c) = b conj(d) and |a| > |b|.
    pub fn is_disc_automorphism(&self, tol: f64) -> bool {
        let n = self.normalized();
        let scale = n.a.norm().max(n.b.norm()).max(1e-300);
        (n.a.norm() - n.d.norm()).abs() < tol * scale
            && (n.b.norm() - n.c.norm()).abs() < tol * scale
            && n.a.norm() > n.b.norm()
            && (n.a * n.c.conj() - n.b * n.d.conj()).norm() < tol * scale * scale
    }

    /// Fixed points, as roots of `c z^2 + (d - a) z - b = 0`.
    pub fn fixed_points(&self) -> Vec<C64> {
        if self.c.norm() < 1e-14 {
            // Affine map a/d z + b/d.
            if (self.a - self.d).norm() < 1e-14 {
                return vec![];
            }
            return vec![self.b / (self.d - self.a)];
        }
        let disc = ((self.d - self.a) * (self.d - self.a)
            + C64::new(4.0, 0.0) * self.c * self.b)
            .sqrt();
        let z1 = (self.a - self.d + disc) / (C64::new(2.0, 0.0) * self.c);
        let z2 = (self.a - self.d - disc) / (C64::new(2.0, 0.0) * self.c);
        vec![z1, z2]
    }

    /// For a disc automorphism, classifies hyperbolicity and returns the
    /// dilation `|m'(p)| < 1` at the attracting boundary fixed point.
    pub fn disc_dilation(&self) -> Option<(C64, f64)> {
        let fixed = self.fixed_points();
        let mut best: Option<(C64, f64)> = None;
        for p in fixed {
            if (p.norm() - 1.0).abs() > 1e-6 {
                continue;
            }
            let d = self.derivative(p).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((p, d));
            }
        }
        best
    }
}
