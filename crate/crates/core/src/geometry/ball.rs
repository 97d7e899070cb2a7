//! Points of the unit ball, its boundary sphere, and the closed-form
//! Kobayashi distance, metric form and Koranyi regions.

use super::form::HermitianForm;
use super::{C64, GeometryError, MetricConvention};
use nalgebra::DMatrix;

/// Interior point of the unit ball `B^q`.
///
/// Carries a cached boundary gap `1 - |z|^2`. The cache matters: for points
/// produced by automorphisms or by the inverse Cayley transform the gap is
/// propagated by cancellation-free formulas and stays accurate long after
/// `1 - |z|^2` computed from the coordinates has lost every digit.
#[derive(Debug, Clone, PartialEq)]
pub struct BallPoint {
    coords: Vec<C64>,
    gap: f64,
}

impl BallPoint {
    /// Builds a point from coordinates, rejecting `|z| >= 1`.
    pub fn new(coords: Vec<C64>) -> Result<Self, GeometryError> {
        let norm_sq: f64 = coords.iter().map(|c| c.norm_sqr()).sum();
        let gap = 1.0 - norm_sq;
        if !(gap > 0.0) || !norm_sq.is_finite() {
            return Err(GeometryError::NotInBall { norm_sq });
        }
        Ok(Self { coords, gap })
    }

    /// Trusted constructor used when the gap is known more accurately than
    /// `1 - |z|^2` recomputed from the coordinates.
    pub(crate) fn with_gap(coords: Vec<C64>, gap: f64) -> Self {
        debug_assert!(gap > 0.0);
        Self { coords, gap }
    }

    pub fn origin(q: usize) -> Self {
        Self {
            coords: vec![C64::new(0.0, 0.0); q],
            gap: 1.0,
        }
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The quantity `1 - |z|^2 > 0`.
    pub fn boundary_gap(&self) -> f64 {
        self.gap
    }

    pub fn norm(&self) -> f64 {
        (1.0 - self.gap).max(0.0).sqrt()
    }

    /// Euclidean distance between coordinate vectors.
    pub fn euclidean_distance(&self, other: &BallPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Radial projection to the unit sphere.
    pub fn to_boundary(&self) -> Result<BoundaryPoint, GeometryError> {
        BoundaryPoint::new(self.coords.clone())
    }
}

/// Point of the unit sphere, stored normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    coords: Vec<C64>,
}

impl BoundaryPoint {
    /// Normalizes the input to unit Euclidean norm.
    pub fn new(coords: Vec<C64>) -> Result<Self, GeometryError> {
        let norm: f64 = coords.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 || !norm.is_finite() {
            return Err(GeometryError::ZeroVector);
        }
        let coords = coords.into_iter().map(|c| c / norm).collect();
        Ok(Self { coords })
    }

    /// First coordinate vector `e_1` of the sphere in `C^q`.
    pub fn e1(q: usize) -> Self {
        let mut coords = vec![C64::new(0.0, 0.0); q];
        coords[0] = C64::new(1.0, 0.0);
        Self { coords }
    }

    pub fn antipode(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn coords(&self) -> &[C64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Chordal (Euclidean) distance on the sphere.
    pub fn chordal(&self, other: &BoundaryPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Hermitian product `<a, b> = sum a_j conj(b_j)`.
pub(crate) fn herm(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Kobayashi distance on the ball under the given convention:
/// `scale * arctanh` of the Mobius-invariant pseudo-distance.
pub fn kobayashi_distance_ball(
    a: &BallPoint,
    b: &BallPoint,
    conv: &MetricConvention,
) -> Result<f64, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.coords == b.coords {
        return Ok(0.0);
    }
    // 1 - sigma^2 = gap_a gap_b / |1 - <a,b>|^2, k = scale * arctanh sigma.
    let inner = herm(a.coords(), b.coords());
    let denom = (C64::new(1.0, 0.0) - inner).norm_sqr();
    let one_minus_sigma_sq = (a.boundary_gap() * b.boundary_gap() / denom).min(1.0);
    if one_minus_sigma_sq > 0.5 {
        // Near the diagonal 1 - A cancels catastrophically; switch to the
        // expanded numerator |1 - <a,b>|^2 - gap_a gap_b =
        // |a - b|^2 - sum_{j<k} |a_j b_k - a_k b_j|^2 (complex Lagrange),
        // whose terms are all second-order small.
        let sigma_sq = (sigma_sq_numerator(a.coords(), b.coords()) / denom).clamp(0.0, 0.5);
        return Ok(conv.scale() * sigma_sq.sqrt().atanh());
    }
    Ok(conv.scale() * arctanh_from_complement(one_minus_sigma_sq))
}

/// `|1 - <a,b>|^2 - (1-|a|^2)(1-|b|^2)` via the cancellation-free expansion.
pub(crate) fn sigma_sq_numerator(a: &[C64], b: &[C64]) -> f64 {
    let diff_sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let mut gram = 0.0;
    for j in 0..a.len() {
        for k in j + 1..a.len() {
            gram += (a[j] * b[k] - a[k] * b[j]).norm_sqr();
        }
    }
    diff_sq - gram
}

/// `arctanh(sqrt(1 - t))` evaluated stably from `t = 1 - sigma^2`.
pub(crate) fn arctanh_from_complement(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let sigma = (1.0 - t).max(0.0).sqrt();
    (1.0 + sigma).ln() - 0.5 * t.ln()
}

/// Kobayashi metric of the ball as a Hermitian form: `kappa(a; v)^2 = v* H v`
/// with `H = scale^2 [(1-|a|^2) I + a a*] / (1-|a|^2)^2`.
pub fn kobayashi_metric_form_ball(
    a: &BallPoint,
    conv: &MetricConvention,
) -> Result<HermitianForm, GeometryError> {
    let q = a.dim();
    let gap = a.boundary_gap();
    let s2 = conv.scale() * conv.scale();
    let mut m = DMatrix::<C64>::zeros(q, q);
    for j in 0..q {
        for k in 0..q {
            let mut v = a.coords()[j] * a.coords()[k].conj();
            if j == k {
                v += C64::new(gap, 0.0);
            }
            m[(j, k)] = v * (s2 / (gap * gap));
        }
    }
    HermitianForm::new(m)
}

/// Koranyi region membership: `|1 - <x, v>| < R (1 - |x|)`.
pub fn in_koranyi_region(
    x: &BallPoint,
    vertex: &BoundaryPoint,
    amplitude: f64,
) -> Result<bool, GeometryError> {
    if !(amplitude > 1.0) {
        return Err(GeometryError::BadAmplitude(amplitude));
    }
    if x.dim() != vertex.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: x.dim(),
            right: vertex.dim(),
        });
    }
    let lhs = (C64::new(1.0, 0.0) - herm(x.coords(), vertex.coords())).norm();
    // 1 - |x| computed through the cached gap.
    let one_minus_norm = x.boundary_gap() / (1.0 + x.norm());
    Ok(lhs < amplitude * one_minus_norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn conv2() -> MetricConvention {
        MetricConvention::default()
    }

    #[test]
    fn coincident_points_have_zero_distance() {
        let a = BallPoint::origin(2);
        assert_eq!(kobayashi_distance_ball(&a, &a, &conv2()).unwrap(), 0.0);
    }

    #[test]
    fn disc_distance_matches_mobius_oracle() {
        // m(0, r) = r, so k(0, 0.5) = 2 arctanh(1/2) = log 3.
        let a = BallPoint::origin(1);
        let b = BallPoint::new(vec![c(0.5, 0.0)]).unwrap();
        let k = kobayashi_distance_ball(&a, &b, &conv2()).unwrap();
        assert!((k - 3.0f64.ln()).abs() < 1e-14, "k = {k}");
    }

    #[test]
    fn distance_is_symmetric() {
        let a = BallPoint::new(vec![c(0.3, -0.1), c(0.2, 0.4)]).unwrap();
        let b = BallPoint::new(vec![c(-0.5, 0.2), c(0.1, 0.0)]).unwrap();
        let ab = kobayashi_distance_ball(&a, &b, &conv2()).unwrap();
        let ba = kobayashi_distance_ball(&b, &a, &conv2()).unwrap();
        assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn rejects_points_outside_ball() {
        assert!(BallPoint::new(vec![c(1.0, 0.0)]).is_err());
        assert!(BallPoint::new(vec![c(0.9, 0.9)]).is_err());
    }

    #[test]
    fn metric_form_at_center_is_scaled_identity() {
        let a = BallPoint::origin(3);
        let h = kobayashi_metric_form_ball(&a, &conv2()).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let expected = if j == k { 4.0 } else { 0.0 };
                assert!((h.matrix()[(j, k)] - c(expected, 0.0)).norm() < 1e-14);
            }
        }
        // kappa(0; e_1) = 2 under the default convention.
        let v = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        assert!((h.evaluate(&v).sqrt() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn metric_form_agrees_with_finite_differences() {
        // |k(a, a + tv)/t - kappa(a; v)| small for small t.
        let a = BallPoint::new(vec![c(0.31, -0.12), c(-0.25, 0.4)]).unwrap();
        let v = [c(0.7, 0.3), c(-0.2, 0.5)];
        let h = kobayashi_metric_form_ball(&a, &conv2()).unwrap();
        let kappa = h.evaluate(&v).sqrt();
        let t = 1e-6;
        let shifted = BallPoint::new(
            a.coords()
                .iter()
                .zip(&v)
                .map(|(z, dv)| z + dv * t)
                .collect(),
        )
        .unwrap();
        let quot = kobayashi_distance_ball(&a, &shifted, &conv2()).unwrap() / t;
        assert!((quot - kappa).abs() < 1e-4, "quot {quot} vs kappa {kappa}");
    }

    #[test]
    fn koranyi_region_basics() {
        let q = 2;
        let v = BoundaryPoint::e1(q);
        // Radial approach is in every region.
        let x = BallPoint::new(vec![c(0.9, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(in_koranyi_region(&x, &v, 1.01).unwrap());
        // The center: |1 - 0| = 1 < 2 * 1.
        let zero = BallPoint::origin(q);
        assert!(in_koranyi_region(&zero, &v, 2.0).unwrap());
        assert!(in_koranyi_region(&zero, &v, 1.5).unwrap());
        assert!(in_koranyi_region(&zero, &v, 0.5).is_err());
    }

    #[test]
    fn tangential_sequence_leaves_koranyi_region() {
        // x_n = (1 - 1/n) e^{i/sqrt n} v: the defect |1 - <x,v>| ~ 1/sqrt n
        // dominates R (1 - |x|) ~ R/n eventually.
        let v = BoundaryPoint::e1(1);
        let amplitude = 10.0;
        let mut inside_late = false;
        for n in [4u32, 16, 64, 256, 1024, 4096] {
            let nf = f64::from(n);
            let theta = 1.0 / nf.sqrt();
            let z = C64::from_polar(1.0 - 1.0 / nf, theta);
            let x = BallPoint::new(vec![z]).unwrap();
            if n >= 1024 {
                inside_late |= in_koranyi_region(&x, &v, amplitude).unwrap();
            }
        }
        assert!(!inside_late);
    }

    #[test]
    fn boundary_point_normalizes() {
        let p = BoundaryPoint::new(vec![c(3.0, 0.0), c(0.0, 4.0)]).unwrap();
        let norm: f64 = p.coords().iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }
}
