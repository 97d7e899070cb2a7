//! The Siegel upper half-space `H^q = {(z, w) : Im z > |w|^2}` with a
//! power-of-two scaled representation, and the Kobayashi distance computed
//! natively in these coordinates.

use super::ball::arctanh_from_complement;
use super::cayley::cayley_inverse;
use super::form::HermitianForm;
use super::{C64, GeometryError, MetricConvention};
use nalgebra::DMatrix;

/// Point of `H^q` stored as `(2^e z, 2^{e/2} w)`.
///
/// The split scaling keeps the membership defect `Im z - |w|^2` invariant in
/// scaled coordinates: the represented defect is `2^e (Im z - |w|^2)`, so
/// membership and distance formulas never need to materialize `2^e z`.
/// Normalization keeps `e` even, so rescaling multiplies coordinates by
/// exact powers of two.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    z: C64,
    w: Vec<C64>,
    scale: i32,
}

impl SiegelPoint {
    /// Point from unscaled coordinates.
    pub fn new(z: C64, w: Vec<C64>) -> Result<Self, GeometryError> {
        Self::from_scaled(z, w, 0)
    }

    /// Point represented as `(2^e z, 2^{e/2} w)`.
    pub fn from_scaled(z: C64, w: Vec<C64>, scale: i32) -> Result<Self, GeometryError> {
        let p = Self { z, w, scale };
        let defect = p.scaled_defect();
        if !(defect > 0.0) || !defect.is_finite() {
            return Err(GeometryError::NotInSiegel { defect });
        }
        Ok(p.normalized())
    }

    /// The base point `(i, 0)` of `H^q`.
    pub fn base(q: usize) -> Self {
        Self {
            z: C64::new(0.0, 1.0),
            w: vec![C64::new(0.0, 0.0); q - 1],
            scale: 0,
        }
    }

    /// Complex dimension `q` (one `z` slot plus `q - 1` `w` slots).
    pub fn dim(&self) -> usize {
        self.w.len() + 1
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    /// Scaled coordinates `(z, w)`; the represented point is
    /// `(2^e z, 2^{e/2} w)`.
    pub fn scaled_parts(&self) -> (C64, &[C64]) {
        (self.z, &self.w)
    }

    /// Membership defect in scaled coordinates: `Im z - |w|^2`.
    /// The represented defect is `2^e` times this.
    pub fn scaled_defect(&self) -> f64 {
        self.z.im - self.w.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Materialized coordinates `(2^e z, 2^{e/2} w)`. Exact (power-of-two
    /// scaling) as long as no overflow occurs; callers working with orbits
    /// beyond scale exponent ~900 should stay in scaled form.
    pub fn materialize(&self) -> (C64, Vec<C64>) {
        let f = pow2(self.scale);
        let g = pow2(self.scale / 2);
        (self.z * f, self.w.iter().map(|c| c * g).collect())
    }

    /// Renormalizes so the scaled coordinates have magnitude O(1) and the
    /// exponent stays even.
    pub(crate) fn normalized(mut self) -> Self {
        let mag = self
            .z
            .norm()
            .max(self.w.iter().map(|c| c.norm_sqr()).sum::<f64>());
        if mag <= 0.0 || !mag.is_finite() {
            return self;
        }
        // Shift by even amounts until the magnitude lands in [0.25, 4).
        let mut shift = 0i32;
        let mut m = mag;
        while m >= 4.0 {
            m /= 4.0;
            shift += 2;
        }
        while m < 0.25 {
            m *= 4.0;
            shift -= 2;
        }
        if shift != 0 {
            let f = pow2(shift);
            let g = pow2(shift / 2);
            self.z /= f;
            for c in &mut self.w {
                *c /= g;
            }
            self.scale += shift;
        }
        self
    }

    /// Coordinates and membership defect re-expressed at the given scale
    /// exponent (exact power-of-two shifts; `target` must share parity with
    /// the stored even exponent).
    fn at_scale(&self, target: i32) -> (C64, Vec<C64>, f64) {
        let shift = self.scale - target;
        if shift == 0 {
            return (self.z, self.w.clone(), self.scaled_defect());
        }
        let f = pow2(shift);
        let g = pow2(shift / 2);
        (
            self.z * f,
            self.w.iter().map(|c| c * g).collect(),
            self.scaled_defect() * f,
        )
    }

    /// Boundary gap `1 - |p|^2` of the Cayley preimage in the ball, via
    /// `4 * 2^e (Im z - |w|^2) / |2^e z + i|^2` arranged to avoid overflow.
    pub fn ball_gap(&self) -> f64 {
        let d = self.scaled_defect();
        if self.scale >= 0 {
            // |Z + i|^2 = 2^{2e} |z + i 2^{-e}|^2
            let shifted = self.z + C64::new(0.0, pow2(-self.scale));
            4.0 * d * pow2(-self.scale) / shifted.norm_sqr()
        } else {
            let denom = self.z * pow2(self.scale) + C64::new(0.0, 1.0);
            4.0 * d * pow2(self.scale) / denom.norm_sqr()
        }
    }
}

fn pow2(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// Kobayashi distance on `H^q`, equal to the ball distance of the Cayley
/// preimages but computed natively:
/// `1 - sigma^2 = d_1 d_2 / |rho|^2` with `d_j` the membership defects and
/// `rho` the polarized defect `(Z_1 - conj Z_2)/(2i) - <W_1, W_2>`, all
/// evaluated at a common power-of-two scale. Accurate for scale exponents
/// far beyond the point where ball coordinates collapse onto the boundary.
pub fn kobayashi_distance_siegel(
    a: &SiegelPoint,
    b: &SiegelPoint,
    conv: &MetricConvention,
) -> Result<f64, GeometryError> {
    if a.dim() != b.dim() {
        return Err(GeometryError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if !(a.scaled_defect() > 0.0) || !(b.scaled_defect() > 0.0) {
        return Err(GeometryError::BoundaryInput);
    }
    if (a.scale - b.scale).abs() <= 40 {
        // Rescale both to the smaller exponent (exact power-of-two shifts).
        let base = a.scale.min(b.scale);
        let (za, wa, d1) = a.at_scale(base);
        let (zb, wb, d2) = b.at_scale(base);
        let inner: C64 = wa.iter().zip(&wb).map(|(x, y)| x * y.conj()).sum();
        let rho_re = 0.5 * (za.im + zb.im) - inner.re;
        let rho_im = -0.5 * (za.re - zb.re) - inner.im;
        let rho_sq = rho_re * rho_re + rho_im * rho_im;
        let one_minus_sigma_sq = (d1 * d2 / rho_sq).min(1.0);
        if one_minus_sigma_sq > 0.5 {
            // Expanded |rho|^2 - d1 d2: every term is second-order small in
            // the separation, so sigma keeps full relative accuracy down to
            // the diagonal.
            let dx = za.re - zb.re;
            let dy = za.im - zb.im;
            let delta: Vec<C64> = wb.iter().zip(&wa).map(|(y, x)| y - x).collect();
            let g_im: f64 = wa.iter().zip(&delta).map(|(x, d)| (x * d.conj()).im).sum();
            let mixed: f64 = delta
                .iter()
                .zip(wa.iter().zip(&wb))
                .map(|(d, (w1, w2))| (d * (w2 * za.im - w1 * zb.im).conj()).re)
                .sum();
            let mut gram = 0.0;
            for j in 0..wa.len() {
                for k in j + 1..wa.len() {
                    gram += (wa[j] * wb[k] - wa[k] * wb[j]).norm_sqr();
                }
            }
            let numerator = 0.25 * dx * dx + 0.25 * dy * dy + dx * g_im + mixed - gram;
            let sigma_sq = (numerator / rho_sq).clamp(0.0, 0.5);
            return Ok(conv.scale() * sigma_sq.sqrt().atanh());
        }
        return Ok(conv.scale() * arctanh_from_complement(one_minus_sigma_sq));
    }
    // Scales too far apart to share an exponent: split the scaling
    // symmetrically; such point pairs are never near the diagonal.
    let delta = (a.scale - b.scale) / 2;
    let za = a.z * pow2(delta);
    let zb = b.z.conj() * pow2(-delta);
    let inner: C64 = a.w.iter().zip(&b.w).map(|(x, y)| x * y.conj()).sum();
    let rho = (za - zb) / C64::new(0.0, 2.0) - inner;
    let one_minus_sigma_sq = (a.scaled_defect() * b.scaled_defect() / rho.norm_sqr()).min(1.0);
    Ok(conv.scale() * arctanh_from_complement(one_minus_sigma_sq))
}

/// Kobayashi metric form of `H^q` at `s` in materialized coordinates,
/// obtained by pulling the ball form back through the inverse Cayley
/// transform.
pub fn siegel_metric_form(
    s: &SiegelPoint,
    conv: &MetricConvention,
) -> Result<HermitianForm, GeometryError> {
    let p = cayley_inverse(s);
    let h = super::ball::kobayashi_metric_form_ball(&p, conv)?;
    let j = cayley_inverse_jacobian(s);
    Ok(HermitianForm::from_sandwich(j.adjoint() * h.matrix() * &j))
}

/// Jacobian of the inverse Cayley transform at `s`, in materialized
/// coordinates of both sides.
pub(crate) fn cayley_inverse_jacobian(s: &SiegelPoint) -> DMatrix<C64> {
    let q = s.dim();
    let (z, w) = s.materialize();
    let denom = z + C64::new(0.0, 1.0);
    let mut j = DMatrix::<C64>::zeros(q, q);
    // d/dZ of (Z - i)/(Z + i) = 2i/(Z+i)^2
    j[(0, 0)] = C64::new(0.0, 2.0) / (denom * denom);
    for a in 0..q - 1 {
        // d/dZ of 2 W_a/(Z+i) = -2 W_a/(Z+i)^2
        j[(a + 1, 0)] = -C64::new(2.0, 0.0) * w[a] / (denom * denom);
        // d/dW_a of the same row = 2/(Z+i)
        j[(a + 1, a + 1)] = C64::new(2.0, 0.0) / denom;
    }
    j
}
