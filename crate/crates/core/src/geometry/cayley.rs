//! The Cayley transform `Psi(z, w) = (i(1+z)/(1-z), iw/(1-z))` between the
//! unit ball and the Siegel upper half-space, with `e_1 -> infinity`.

use super::ball::{BallPoint, BoundaryPoint};
use super::siegel::SiegelPoint;
use super::C64;

/// Image of a closed-ball point under the Cayley transform.
#[derive(Debug, Clone, PartialEq)]
pub enum CayleyImage {
    /// Interior of `H^q`.
    Interior(SiegelPoint),
    /// Finite boundary point of `H^q` (`Im z = |w|^2`), unscaled coordinates.
    Boundary { z: C64, w: Vec<C64> },
    /// The point at infinity, image of `e_1`.
    Infinity,
}

/// Cayley transform of an interior point. Always lands in the interior.
pub fn cayley(p: &BallPoint) -> SiegelPoint {
    let (z, w) = cayley_raw(p.coords());
    match SiegelPoint::from_scaled(z, w.clone(), 0) {
        Ok(s) => s,
        Err(_) => {
            // Rounding pushed the defect to zero; restore it from the exact
            // gap identity Im Z - |W|^2 = gap / |1 - z_1|^2.
            let denom = (C64::new(1.0, 0.0) - p.coords()[0]).norm_sqr();
            let defect = p.boundary_gap() / denom;
            let wsq: f64 = w.iter().map(|c| c.norm_sqr()).sum();
            SiegelPoint::from_scaled(C64::new(z.re, wsq + defect), w, 0)
                .expect("stabilized Cayley image must lie in the Siegel domain")
        }
    }
}

/// Cayley transform of a boundary point: either a finite boundary point of
/// `H^q` or the point at infinity (for `e_1`).
pub fn cayley_boundary(p: &BoundaryPoint) -> CayleyImage {
    let z1 = p.coords()[0];
    if (z1 - C64::new(1.0, 0.0)).norm() < 1e-14 {
        return CayleyImage::Infinity;
    }
    let (z, w) = cayley_raw(p.coords());
    CayleyImage::Boundary { z, w }
}

/// Complex Jacobian of the Cayley transform at an interior ball point, in
/// materialized coordinates of both sides.
pub(crate) fn cayley_jacobian(p: &BallPoint) -> nalgebra::DMatrix<C64> {
    let q = p.dim();
    let z1 = p.coords()[0];
    let denom = C64::new(1.0, 0.0) - z1;
    let mut j = nalgebra::DMatrix::<C64>::zeros(q, q);
    // dZ/dz1 = 2i/(1-z1)^2
    j[(0, 0)] = C64::new(0.0, 2.0) / (denom * denom);
    for a in 1..q {
        // dW_a/dz1 = i w_a/(1-z1)^2, dW_a/dw_a = i/(1-z1)
        j[(a, 0)] = C64::new(0.0, 1.0) * p.coords()[a] / (denom * denom);
        j[(a, a)] = C64::new(0.0, 1.0) / denom;
    }
    j
}

fn cayley_raw(coords: &[C64]) -> (C64, Vec<C64>) {
    let z1 = coords[0];
    let denom = C64::new(1.0, 0.0) - z1;
    let z = C64::new(0.0, 1.0) * (C64::new(1.0, 0.0) + z1) / denom;
    let w = coords[1..]
        .iter()
        .map(|c| C64::new(0.0, 1.0) * c / denom)
        .collect();
    (z, w)
}

/// Inverse Cayley transform `(Z, W) -> ((Z-i)/(Z+i), 2W/(Z+i))`.
///
/// The boundary gap of the result is `4 (Im Z - |W|^2)/|Z+i|^2`, computed in
/// scaled form; this is what keeps points with large scale exponents
/// meaningful in ball coordinates.
pub fn cayley_inverse(s: &SiegelPoint) -> BallPoint {
    let q = s.dim();
    let e = s.scale();
    let (zs, ws) = s.scaled_parts();
    let mut coords = Vec::with_capacity(q);
    if e >= 0 {
        // (Z - i)/(Z + i) = (z - i 2^{-e})/(z + i 2^{-e}) in scaled form.
        let t = C64::new(0.0, f64::powi(2.0, -e));
        let denom = zs + t;
        coords.push((zs - t) / denom);
        let g = f64::powi(2.0, -(e / 2));
        for c in ws {
            coords.push(C64::new(2.0, 0.0) * c * g / denom);
        }
    } else {
        let (z, w) = s.materialize();
        let denom = z + C64::new(0.0, 1.0);
        coords.push((z - C64::new(0.0, 1.0)) / denom);
        for c in w {
            coords.push(C64::new(2.0, 0.0) * c / denom);
        }
    }
    BallPoint::with_gap(coords, s.ball_gap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{kobayashi_distance_ball, kobayashi_distance_siegel, MetricConvention};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn center_maps_to_base_point() {
        let p = BallPoint::origin(3);
        let s = cayley(&p);
        let (z, w) = s.materialize();
        assert!((z - c(0.0, 1.0)).norm() < 1e-15);
        assert!(w.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn minus_e1_maps_to_origin_of_boundary() {
        let p = BoundaryPoint::new(vec![c(-1.0, 0.0), c(0.0, 0.0)]).unwrap();
        match cayley_boundary(&p) {
            CayleyImage::Boundary { z, w } => {
                assert!(z.norm() < 1e-15);
                assert!(w.iter().all(|x| x.norm() < 1e-15));
            }
            other => panic!("expected finite boundary image, got {other:?}"),
        }
    }

    #[test]
    fn e1_maps_to_infinity() {
        let p = BoundaryPoint::e1(2);
        assert_eq!(cayley_boundary(&p), CayleyImage::Infinity);
    }

    #[test]
    fn base_point_maps_back_to_center() {
        let s = SiegelPoint::base(2);
        let p = cayley_inverse(&s);
        assert!(p.coords().iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn round_trip_on_random_interior_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut max_err = 0.0_f64;
        for _ in 0..100 {
            let q = rng.gen_range(1..=4);
            let coords: Vec<C64> = (0..q)
                .map(|_| c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)))
                .collect();
            let p = BallPoint::new(coords).unwrap();
            let back = cayley_inverse(&cayley(&p));
            max_err = max_err.max(p.euclidean_distance(&back));
        }
        assert!(max_err < 1e-12, "round trip error {max_err}");
    }

    #[test]
    fn round_trip_on_random_siegel_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let conv = MetricConvention::default();
        let mut max_err = 0.0_f64;
        for _ in 0..100 {
            let q = rng.gen_range(1..=3);
            let w: Vec<C64> = (0..q - 1)
                .map(|_| c(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7)))
                .collect();
            let wsq: f64 = w.iter().map(|x| x.norm_sqr()).sum();
            let z = c(rng.gen_range(-2.0..2.0), wsq + rng.gen_range(0.1..3.0));
            let s = SiegelPoint::new(z, w).unwrap();
            let back = cayley(&cayley_inverse(&s));
            let err = kobayashi_distance_siegel(&s, &back, &conv).unwrap();
            max_err = max_err.max(err);
        }
        assert!(max_err < 1e-10, "round trip error {max_err}");
    }

    #[test]
    fn cayley_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let conv = MetricConvention::default();
        for _ in 0..100 {
            let q = rng.gen_range(1..=3);
            let sample = |rng: &mut ChaCha8Rng| {
                let coords: Vec<C64> = (0..q)
                    .map(|_| c(rng.gen_range(-0.45..0.45), rng.gen_range(-0.45..0.45)))
                    .collect();
                BallPoint::new(coords).unwrap()
            };
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let kb = kobayashi_distance_ball(&a, &b, &conv).unwrap();
            let ks = kobayashi_distance_siegel(&cayley(&a), &cayley(&b), &conv).unwrap();
            assert!((kb - ks).abs() < 1e-9, "ball {kb} vs siegel {ks}");
        }
    }

    /// Exact-rational reference for the boundary gap of the inverse Cayley
    /// image of (2^e (1+i), 0): all quantities are Gaussian rationals.
    fn exact_gap_for_one_plus_i(e: u32) -> f64 {
        let two = BigInt::from(2);
        let pow = two.pow(e);
        // Z = 2^e + i 2^e; |Z + i|^2 = (2^e)^2 + (2^e + 1)^2
        let re = BigRational::from_integer(pow.clone());
        let im_plus_one = BigRational::from_integer(pow.clone() + BigInt::from(1));
        let denom = re.clone() * re.clone() + im_plus_one.clone() * im_plus_one;
        // gap = 4 Im Z / |Z+i|^2
        let gap = BigRational::from_integer(BigInt::from(4) * pow) / denom;
        // Convert to f64 through a high bit-count quotient.
        let num = gap.numer();
        let den = gap.denom();
        let scale = BigInt::from(2).pow(200);
        let q = (num * &scale) / den;
        let qf: f64 = q.to_string().parse::<f64>().unwrap();
        qf / 2.0f64.powi(200)
    }

    #[test]
    fn deep_point_gap_matches_exact_oracle() {
        // Scale exponent 40, z = 1 + i: the naive 1 - |p|^2 loses ~12
        // digits; the stable formula keeps full relative accuracy.
        let s = SiegelPoint::from_scaled(c(1.0, 1.0), vec![], 40).unwrap();
        let p = cayley_inverse(&s);
        let exact = exact_gap_for_one_plus_i(40);
        let rel = (p.boundary_gap() - exact).abs() / exact;
        assert!(rel < 1e-12, "relative gap error {rel}");
        // And it is really tiny: about 2^-39.
        assert!(p.boundary_gap() < 3.7e-12);
    }
}
