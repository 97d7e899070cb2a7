//! The complex geodesic of the ball through two distinct boundary points,
//! parametrized by the unit disc with radial limits at -1 and 1.

use super::ball::{herm, BallPoint, BoundaryPoint};
use super::disc::MobiusMap;
use super::{C64, GeometryError};

/// Affine one-dimensional slice of `B^q` through boundary points `p`, `p'`,
/// with a complex-geodesic parametrization `phi: D -> B^q` satisfying
/// `phi(zeta) -> p` as `zeta -> 1` and `phi(zeta) -> p'` as `zeta -> -1`.
#[derive(Debug, Clone)]
pub struct GeodesicSlice {
    p: Vec<C64>,
    direction: Vec<C64>,
    dir_norm_sq: f64,
    s0: C64,
    r0: f64,
    chart: MobiusMap,
    chart_inv: MobiusMap,
}

impl GeodesicSlice {
    pub fn through(p: &BoundaryPoint, p_prime: &BoundaryPoint) -> Result<Self, GeometryError> {
        if p.dim() != p_prime.dim() {
            return Err(GeometryError::DimensionMismatch {
                left: p.dim(),
                right: p_prime.dim(),
            });
        }
        if p.chordal(p_prime) < 1e-9 {
            return Err(GeometryError::DegenerateSlice);
        }
        // The line {p + s u}, u = p' - p, meets the ball in a disc in the
        // s-plane: |s + conj(w)| < |w| with w = <u, p>/|u|^2.
        let direction: Vec<C64> = p_prime
            .coords()
            .iter()
            .zip(p.coords())
            .map(|(b, a)| b - a)
            .collect();
        let dir_norm_sq: f64 = direction.iter().map(|c| c.norm_sqr()).sum();
        let w = herm(&direction, p.coords()) / dir_norm_sq;
        let s0 = -w.conj();
        let r0 = w.norm();
        // Disc automorphism sending 1 and -1 to the preimages of s = 0 and
        // s = 1 on the unit circle.
        let a_pt = (C64::new(0.0, 0.0) - s0) / r0;
        let b_pt = (C64::new(1.0, 0.0) - s0) / r0;
        let chart = disc_map_fixing_pair(a_pt, b_pt)?;
        let chart_inv = chart.inverse();
        Ok(Self {
            p: p.coords().to_vec(),
            direction,
            dir_norm_sq,
            s0,
            r0,
            chart,
            chart_inv,
        })
    }

    /// Point of the slice at disc parameter `zeta`.
    pub fn eval(&self, zeta: C64) -> Result<BallPoint, GeometryError> {
        let s = self.s0 + self.chart.apply(zeta) * self.r0;
        BallPoint::new(
            self.p
                .iter()
                .zip(&self.direction)
                .map(|(a, u)| a + u * s)
                .collect(),
        )
    }

    /// Projects a point of `C^q` onto the slice's line and returns the disc
    /// parameter together with the off-slice residual.
    pub fn invert(&self, x: &[C64]) -> (C64, f64) {
        let diff: Vec<C64> = x.iter().zip(&self.p).map(|(a, b)| a - b).collect();
        let s = herm(&diff, &self.direction) / self.dir_norm_sq;
        let residual: f64 = diff
            .iter()
            .zip(&self.direction)
            .map(|(d, u)| (d - u * s).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let zeta = self.chart_inv.apply((s - self.s0) / self.r0);
        (zeta, residual)
    }

    /// Hyperbolic midpoint of the slice, image of the disc center.
    pub fn midpoint(&self) -> Result<BallPoint, GeometryError> {
        self.eval(C64::new(0.0, 0.0))
    }
}

/// Disc automorphism with m(1) = a and m(-1) = b for unit-modulus a != b.
/// With principal square roots `da`, `db` of `a` and `b`, the matrix
/// [(u - v)/2, (u + v)/2; conj((u+v)/2), conj((u-v)/2)] with u = t da,
/// v = s i db and t s Im(da conj(db)) = -1 does the job.
fn disc_map_fixing_pair(a: C64, b: C64) -> Result<MobiusMap, GeometryError> {
    let da = a.sqrt();
    let db = b.sqrt();
    let im = (da * db.conj()).im;
    if im.abs() < 1e-12 {
        // a = b up to rounding; excluded by the distinctness check.
        return Err(GeometryError::DegenerateSlice);
    }
    let t = 1.0;
    let s = -1.0 / (t * im);
    let u = da * t;
    let v = db * C64::new(0.0, s);
    let alpha = (u - v) / 2.0;
    let beta = (u + v) / 2.0;
    Ok(MobiusMap {
        a: alpha,
        b: beta,
        c: beta.conj(),
        d: alpha.conj(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{kobayashi_distance_ball, MetricConvention};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn axis_slice_is_the_diameter() {
        let p = BoundaryPoint::e1(2);
        let q = p.antipode();
        let slice = GeodesicSlice::through(&p, &q).unwrap();
        for zeta in [c(0.0, 0.0), c(0.5, 0.2), c(-0.3, 0.6)] {
            let x = slice.eval(zeta).unwrap();
            assert!((x.coords()[0] - zeta).norm() < 1e-12);
            assert!(x.coords()[1].norm() < 1e-12);
        }
        let (zeta, res) = slice.invert(&[c(0.25, -0.1), c(0.0, 0.0)]);
        assert!((zeta - c(0.25, -0.1)).norm() < 1e-12);
        assert!(res < 1e-14);
    }

    #[test]
    fn radial_limits_hit_the_endpoints() {
        let p = BoundaryPoint::new(vec![c(0.6, 0.3), c(0.64, -0.36)]).unwrap();
        let q = BoundaryPoint::new(vec![c(-0.3, 0.5), c(0.2, 0.7)]).unwrap();
        let slice = GeodesicSlice::through(&p, &q).unwrap();
        let near_p = slice.eval(c(0.999_999, 0.0)).unwrap();
        let near_q = slice.eval(c(-0.999_999, 0.0)).unwrap();
        let dp: f64 = near_p
            .coords()
            .iter()
            .zip(p.coords())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let dq: f64 = near_q
            .coords()
            .iter()
            .zip(q.coords())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(dp < 1e-5, "distance to p {dp}");
        assert!(dq < 1e-5, "distance to q {dq}");
    }

    #[test]
    fn parametrization_is_a_complex_geodesic() {
        // k_D(zeta, xi) = k_B(phi(zeta), phi(xi)).
        let conv = MetricConvention::default();
        let p = BoundaryPoint::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let q = BoundaryPoint::new(vec![c(0.8, 0.0), c(0.6, 0.0)]).unwrap();
        let slice = GeodesicSlice::through(&p, &q).unwrap();
        let pairs = [
            (c(0.0, 0.0), c(0.5, 0.0)),
            (c(0.2, 0.3), c(-0.4, 0.1)),
            (c(-0.7, 0.1), c(0.3, -0.5)),
        ];
        for (zeta, xi) in pairs {
            let in_disc = kobayashi_distance_ball(
                &BallPoint::new(vec![zeta]).unwrap(),
                &BallPoint::new(vec![xi]).unwrap(),
                &conv,
            )
            .unwrap();
            let in_ball = kobayashi_distance_ball(
                &slice.eval(zeta).unwrap(),
                &slice.eval(xi).unwrap(),
                &conv,
            )
            .unwrap();
            assert!(
                (in_disc - in_ball).abs() < 1e-10,
                "disc {in_disc} vs ball {in_ball}"
            );
        }
    }
}
