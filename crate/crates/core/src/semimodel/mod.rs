//! Canonical Kobayashi-hyperbolic semi-models: numerical limit functionals
//! (limit pseudodistance, limit pullback metric, type estimation) and exact
//! constructions for commuting hyperbolic automorphisms and the explicit
//! polynomial example family, together with the induced base maps.

mod csm;
mod functionals;
mod gamma;
mod simdiag;

pub use csm::{csm_commuting_hyperbolic_automorphisms, csm_example_family, ExampleFamilyModels};
pub use functionals::{
    limit_pseudodistance, limit_pullback_form, type_estimate, PullbackLimit, TypeEstimate,
    TypeEstimateParams,
};
pub use gamma::{gamma_induced, univalence_check, UnivalenceReport, UnivalenceRow};
pub use simdiag::{simultaneous_diagonalize, SimultaneousDiagonalization};

use crate::dynamics::DynamicsError;
use crate::geometry::{
    cayley, cayley_jacobian, C64, Domain, DomainPoint, GeometryError, SiegelPoint,
};
use crate::maps::{BallAutomorphism, CommutingFamily, MapDescription, MapsError, SiegelPolynomial};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SemiModelError {
    #[error(transparent)]
    Maps(#[from] MapsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("family member {index} is not a hyperbolic automorphism: {reason}")]
    NotHyperbolicAutomorphism { index: usize, reason: String },
    #[error("boundary fixed points do not form a common pair: {detail}")]
    FixedPointMismatch { detail: String },
    #[error("no structured solution: {detail}")]
    NoStructuredSolution { detail: String },
    #[error("simultaneous diagonalization failed: {detail}")]
    Diagonalization { detail: String },
    #[error("operation needs an exact semi-model with a structured intertwiner")]
    NotExactModel,
    #[error("numerical failure: {detail}")]
    Numeric { detail: String },
}

/// Structured description of the intertwiner `l` of an exact semi-model.
#[derive(Debug, Clone)]
pub enum Intertwiner {
    /// Identity on the given domain (trivial model).
    Identity(Domain),
    /// `(z, u) -> (z + i u_0^2, u_1, ..., u_{d-1})` from `H^m` to `H^d`.
    QuadShear { dim: usize, base: usize },
    /// `(z, u) -> (z, u_0, ..., u_{keep-2})` from `H^m` to `H^keep`.
    Projection { dim: usize, keep: usize },
    /// `B^q -> H^q`: a ball automorphism followed by the Cayley transform
    /// and a unitary rotation of the `w`-block.
    BallConjugation {
        pre: BallAutomorphism,
        w_unitary: DMatrix<C64>,
    },
}

impl Intertwiner {
    pub fn source(&self) -> Domain {
        match self {
            Intertwiner::Identity(d) => *d,
            Intertwiner::QuadShear { dim, .. } | Intertwiner::Projection { dim, keep: _ } => {
                Domain::Siegel(*dim)
            }
            Intertwiner::BallConjugation { pre, .. } => Domain::Ball(pre.dim()),
        }
    }

    pub fn target(&self) -> Domain {
        match self {
            Intertwiner::Identity(d) => *d,
            Intertwiner::QuadShear { base, .. } => Domain::Siegel(*base),
            Intertwiner::Projection { keep, .. } => Domain::Siegel(*keep),
            Intertwiner::BallConjugation { pre, .. } => Domain::Siegel(pre.dim()),
        }
    }

    pub fn eval(&self, x: &DomainPoint) -> Result<DomainPoint, SemiModelError> {
        if x.domain() != self.source() {
            return Err(SemiModelError::Maps(MapsError::DomainMismatch));
        }
        match self {
            Intertwiner::Identity(_) => Ok(x.clone()),
            Intertwiner::QuadShear { base, .. } => {
                let s = expect_siegel(x);
                let (z, u) = s.scaled_parts();
                let zeta = z + C64::new(0.0, 1.0) * u[0] * u[0];
                let xi: Vec<C64> = u[1..*base].to_vec();
                Ok(DomainPoint::Siegel(
                    SiegelPoint::from_scaled(zeta, xi, s.scale())
                        .map_err(SemiModelError::Geometry)?,
                ))
            }
            Intertwiner::Projection { keep, .. } => {
                let s = expect_siegel(x);
                let (z, u) = s.scaled_parts();
                let kept: Vec<C64> = u[..keep - 1].to_vec();
                Ok(DomainPoint::Siegel(
                    SiegelPoint::from_scaled(z, kept, s.scale())
                        .map_err(SemiModelError::Geometry)?,
                ))
            }
            Intertwiner::BallConjugation { pre, w_unitary } => {
                let b = match x {
                    DomainPoint::Ball(b) => b,
                    DomainPoint::Siegel(_) => unreachable!(),
                };
                let moved = pre.eval(b)?;
                let s = cayley(&moved);
                let (z, w) = s.scaled_parts();
                let rotated: Vec<C64> = (0..w.len())
                    .map(|j| (0..w.len()).map(|k| w_unitary[(j, k)] * w[k]).sum())
                    .collect();
                Ok(DomainPoint::Siegel(
                    SiegelPoint::from_scaled(z, rotated, s.scale())
                        .map_err(SemiModelError::Geometry)?,
                ))
            }
        }
    }

    /// Jacobian in materialized coordinates (rectangular for submersions).
    pub fn jacobian(&self, x: &DomainPoint) -> Result<DMatrix<C64>, SemiModelError> {
        if x.domain() != self.source() {
            return Err(SemiModelError::Maps(MapsError::DomainMismatch));
        }
        match self {
            Intertwiner::Identity(d) => Ok(DMatrix::identity(d.dim(), d.dim())),
            Intertwiner::QuadShear { dim, base } => {
                let s = expect_siegel(x);
                let (_, u) = s.materialize();
                let mut j = DMatrix::zeros(*base, *dim);
                j[(0, 0)] = C64::new(1.0, 0.0);
                j[(0, 1)] = C64::new(0.0, 2.0) * u[0];
                for a in 1..*base {
                    j[(a, a + 1)] = C64::new(1.0, 0.0);
                }
                Ok(j)
            }
            Intertwiner::Projection { dim, keep } => {
                let mut j = DMatrix::zeros(*keep, *dim);
                for a in 0..*keep {
                    j[(a, a)] = C64::new(1.0, 0.0);
                }
                Ok(j)
            }
            Intertwiner::BallConjugation { pre, w_unitary } => {
                let b = match x {
                    DomainPoint::Ball(b) => b,
                    DomainPoint::Siegel(_) => unreachable!(),
                };
                let moved = pre.eval(b)?;
                let q = pre.dim();
                let mut rot = DMatrix::<C64>::zeros(q, q);
                rot[(0, 0)] = C64::new(1.0, 0.0);
                for j in 0..q - 1 {
                    for k in 0..q - 1 {
                        rot[(j + 1, k + 1)] = w_unitary[(j, k)];
                    }
                }
                Ok(rot * cayley_jacobian(&moved) * pre.jacobian(b.coords()))
            }
        }
    }
}

fn expect_siegel(x: &DomainPoint) -> &SiegelPoint {
    match x {
        DomainPoint::Siegel(s) => s,
        DomainPoint::Ball(_) => unreachable!("domain checked by caller"),
    }
}

/// Normal forms of the base automorphisms.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalFormAutomorphism {
    /// `(z, w) -> (z/lambda, e^{i t_a} w_a / sqrt(lambda))` when `expanding`
    /// (Denjoy-Wolff point at infinity), and the reciprocal contraction
    /// `(lambda z, e^{i t_a} sqrt(lambda) w_a)` otherwise.
    SiegelHyperbolic {
        lambda: f64,
        phases: Vec<f64>,
        expanding: bool,
    },
    /// `(z, w) -> (z + i r^2 - 2 r w_1, w_1 - i r, w_2, ..., w_{d-1})`.
    SiegelParabolicTranslation { r: f64 },
    /// Linear diagonal automorphism `(z, w) -> (alpha z, D w)`.
    ExplicitLinear { alpha: f64, diag: Vec<C64> },
}

impl NormalFormAutomorphism {
    pub fn identity(base: usize) -> Self {
        NormalFormAutomorphism::ExplicitLinear {
            alpha: 1.0,
            diag: vec![C64::new(1.0, 0.0); base.saturating_sub(1)],
        }
    }

    /// Realization as a triangular polynomial self-map of `H^base`.
    pub fn to_map(&self, base: usize) -> Result<MapDescription, SemiModelError> {
        let n = base - 1;
        let poly = match self {
            NormalFormAutomorphism::SiegelHyperbolic {
                lambda,
                phases,
                expanding,
            } => {
                let (alpha, scale_w) = if *expanding {
                    (1.0 / lambda, 1.0 / lambda.sqrt())
                } else {
                    (*lambda, lambda.sqrt())
                };
                let mut matrix = DMatrix::<C64>::zeros(n, n);
                for (a, t) in phases.iter().enumerate() {
                    matrix[(a, a)] = C64::from_polar(scale_w, *t);
                }
                SiegelPolynomial::new(
                    base,
                    alpha,
                    DVector::zeros(n),
                    DMatrix::zeros(n, n),
                    C64::new(0.0, 0.0),
                    matrix,
                    DVector::zeros(n),
                )?
            }
            NormalFormAutomorphism::SiegelParabolicTranslation { r } => {
                SiegelPolynomial::example_parabolic(base, base, *r)?
            }
            NormalFormAutomorphism::ExplicitLinear { alpha, diag } => {
                let mut matrix = DMatrix::<C64>::zeros(n, n);
                for (a, d) in diag.iter().enumerate() {
                    matrix[(a, a)] = *d;
                }
                SiegelPolynomial::new(
                    base,
                    *alpha,
                    DVector::zeros(n),
                    DMatrix::zeros(n, n),
                    C64::new(0.0, 0.0),
                    matrix,
                    DVector::zeros(n),
                )?
            }
        };
        Ok(MapDescription::SiegelPolynomial(poly))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    Exact,
    Numeric,
}

/// A canonical Kobayashi-hyperbolic semi-model `(H^d, l, T)`.
#[derive(Debug, Clone)]
pub struct SemiModel {
    base_dim: usize,
    intertwiner: Option<Intertwiner>,
    autos: Vec<NormalFormAutomorphism>,
    exactness: Exactness,
}

impl SemiModel {
    pub fn exact(
        base_dim: usize,
        intertwiner: Intertwiner,
        autos: Vec<NormalFormAutomorphism>,
    ) -> Self {
        Self {
            base_dim,
            intertwiner: Some(intertwiner),
            autos,
            exactness: Exactness::Exact,
        }
    }

    /// Numeric-only result: the dimension is known, the intertwiner is not.
    pub fn numeric(base_dim: usize) -> Self {
        Self {
            base_dim,
            intertwiner: None,
            autos: Vec::new(),
            exactness: Exactness::Numeric,
        }
    }

    /// Dimension `d` of the base, the type of the family.
    pub fn dimension(&self) -> usize {
        self.base_dim
    }

    pub fn base_domain(&self) -> Domain {
        Domain::Siegel(self.base_dim)
    }

    pub fn exactness(&self) -> Exactness {
        self.exactness
    }

    pub fn intertwiner(&self) -> Option<&Intertwiner> {
        self.intertwiner.as_ref()
    }

    pub fn autos(&self) -> &[NormalFormAutomorphism] {
        &self.autos
    }

    /// The base automorphisms as evaluable maps on `H^d`.
    pub fn auto_maps(&self) -> Result<Vec<MapDescription>, SemiModelError> {
        self.autos
            .iter()
            .map(|a| a.to_map(self.base_dim))
            .collect()
    }

    /// Image of a point under the intertwiner.
    pub fn map_point(&self, x: &DomainPoint) -> Result<DomainPoint, SemiModelError> {
        self.intertwiner
            .as_ref()
            .ok_or(SemiModelError::NotExactModel)?
            .eval(x)
    }

    /// `T^M` applied on the base (componentwise powers of the normal forms).
    pub fn auto_multiindex(
        &self,
        index: &crate::maps::MultiIndex,
        y: &DomainPoint,
    ) -> Result<DomainPoint, SemiModelError> {
        let autos = self.auto_maps()?;
        if index.len() != autos.len() {
            return Err(SemiModelError::Maps(MapsError::LengthMismatch {
                family: autos.len(),
                index: index.len(),
            }));
        }
        let mut point = y.clone();
        for (map, &n) in autos.iter().zip(index.entries()).rev() {
            for _ in 0..n {
                point = map.eval(&point)?;
            }
        }
        Ok(point)
    }

    /// Worst intertwining residual `k(l(f_j x), tau_j(l x))` over sampled
    /// points of a Kobayashi ball around the family's base point.
    pub fn intertwining_residual(
        &self,
        family: &CommutingFamily,
        samples: usize,
        seed: u64,
        conv: &crate::geometry::MetricConvention,
    ) -> Result<f64, SemiModelError> {
        let autos = self.auto_maps()?;
        if autos.len() != family.len() {
            return Err(SemiModelError::Maps(MapsError::LengthMismatch {
                family: family.len(),
                index: autos.len(),
            }));
        }
        let center = family.maps()[0].base_point();
        let points =
            crate::geometry::kobayashi_ball_sample(&center, 2.0, samples.max(1), seed, conv)?;
        let mut worst = 0.0_f64;
        for x in &points {
            let lx = self.map_point(x)?;
            for (f, tau) in family.maps().iter().zip(&autos) {
                let via_map = self.map_point(&f.eval(x)?)?;
                let via_auto = tau.eval(&lx)?;
                worst = worst.max(via_map.distance(&via_auto, conv)?);
            }
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::MetricConvention;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quad_shear_is_exactly_intertwining_on_dyadics() {
        // l(f(x)) == Phi(l(x)) bitwise at dyadic sample points.
        let m = 4;
        let q = 2;
        let f = MapDescription::example_hyperbolic(m, q).unwrap();
        let ell = Intertwiner::QuadShear { dim: m, base: q };
        let phi = NormalFormAutomorphism::ExplicitLinear {
            alpha: 2.0,
            diag: vec![c(2.0f64.sqrt(), 0.0); q - 1],
        }
        .to_map(q)
        .unwrap();
        let x = DomainPoint::Siegel(
            SiegelPoint::new(
                c(0.25, 4.0),
                vec![c(0.5, 0.25), c(0.125, -0.5), c(0.75, 0.0)],
            )
            .unwrap(),
        );
        let lhs = ell.eval(&f.eval(&x).unwrap()).unwrap();
        let rhs = phi.eval(&ell.eval(&x).unwrap()).unwrap();
        let (lz, lw) = expect_siegel(&lhs).materialize();
        let (rz, rw) = expect_siegel(&rhs).materialize();
        assert_eq!(lz, rz);
        assert_eq!(lw, rw);
    }

    #[test]
    fn projection_intertwines_the_parabolic_example() {
        let m = 4;
        let p = 3;
        let r = 1.0;
        let g = MapDescription::example_parabolic(m, p, r).unwrap();
        let pi = Intertwiner::Projection { dim: m, keep: p };
        let psi = NormalFormAutomorphism::SiegelParabolicTranslation { r }
            .to_map(p)
            .unwrap();
        let conv = MetricConvention::default();
        let x = DomainPoint::Siegel(
            SiegelPoint::new(c(0.3, 3.0), vec![c(0.4, 0.2), c(-0.3, 0.1), c(0.2, 0.5)]).unwrap(),
        );
        let lhs = pi.eval(&g.eval(&x).unwrap()).unwrap();
        let rhs = psi.eval(&pi.eval(&x).unwrap()).unwrap();
        assert!(lhs.distance(&rhs, &conv).unwrap() < 1e-13);
    }

    #[test]
    fn normal_form_hyperbolic_is_a_self_map() {
        let tau = NormalFormAutomorphism::SiegelHyperbolic {
            lambda: 0.4,
            phases: vec![0.3, -1.2],
            expanding: true,
        };
        let map = tau.to_map(3).unwrap();
        let x = DomainPoint::Siegel(
            SiegelPoint::new(c(0.1, 2.0), vec![c(0.3, 0.1), c(0.2, -0.4)]).unwrap(),
        );
        let y = map.eval(&x).unwrap();
        // z-coordinate expands by 1/lambda.
        if let DomainPoint::Siegel(s) = &y {
            let (z, _) = s.materialize();
            let (zx, _) = expect_siegel(&x).materialize();
            assert!((z - zx / 0.4).norm() < 1e-12);
        }
    }
}
