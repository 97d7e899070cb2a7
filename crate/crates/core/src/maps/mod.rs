//! The supported self-map classes and their algebra: evaluation, exact
//! Jacobians, composition, multi-index iteration, commutation certificates
//! and self-map validation.

mod ball_auto;
mod siegel_poly;

pub use ball_auto::{unitary_sending_to_e1, BallAutomorphism};
pub(crate) use ball_auto::reunitarize;
pub use siegel_poly::SiegelPolynomial;

use crate::geometry::{
    kobayashi_ball_sample, C64, Domain, DomainPoint, GeometryError, MetricConvention, SiegelPoint,
};
use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MapsError {
    #[error("map and point live on different domains")]
    DomainMismatch,
    #[error("domain violation: {detail}")]
    DomainViolation { detail: String },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("family and multi-index lengths differ ({family} vs {index})")]
    LengthMismatch { family: usize, index: usize },
    #[error("maps do not commute (residual {residual})")]
    CommutationFailed { residual: f64 },
    #[error("not a self-map: defect {defect} at witness {witness}")]
    NotSelfMap { witness: String, defect: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Tagged union of the supported self-map classes.
///
/// `Composition(list)` composes left-to-right in mapping order: the last
/// entry is applied first, so `Composition([f, g]) = f . g`.
#[derive(Debug, Clone)]
pub enum MapDescription {
    BallAutomorphism(BallAutomorphism),
    SiegelPolynomial(SiegelPolynomial),
    ExampleHyperbolic { dim: usize, q: usize },
    ExampleParabolic { dim: usize, p: usize, r: f64 },
    Composition(Vec<MapDescription>),
    Iterate { base: Box<MapDescription>, power: u32 },
}

impl MapDescription {
    pub fn example_hyperbolic(m: usize, q: usize) -> Result<Self, MapsError> {
        // Validate the parameters through the polynomial constructor.
        SiegelPolynomial::example_hyperbolic(m, q)?;
        Ok(MapDescription::ExampleHyperbolic { dim: m, q })
    }

    pub fn example_parabolic(m: usize, p: usize, r: f64) -> Result<Self, MapsError> {
        SiegelPolynomial::example_parabolic(m, p, r)?;
        Ok(MapDescription::ExampleParabolic { dim: m, p, r })
    }

    pub fn composition(maps: Vec<MapDescription>) -> Result<Self, MapsError> {
        let first = maps
            .first()
            .ok_or_else(|| MapsError::InvalidParameters("empty composition".into()))?;
        let domain = first.domain();
        if maps.iter().any(|m| m.domain() != domain) {
            return Err(MapsError::DomainMismatch);
        }
        Ok(MapDescription::Composition(maps))
    }

    pub fn iterate(base: MapDescription, power: u32) -> Self {
        MapDescription::Iterate {
            base: Box::new(base),
            power,
        }
    }

    pub fn identity_on(domain: Domain) -> Self {
        match domain {
            Domain::Ball(q) => MapDescription::BallAutomorphism(BallAutomorphism::identity(q)),
            Domain::Siegel(m) => MapDescription::SiegelPolynomial(SiegelPolynomial::identity(m)),
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            MapDescription::BallAutomorphism(g) => Domain::Ball(g.dim()),
            MapDescription::SiegelPolynomial(p) => Domain::Siegel(p.dim()),
            MapDescription::ExampleHyperbolic { dim, .. }
            | MapDescription::ExampleParabolic { dim, .. } => Domain::Siegel(*dim),
            MapDescription::Composition(maps) => maps[0].domain(),
            MapDescription::Iterate { base, .. } => base.domain(),
        }
    }

    pub fn eval(&self, x: &DomainPoint) -> Result<DomainPoint, MapsError> {
        if self.domain() != x.domain() {
            return Err(MapsError::DomainMismatch);
        }
        match self {
            MapDescription::BallAutomorphism(g) => match x {
                DomainPoint::Ball(p) => Ok(DomainPoint::Ball(g.eval(p)?)),
                DomainPoint::Siegel(_) => Err(MapsError::DomainMismatch),
            },
            MapDescription::SiegelPolynomial(f) => match x {
                DomainPoint::Siegel(s) => Ok(DomainPoint::Siegel(f.eval(s)?)),
                DomainPoint::Ball(_) => Err(MapsError::DomainMismatch),
            },
            MapDescription::ExampleHyperbolic { dim, q } => {
                let f = SiegelPolynomial::example_hyperbolic(*dim, *q)?;
                match x {
                    DomainPoint::Siegel(s) => Ok(DomainPoint::Siegel(f.eval(s)?)),
                    DomainPoint::Ball(_) => Err(MapsError::DomainMismatch),
                }
            }
            MapDescription::ExampleParabolic { dim, p, r } => {
                let f = SiegelPolynomial::example_parabolic(*dim, *p, *r)?;
                match x {
                    DomainPoint::Siegel(s) => Ok(DomainPoint::Siegel(f.eval(s)?)),
                    DomainPoint::Ball(_) => Err(MapsError::DomainMismatch),
                }
            }
            MapDescription::Composition(maps) => {
                let mut point = x.clone();
                for m in maps.iter().rev() {
                    point = m.eval(&point)?;
                }
                Ok(point)
            }
            MapDescription::Iterate { base, power } => {
                let mut point = x.clone();
                for _ in 0..*power {
                    point = base.eval(&point)?;
                }
                Ok(point)
            }
        }
    }

    /// Complex Jacobian at `x` in materialized coordinates; exact (analytic)
    /// for the structured classes, chain rule for compositions and iterates.
    pub fn jacobian(&self, x: &DomainPoint) -> Result<DMatrix<C64>, MapsError> {
        if self.domain() != x.domain() {
            return Err(MapsError::DomainMismatch);
        }
        match self {
            MapDescription::BallAutomorphism(g) => match x {
                DomainPoint::Ball(p) => Ok(g.jacobian(p.coords())),
                DomainPoint::Siegel(_) => Err(MapsError::DomainMismatch),
            },
            MapDescription::SiegelPolynomial(f) => match x {
                DomainPoint::Siegel(s) => f.jacobian(s),
                DomainPoint::Ball(_) => Err(MapsError::DomainMismatch),
            },
            MapDescription::ExampleHyperbolic { dim, q } => match x {
                DomainPoint::Siegel(s) => SiegelPolynomial::example_hyperbolic(*dim, *q)?.jacobian(s),
                DomainPoint::Ball(_) => Err(MapsError::DomainMismatch),
            },
            MapDescription::ExampleParabolic { dim, p, r } => match x {
                DomainPoint::Siegel(s) => {
                    SiegelPolynomial::example_parabolic(*dim, *p, *r)?.jacobian(s)
                }
                DomainPoint::Ball(_) => Err(MapsError::DomainMismatch),
            },
            MapDescription::Composition(maps) => {
                let mut point = x.clone();
                let n = x.dim();
                let mut jac = DMatrix::<C64>::identity(n, n);
                for m in maps.iter().rev() {
                    jac = m.jacobian(&point)? * jac;
                    point = m.eval(&point)?;
                }
                Ok(jac)
            }
            MapDescription::Iterate { base, power } => {
                let mut point = x.clone();
                let n = x.dim();
                let mut jac = DMatrix::<C64>::identity(n, n);
                for _ in 0..*power {
                    jac = base.jacobian(&point)? * jac;
                    point = base.eval(&point)?;
                }
                Ok(jac)
            }
        }
    }

    /// Exact reduction to the triangular polynomial class, when the map (and
    /// all of its factors) lives on the Siegel side.
    pub fn lower_to_siegel_polynomial(&self) -> Option<SiegelPolynomial> {
        match self {
            MapDescription::SiegelPolynomial(p) => Some(p.clone()),
            MapDescription::ExampleHyperbolic { dim, q } => {
                SiegelPolynomial::example_hyperbolic(*dim, *q).ok()
            }
            MapDescription::ExampleParabolic { dim, p, r } => {
                SiegelPolynomial::example_parabolic(*dim, *p, *r).ok()
            }
            MapDescription::Composition(maps) => {
                let mut acc: Option<SiegelPolynomial> = None;
                for m in maps.iter().rev() {
                    let poly = m.lower_to_siegel_polynomial()?;
                    acc = Some(match acc {
                        None => poly,
                        Some(prev) => poly.compose(&prev).ok()?,
                    });
                }
                acc
            }
            MapDescription::Iterate { base, power } => {
                base.lower_to_siegel_polynomial()?.power(*power).ok()
            }
            MapDescription::BallAutomorphism(_) => None,
        }
    }

    /// Exact reduction to a single ball automorphism, when possible.
    pub fn lower_to_ball_automorphism(&self) -> Option<BallAutomorphism> {
        match self {
            MapDescription::BallAutomorphism(g) => Some(g.clone()),
            MapDescription::Composition(maps) => {
                let mut acc: Option<BallAutomorphism> = None;
                for m in maps.iter().rev() {
                    let g = m.lower_to_ball_automorphism()?;
                    acc = Some(match acc {
                        None => g,
                        Some(prev) => g.compose(&prev).ok()?,
                    });
                }
                acc
            }
            MapDescription::Iterate { base, power } => {
                let g = base.lower_to_ball_automorphism()?;
                let mut acc = BallAutomorphism::identity(g.dim());
                for _ in 0..*power {
                    acc = g.compose(&acc).ok()?;
                }
                Some(acc)
            }
            _ => None,
        }
    }

    /// A canonical interior base point of the map's domain.
    pub fn base_point(&self) -> DomainPoint {
        match self.domain() {
            Domain::Ball(q) => DomainPoint::Ball(crate::geometry::BallPoint::origin(q)),
            Domain::Siegel(m) => DomainPoint::Siegel(SiegelPoint::base(m)),
        }
    }
}

/// Multi-index `N = (n_1, ..., n_k)` with the entrywise partial order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    pub fn zero(k: usize) -> Self {
        Self {
            entries: vec![0; k],
        }
    }

    /// `E_j`: one in slot `j`, zero elsewhere.
    pub fn unit(j: usize, k: usize) -> Self {
        let mut entries = vec![0; k];
        entries[j] = 1;
        Self { entries }
    }

    pub fn diagonal(n: u32, k: usize) -> Self {
        Self {
            entries: vec![n; k],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|&n| u64::from(n)).sum()
    }

    /// Entrywise order: `self >= other`.
    pub fn dominates(&self, other: &MultiIndex) -> bool {
        self.len() == other.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a >= b)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

/// Level of trust in a commutation or self-map property.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    /// Coefficient-level identity in the structured algebra.
    Exact,
    /// Verified on samples to the stated tolerance.
    Numeric { tol: f64 },
    /// Asserted by the caller, not checked.
    Unverified,
}

/// Outcome of a pairwise commutation check.
#[derive(Debug, Clone)]
pub enum CommuteOutcome {
    Exact,
    Numeric { max_residual: f64, tol: f64 },
    Failed { residual: f64 },
}

/// Pairwise commutation test. Structured Siegel maps (and ball automorphism
/// words) are compared at coefficient level of `f . g` vs `g . f`; anything
/// else is sampled: `max_x k(f(g(x)), g(f(x))) < tol`.
pub fn commute_check(
    f: &MapDescription,
    g: &MapDescription,
    samples: usize,
    tol: f64,
    seed: u64,
    conv: &MetricConvention,
) -> Result<CommuteOutcome, MapsError> {
    if f.domain() != g.domain() {
        return Err(MapsError::DomainMismatch);
    }
    if let (Some(pf), Some(pg)) = (f.lower_to_siegel_polynomial(), g.lower_to_siegel_polynomial())
    {
        let fg = pf.compose(&pg)?;
        let gf = pg.compose(&pf)?;
        let residual = fg.coefficient_distance(&gf);
        return Ok(if residual < 1e-12 {
            CommuteOutcome::Exact
        } else {
            CommuteOutcome::Failed { residual }
        });
    }
    // Numeric certificate on sampled points around the base point.
    let base = f.base_point();
    let points = kobayashi_ball_sample(&base, 2.0, samples.max(1), seed, conv)?;
    let mut max_residual = 0.0_f64;
    for x in &points {
        let fg = f.eval(&g.eval(x)?)?;
        let gf = g.eval(&f.eval(x)?)?;
        max_residual = max_residual.max(fg.distance(&gf, conv)?);
    }
    Ok(if max_residual < tol {
        CommuteOutcome::Numeric { max_residual, tol }
    } else {
        CommuteOutcome::Failed {
            residual: max_residual,
        }
    })
}

/// Certificate that a map description really is a self-map of its domain.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidityCertificate {
    /// Valid by construction (example families, ball automorphisms).
    Exact,
    /// The analytic sufficient condition on the coefficients holds.
    Analytic { margin: f64 },
    /// All sampled interior points mapped to interior points.
    Numeric { samples: usize },
}

/// Validates the self-map property. Example families and automorphisms are
/// valid by construction; triangular polynomials get the analytic
/// coefficient condition when it is decisive and sampling otherwise.
pub fn validate_self_map(
    f: &MapDescription,
    samples: usize,
    seed: u64,
) -> Result<ValidityCertificate, MapsError> {
    match f {
        MapDescription::BallAutomorphism(_)
        | MapDescription::ExampleHyperbolic { .. }
        | MapDescription::ExampleParabolic { .. } => Ok(ValidityCertificate::Exact),
        MapDescription::SiegelPolynomial(p) => {
            if let Some(margin) = p.analytic_margin() {
                if margin >= -1e-12 {
                    return Ok(ValidityCertificate::Analytic { margin });
                }
            }
            sample_self_map(f, samples, seed)
        }
        MapDescription::Composition(maps) => {
            let mut weakest = ValidityCertificate::Exact;
            for m in maps {
                let cert = validate_self_map(m, samples, seed)?;
                weakest = weaker(weakest, cert);
            }
            Ok(weakest)
        }
        MapDescription::Iterate { base, .. } => validate_self_map(base, samples, seed),
    }
}

fn weaker(a: ValidityCertificate, b: ValidityCertificate) -> ValidityCertificate {
    use ValidityCertificate::*;
    match (a, b) {
        (Exact, x) | (x, Exact) => x,
        (Analytic { margin: m1 }, Analytic { margin: m2 }) => Analytic {
            margin: m1.min(m2),
        },
        (Analytic { .. }, n @ Numeric { .. }) | (n @ Numeric { .. }, Analytic { .. }) => n,
        (Numeric { samples: s1 }, Numeric { samples: s2 }) => Numeric {
            samples: s1.min(s2),
        },
    }
}

fn sample_self_map(
    f: &MapDescription,
    samples: usize,
    seed: u64,
) -> Result<ValidityCertificate, MapsError> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = f.domain().dim();
    let count = samples.max(1);
    for _ in 0..count {
        let w: Vec<C64> = (0..m - 1)
            .map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        let wsq: f64 = w.iter().map(|c| c.norm_sqr()).sum();
        let z = C64::new(
            rng.gen_range(-3.0..3.0),
            wsq + rng.gen_range(1e-3..4.0),
        );
        let x = DomainPoint::Siegel(SiegelPoint::new(z, w).map_err(MapsError::Geometry)?);
        if let Err(MapsError::DomainViolation { .. }) = f.eval(&x) {
            let (zm, wm) = match &x {
                DomainPoint::Siegel(s) => s.materialize(),
                DomainPoint::Ball(_) => unreachable!(),
            };
            return Err(MapsError::NotSelfMap {
                witness: format!("z = {zm}, w = {wm:?}"),
                defect: 0.0,
            });
        }
    }
    Ok(ValidityCertificate::Numeric { samples: count })
}

/// A tuple of commuting self-maps with its commutation certificate.
#[derive(Debug, Clone)]
pub struct CommutingFamily {
    maps: Vec<MapDescription>,
    certificate: Certificate,
}

impl CommutingFamily {
    /// Runs pairwise commutation checks and stores the strongest certificate
    /// they support.
    pub fn verify(
        maps: Vec<MapDescription>,
        samples: usize,
        tol: f64,
        seed: u64,
        conv: &MetricConvention,
    ) -> Result<Self, MapsError> {
        if maps.is_empty() {
            return Err(MapsError::InvalidParameters("empty family".into()));
        }
        let domain = maps[0].domain();
        if maps.iter().any(|m| m.domain() != domain) {
            return Err(MapsError::DomainMismatch);
        }
        let mut all_exact = true;
        for i in 0..maps.len() {
            for j in i + 1..maps.len() {
                match commute_check(&maps[i], &maps[j], samples, tol, seed, conv)? {
                    CommuteOutcome::Exact => {}
                    CommuteOutcome::Numeric { .. } => all_exact = false,
                    CommuteOutcome::Failed { residual } => {
                        return Err(MapsError::CommutationFailed { residual })
                    }
                }
            }
        }
        Ok(Self {
            maps,
            certificate: if all_exact {
                Certificate::Exact
            } else {
                Certificate::Numeric { tol }
            },
        })
    }

    /// Wraps maps with a caller-supplied certificate, without checking.
    pub fn with_certificate(maps: Vec<MapDescription>, certificate: Certificate) -> Self {
        Self { maps, certificate }
    }

    pub fn maps(&self) -> &[MapDescription] {
        &self.maps
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn certificate(&self) -> Certificate {
        self.certificate
    }

    pub fn domain(&self) -> Domain {
        self.maps[0].domain()
    }

    /// The full-step map `f_1 . f_2 ... . f_k` advancing the diagonal by one.
    pub fn diagonal_step(&self) -> MapDescription {
        if self.maps.len() == 1 {
            self.maps[0].clone()
        } else {
            MapDescription::Composition(self.maps.clone())
        }
    }

    /// `F^N(x) = f_1^{n_1} . ... . f_k^{n_k} (x)` (rightmost factor first).
    pub fn iterate_multiindex(
        &self,
        index: &MultiIndex,
        x: &DomainPoint,
    ) -> Result<DomainPoint, MapsError> {
        if index.len() != self.maps.len() {
            return Err(MapsError::LengthMismatch {
                family: self.maps.len(),
                index: index.len(),
            });
        }
        let mut point = x.clone();
        for (map, &n) in self.maps.iter().zip(index.entries()).rev() {
            for _ in 0..n {
                point = map.eval(&point)?;
            }
        }
        #[cfg(debug_assertions)]
        {
            if !matches!(self.certificate, Certificate::Unverified) && index.total() <= 8 {
                let mut other = x.clone();
                for (map, &n) in self.maps.iter().zip(index.entries()) {
                    for _ in 0..n {
                        other = map.eval(&other)?;
                    }
                }
                let conv = MetricConvention::default();
                let d = point.distance(&other, &conv).unwrap_or(f64::INFINITY);
                debug_assert!(
                    d < 1e-8,
                    "composition order changed F^N(x) by {d} despite certificate"
                );
            }
        }
        Ok(point)
    }
}
