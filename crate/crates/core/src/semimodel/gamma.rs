//! The self-map induced on a semi-model base by a map commuting with the
//! family (`Gamma . l = l . g`), solved by coefficient matching in the
//! structured class, plus the univalence probe of the intertwiner on
//! Kobayashi balls along orbits.

use super::{Intertwiner, SemiModel, SemiModelError};
use crate::dynamics::EstimatorParams;
use crate::geometry::{cayley, cayley_inverse_jacobian, cayley_jacobian, kobayashi_ball_sample};
use crate::geometry::{BallPoint, C64, DomainPoint, SiegelPoint};
use crate::maps::{CommutingFamily, MapDescription, SiegelPolynomial};
use nalgebra::{DMatrix, DVector};

/// Solves `Gamma . l = l . g` for a structured `Gamma` on the model base.
/// Fails (with a description of the violated constraint) when `g` does not
/// descend within the triangular polynomial class.
pub fn gamma_induced(
    g: &MapDescription,
    model: &SemiModel,
) -> Result<MapDescription, SemiModelError> {
    let intertwiner = model.intertwiner().ok_or(SemiModelError::NotExactModel)?;
    if g.domain() != intertwiner.source() {
        return Err(SemiModelError::Maps(crate::maps::MapsError::DomainMismatch));
    }
    match intertwiner {
        Intertwiner::Identity(_) => Ok(g.clone()),
        Intertwiner::Projection { keep, .. } => {
            let poly = g.lower_to_siegel_polynomial().ok_or_else(|| {
                SemiModelError::NoStructuredSolution {
                    detail: "map does not reduce to the triangular polynomial class".into(),
                }
            })?;
            Ok(MapDescription::SiegelPolynomial(solve_projection(
                &poly, *keep,
            )?))
        }
        Intertwiner::QuadShear { base, .. } => {
            let poly = g.lower_to_siegel_polynomial().ok_or_else(|| {
                SemiModelError::NoStructuredSolution {
                    detail: "map does not reduce to the triangular polynomial class".into(),
                }
            })?;
            Ok(MapDescription::SiegelPolynomial(solve_quad_shear(
                &poly, *base,
            )?))
        }
        Intertwiner::BallConjugation { pre, w_unitary } => {
            let auto = g.lower_to_ball_automorphism().ok_or_else(|| {
                SemiModelError::NoStructuredSolution {
                    detail: "only automorphism words descend through a conjugation model".into(),
                }
            })?;
            let conj = pre.compose(&auto)?.compose(&pre.inverse())?;
            solve_conjugated_automorphism(&conj, w_unitary)
        }
    }
}

fn coefficient_scale(p: &SiegelPolynomial) -> f64 {
    let mut s = p.alpha().abs().max(p.constant().norm());
    for c in p.linear().iter() {
        s = s.max(c.norm());
    }
    for c in p.quad().iter() {
        s = s.max(c.norm());
    }
    for c in p.matrix().iter() {
        s = s.max(c.norm());
    }
    for c in p.offset().iter() {
        s = s.max(c.norm());
    }
    s.max(1.0)
}

/// Descend through the prefix projection `(z, u) -> (z, u_0..u_{keep-2})`:
/// possible iff no kept output row reads a dropped input slot.
fn solve_projection(
    poly: &SiegelPolynomial,
    keep: usize,
) -> Result<SiegelPolynomial, SemiModelError> {
    let n = poly.dim() - 1;
    let kept = keep - 1;
    let tol = 1e-12 * coefficient_scale(poly);
    let fail = |what: String| SemiModelError::NoStructuredSolution { detail: what };
    for k in kept..n {
        if poly.linear()[k].norm() > tol {
            return Err(fail(format!("z-row reads dropped slot u_{k} linearly")));
        }
        for j in 0..n {
            if poly.quad()[(j, k)].norm() > tol || poly.quad()[(k, j)].norm() > tol {
                return Err(fail(format!("z-row reads dropped slot u_{k} quadratically")));
            }
        }
    }
    for j in 0..kept {
        for k in kept..n {
            if poly.matrix()[(j, k)].norm() > tol {
                return Err(fail(format!("kept row u_{j} reads dropped slot u_{k}")));
            }
        }
    }
    let linear = DVector::from_iterator(kept, (0..kept).map(|k| poly.linear()[k]));
    let quad = DMatrix::from_fn(kept, kept, |j, k| poly.quad()[(j, k)]);
    let matrix = DMatrix::from_fn(kept, kept, |j, k| poly.matrix()[(j, k)]);
    let offset = DVector::from_iterator(kept, (0..kept).map(|k| poly.offset()[k]));
    Ok(SiegelPolynomial::new(
        keep,
        poly.alpha(),
        linear,
        quad,
        poly.constant(),
        matrix,
        offset,
    )?)
}

/// Descend through `(z, u) -> (z + i u_0^2, u_1..u_{d-1})`. Matching the
/// polynomial `Gamma(z + i u_0^2, u_1, ...) = (g_z + i g_{u_0}^2, g_{u_1},
/// ...)` coefficient by coefficient gives the conditions below.
fn solve_quad_shear(
    poly: &SiegelPolynomial,
    base: usize,
) -> Result<SiegelPolynomial, SemiModelError> {
    let n = poly.dim() - 1;
    let d = base;
    let tol = 1e-12 * coefficient_scale(poly);
    let fail = |what: String| SemiModelError::NoStructuredSolution { detail: what };
    let a0 = |k: usize| poly.matrix()[(0, k)];
    let b0 = poly.offset()[0];
    let i = C64::new(0.0, 1.0);

    // u_0^2 coefficient: alpha = S_00 + A_00^2.
    let u0sq = poly.quad()[(0, 0)] + a0(0) * a0(0);
    if (u0sq - C64::new(poly.alpha(), 0.0)).norm() > tol {
        return Err(fail(format!(
            "u_0^2 coefficient {u0sq} does not match alpha = {}",
            poly.alpha()
        )));
    }
    // Linear u_0 must cancel: c_0 + 2i b_0 A_00 = 0; dropped linear slots
    // likewise.
    let lin0 = poly.linear()[0] + i * 2.0 * b0 * a0(0);
    if lin0.norm() > tol {
        return Err(fail(format!("linear u_0 coefficient {lin0} does not vanish")));
    }
    for k in d..n {
        let link = poly.linear()[k] + i * 2.0 * b0 * a0(k);
        if link.norm() > tol {
            return Err(fail(format!("z-row reads dropped slot u_{k}: {link}")));
        }
    }
    // Cross terms u_0 u_k and dropped quadratic slots must cancel.
    for k in 1..n {
        let cross = poly.quad()[(0, k)] + a0(0) * a0(k);
        if cross.norm() > tol {
            return Err(fail(format!("cross term u_0 u_{k} does not vanish: {cross}")));
        }
    }
    for j in 1..n {
        for k in d.max(j)..n {
            let s = poly.quad()[(j, k)] + a0(j) * a0(k);
            if (j >= d || k >= d) && s.norm() > tol {
                return Err(fail(format!("quadratic term u_{j} u_{k} does not vanish")));
            }
        }
    }
    // Base u-rows must not read u_0 or dropped slots.
    for a in 1..d {
        if poly.matrix()[(a, 0)].norm() > tol {
            return Err(fail(format!("row u_{a} reads the sheared slot u_0")));
        }
        for k in d..n {
            if poly.matrix()[(a, k)].norm() > tol {
                return Err(fail(format!("row u_{a} reads dropped slot u_{k}")));
            }
        }
    }

    let dn = d - 1;
    let linear = DVector::from_iterator(dn, (1..d).map(|k| poly.linear()[k] + i * 2.0 * b0 * a0(k)));
    let quad = DMatrix::from_fn(dn, dn, |j, k| poly.quad()[(j + 1, k + 1)] + a0(j + 1) * a0(k + 1));
    let constant = poly.constant() + i * b0 * b0;
    let matrix = DMatrix::from_fn(dn, dn, |j, k| poly.matrix()[(j + 1, k + 1)]);
    let offset = DVector::from_iterator(dn, (1..d).map(|k| poly.offset()[k]));
    Ok(SiegelPolynomial::new(
        base,
        poly.alpha(),
        linear,
        quad,
        constant,
        matrix,
        offset,
    )?)
}

/// Conjugated automorphism fixing both 0 and infinity in the Siegel picture
/// is linear diagonal-triangular `(a z, sqrt(a) U w)`; read `a` off the axis
/// and the `w`-block off the Jacobian, then rotate by the model's unitary.
fn solve_conjugated_automorphism(
    conj: &crate::maps::BallAutomorphism,
    w_unitary: &DMatrix<C64>,
) -> Result<MapDescription, SemiModelError> {
    let q = conj.dim();
    let e1: Vec<C64> = {
        let mut v = vec![C64::new(0.0, 0.0); q];
        v[0] = C64::new(1.0, 0.0);
        v
    };
    let me1: Vec<C64> = {
        let mut v = vec![C64::new(0.0, 0.0); q];
        v[0] = C64::new(-1.0, 0.0);
        v
    };
    let img_e1 = conj.eval_raw(&e1);
    let img_me1 = conj.eval_raw(&me1);
    let fix_dev = |img: &[C64], target: &[C64]| -> f64 {
        img.iter()
            .zip(target)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    if fix_dev(&img_e1, &e1) > 1e-9 || fix_dev(&img_me1, &me1) > 1e-9 {
        return Err(SemiModelError::NoStructuredSolution {
            detail: "the commuting automorphism moves or exchanges the normalized fixed pair"
                .into(),
        });
    }
    let origin = BallPoint::origin(q);
    let image = conj.eval(&origin)?;
    let s_img = cayley(&image);
    let (z, _) = s_img.materialize();
    let a = z.im;
    let base = SiegelPoint::base(q);
    let jac =
        cayley_jacobian(&image) * conj.jacobian(origin.coords()) * cayley_inverse_jacobian(&base);
    let n = q - 1;
    let mut block = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            block[(j, k)] = jac[(j + 1, k + 1)];
        }
    }
    let rotated = w_unitary * block * w_unitary.adjoint();
    Ok(MapDescription::SiegelPolynomial(SiegelPolynomial::new(
        q,
        a,
        DVector::zeros(n),
        DMatrix::zeros(n, n),
        C64::new(0.0, 0.0),
        rotated,
        DVector::zeros(n),
    )?))
}

/// One row of a univalence report: the smallest image-separation ratio
/// `k_base(l a, l b) / k(a, b)` over sampled pairs in `B(F^N p, r)`.
#[derive(Debug, Clone)]
pub struct UnivalenceRow {
    pub orbit_offset: usize,
    pub min_ratio: f64,
    pub pairs: usize,
    pub collision: bool,
}

#[derive(Debug, Clone)]
pub struct UnivalenceReport {
    /// Whether the family is of automorphism type (base dimension equals the
    /// ambient dimension), which is when eventual univalence is guaranteed.
    pub guaranteed: bool,
    pub rows: Vec<UnivalenceRow>,
    /// Set when a collision persists in the guaranteed regime.
    pub violation: bool,
}

/// Samples point pairs in Kobayashi balls `B(F^N p, r)` along the diagonal
/// orbit and reports the smallest observed separation ratio of the
/// intertwiner images. Informational unless the family is of automorphism
/// type, where a persistent collision would violate eventual univalence.
pub fn univalence_check(
    family: &CommutingFamily,
    model: &SemiModel,
    p: &DomainPoint,
    radius: f64,
    count: usize,
    seed: u64,
    params: &EstimatorParams,
) -> Result<UnivalenceReport, SemiModelError> {
    if model.intertwiner().is_none() {
        return Err(SemiModelError::NotExactModel);
    }
    let guaranteed = model.dimension() == family.domain().dim();
    let diag = family.diagonal_step();
    let mut center = p.clone();
    let mut rows = Vec::new();
    let steps = 8usize;
    for n in 0..steps {
        let points = kobayashi_ball_sample(
            &center,
            radius,
            count.max(4),
            seed.wrapping_add(n as u64),
            &params.convention,
        )?;
        let images: Vec<DomainPoint> = points
            .iter()
            .map(|x| model.map_point(x))
            .collect::<Result<_, _>>()?;
        let mut min_ratio = f64::INFINITY;
        let mut pairs = 0usize;
        let mut collision = false;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let source = points[i].distance(&points[j], &params.convention)?;
                if source < 1e-9 {
                    continue;
                }
                let image = images[i].distance(&images[j], &params.convention)?;
                let ratio = image / source;
                min_ratio = min_ratio.min(ratio);
                pairs += 1;
                if image < 1e-9 && source > radius * 1e-3 {
                    collision = true;
                }
            }
        }
        rows.push(UnivalenceRow {
            orbit_offset: n,
            min_ratio,
            pairs,
            collision,
        });
        center = diag.eval(&center)?;
    }
    let violation = guaranteed && rows.last().is_some_and(|r| r.collision);
    Ok(UnivalenceReport {
        guaranteed,
        rows,
        violation,
    })
}
