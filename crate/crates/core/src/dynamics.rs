//! Orbit-based estimators: divergence rate, multi-index steps,
//! Denjoy-Wolff classification and restriction to invariant complex
//! geodesics.

use crate::geometry::{
    BallPoint, BoundaryPoint, C64, DomainPoint, GeometryError, GeodesicSlice, MetricConvention,
    MobiusMap, cayley, cayley_inverse,
};
use crate::maps::{CommutingFamily, MapDescription, MapsError, MultiIndex};
use nalgebra::{DMatrix, DVector};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Maps(#[from] MapsError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("estimator cancelled")]
    Cancelled,
    #[error("slice through the given boundary points is not invariant: {detail}")]
    NotInvariant { detail: String },
    #[error("{0}")]
    Estimation(String),
}

/// Cooperative cancellation for long-running estimators. The default token
/// never cancels.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Option<Arc<AtomicBool>>);

impl CancelToken {
    pub fn new(flag: Arc<AtomicBool>) -> Self {
        Self(Some(flag))
    }

    pub fn is_cancelled(&self) -> bool {
        self.0
            .as_ref()
            .map_or(false, |f| f.load(Ordering::Relaxed))
    }
}

/// Knobs shared by the iterative estimators.
#[derive(Debug, Clone)]
pub struct EstimatorParams {
    pub max_iter: usize,
    pub tol: f64,
    pub convention: MetricConvention,
    pub cancel: CancelToken,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
            convention: MetricConvention::default(),
            cancel: CancelToken::default(),
        }
    }
}

/// Estimated value of an iteratively computed limit, with brackets.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl LimitEstimate {
    fn clamped(value: f64, lower: f64, upper: f64, iterations: usize, tol: f64) -> Self {
        let lower = lower.min(upper);
        let value = value.clamp(lower, upper);
        Self {
            value,
            lower,
            upper,
            iterations,
            converged: upper - lower < tol,
        }
    }
}

/// Classification thresholds: orbits are declared bounded inside the
/// Kobayashi ball of radius `bound_radius`; `lambda_tol` separates
/// hyperbolic from parabolic; `boundary_eps` declares boundary convergence;
/// the two dilation estimates must agree within `consistency` (relative).
#[derive(Debug, Clone)]
pub struct ClassifyParams {
    pub estimator: EstimatorParams,
    pub bound_radius: f64,
    pub step_tol: f64,
    pub lambda_tol: f64,
    pub boundary_eps: f64,
    pub consistency: f64,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            estimator: EstimatorParams::default(),
            bound_radius: 20.0,
            step_tol: 1e-10,
            lambda_tol: 1e-4,
            boundary_eps: 1e-9,
            consistency: 0.05,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub iterations: usize,
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum ClassKind {
    Elliptic {
        fixed_point: DomainPoint,
        residual: f64,
    },
    Hyperbolic {
        lambda: f64,
        lambda_quotient: f64,
        dw: BoundaryPoint,
        rate: LimitEstimate,
    },
    Parabolic {
        lambda_quotient: f64,
        dw: BoundaryPoint,
        rate: LimitEstimate,
    },
    Unknown {
        reason: String,
    },
}

#[derive(Debug, Clone)]
pub struct Classification {
    pub kind: ClassKind,
    pub diagnostics: Diagnostics,
}

/// The orbit `[x, f(x), ..., f^n(x)]` in scaled representation.
pub fn orbit(
    f: &MapDescription,
    x: &DomainPoint,
    n: usize,
) -> Result<Vec<DomainPoint>, DynamicsError> {
    let mut points = Vec::with_capacity(n + 1);
    points.push(x.clone());
    for _ in 0..n {
        let next = f.eval(points.last().unwrap())?;
        points.push(next);
    }
    Ok(points)
}

/// Growth analysis of `a_m = k(f^m x, x)`: a rigorous upper bound
/// `min_m a_m / m` (the divergence rate is an infimum) and a Richardson
/// extrapolation of the increments that cancels both constant offsets and
/// logarithmic growth, bracketing the limit from below heuristically.
fn analyze_growth(a: &[f64], tol: f64) -> LimitEstimate {
    let m_max = a.len() - 1;
    if m_max == 0 {
        return LimitEstimate::clamped(0.0, 0.0, 0.0, 0, tol);
    }
    let mut upper = f64::INFINITY;
    for (m, &val) in a.iter().enumerate().skip(1) {
        upper = upper.min(val / m as f64);
    }
    let upper = upper.max(0.0);
    if m_max < 8 {
        let value = (a[m_max] / m_max as f64).min(upper);
        return LimitEstimate::clamped(value, 0.0, upper, m_max, tol);
    }
    let m8 = m_max / 8;
    let m4 = 2 * m8;
    let m2 = 4 * m8;
    let m1 = 8 * m8;
    let r1 = (a[m1] - a[m2]) / (m1 - m2) as f64;
    let r2 = (a[m2] - a[m4]) / (m2 - m4) as f64;
    let r3 = (a[m4] - a[m8]) / (m4 - m8) as f64;
    let d1 = r1 - r2;
    let d2 = r2 - r3;
    let mut estimate = r1;
    if d2.abs() > 1e-15 {
        let ratio = d1 / d2;
        if ratio.abs() < 0.95 {
            // Geometric tail of the correction sequence.
            estimate = r1 + d1 * ratio / (1.0 - ratio);
        }
    }
    let estimate = estimate.clamp(0.0, upper);
    let slack = d1.abs().max(1e-15 * (1.0 + a[m1].abs()));
    let lower = (estimate - slack).clamp(0.0, upper);
    LimitEstimate::clamped(estimate, lower, upper, m_max, tol)
}

/// Divergence rate `c(f) = lim k(f^m x, x)/m`. The upper bracket is the
/// rigorous bound `min_m a_m/m` (the limit is also the infimum); the value
/// and lower bracket come from increment extrapolation.
pub fn divergence_rate(
    f: &MapDescription,
    x: &DomainPoint,
    params: &EstimatorParams,
) -> Result<LimitEstimate, DynamicsError> {
    let distances = orbit_distances(f, x, params)?;
    Ok(analyze_growth(&distances, params.tol))
}

fn orbit_distances(
    f: &MapDescription,
    x: &DomainPoint,
    params: &EstimatorParams,
) -> Result<Vec<f64>, DynamicsError> {
    let mut out = Vec::with_capacity(params.max_iter + 1);
    out.push(0.0);
    let mut point = x.clone();
    for _ in 0..params.max_iter {
        if params.cancel.is_cancelled() {
            return Err(DynamicsError::Cancelled);
        }
        point = f.eval(&point)?;
        out.push(point.distance(x, &params.convention)?);
    }
    Ok(out)
}

/// Limit of a monotone non-increasing sequence with geometric-tail
/// extrapolation for the lower bracket.
fn monotone_limit<E>(
    mut next: impl FnMut(usize) -> Result<f64, E>,
    max_iter: usize,
    tol: f64,
) -> Result<LimitEstimate, E> {
    let mut values = Vec::with_capacity(max_iter.min(64));
    for n in 0..max_iter.max(3) {
        let v = next(n)?;
        values.push(v);
        let len = values.len();
        if len >= 3 {
            let d1 = values[len - 2] - values[len - 1];
            let d2 = values[len - 3] - values[len - 2];
            if d1.abs() < tol && d2.abs() < tol {
                break;
            }
        }
    }
    let len = values.len();
    let b = values[len - 1];
    if len < 3 {
        return Ok(LimitEstimate::clamped(b, 0.0, b, len, tol));
    }
    let d1 = (values[len - 2] - values[len - 1]).max(0.0);
    let d2 = (values[len - 3] - values[len - 2]).max(0.0);
    let tail = if d2 > 1e-300 && d1 < d2 {
        let rho = d1 / d2;
        d1 * rho / (1.0 - rho)
    } else {
        d1
    };
    let value = (b - tail).max(0.0);
    let lower = (b - 2.0 * tail - d1).max(0.0);
    Ok(LimitEstimate::clamped(value, lower, b, len, tol))
}

/// The M-step `s^F_M(x) = lim_N k(F^N x, F^{N+M} x)`, evaluated along the
/// diagonal `N = (n, ..., n)`; the sequence is monotone non-increasing, so
/// the diagonal limit equals the multi-index limit.
pub fn step(
    family: &CommutingFamily,
    index: &MultiIndex,
    x: &DomainPoint,
    params: &EstimatorParams,
) -> Result<LimitEstimate, DynamicsError> {
    if index.len() != family.len() {
        return Err(DynamicsError::Maps(MapsError::LengthMismatch {
            family: family.len(),
            index: index.len(),
        }));
    }
    let diag = family.diagonal_step();
    let mut y = x.clone();
    let mut z = family.iterate_multiindex(index, x)?;
    let mut previous = f64::INFINITY;
    monotone_limit(
        |_n| -> Result<f64, DynamicsError> {
            if params.cancel.is_cancelled() {
                return Err(DynamicsError::Cancelled);
            }
            let d = y.distance(&z, &params.convention)?;
            debug_assert!(
                d <= previous + 1e-10,
                "step sequence increased: {previous} -> {d}"
            );
            previous = d;
            y = diag.eval(&y)?;
            z = diag.eval(&z)?;
            Ok(d)
        },
        params.max_iter,
        params.tol,
    )
}

/// Denjoy-Wolff classification by orbit iteration.
///
/// Bounded orbits are refined to a fixed point (elliptic); escaping orbits
/// produce a boundary point and the dilation computed two ways, from the
/// divergence rate and from the boundary-gap quotient, which must agree
/// within the configured consistency.
pub fn denjoy_wolff(
    f: &MapDescription,
    x: &DomainPoint,
    params: &ClassifyParams,
) -> Result<Classification, DynamicsError> {
    let conv = &params.estimator.convention;
    let max_iter = params.estimator.max_iter.max(16);
    let mut points = Vec::with_capacity(max_iter + 1);
    let mut dist = Vec::with_capacity(max_iter + 1);
    let mut gaps = Vec::with_capacity(max_iter + 1);
    let mut steps = Vec::with_capacity(max_iter);
    points.push(x.clone());
    dist.push(0.0);
    gaps.push(x.boundary_gap());
    let mut settled = false;
    for _ in 0..max_iter {
        if params.estimator.cancel.is_cancelled() {
            return Err(DynamicsError::Cancelled);
        }
        let prev = points.last().unwrap().clone();
        let next = f.eval(&prev)?;
        steps.push(next.distance(&prev, conv)?);
        dist.push(next.distance(x, conv)?);
        gaps.push(next.boundary_gap());
        points.push(next);
        if steps.len() >= 2
            && steps[steps.len() - 1] < 1e-13
            && steps[steps.len() - 2] < 1e-13
        {
            settled = true;
            break;
        }
        // Deep inside the boundary-escape regime nothing more can be
        // learned and the gap arithmetic is about to underflow.
        if *gaps.last().unwrap() < 1e-280 {
            break;
        }
    }
    let iterations = points.len() - 1;
    let diagnostics = |steps: &[f64]| Diagnostics {
        iterations,
        residuals: steps.iter().rev().take(8).rev().copied().collect(),
    };
    let d_max = dist.iter().copied().fold(0.0_f64, f64::max);
    let bounded = d_max < params.bound_radius;

    if bounded && (settled || steps.last().is_some_and(|s| *s < params.step_tol)) {
        // Cauchy orbit: the tail is the fixed point.
        let (fp, residual) = refine_fixed_point(f, points.last().unwrap())?;
        return Ok(Classification {
            kind: ClassKind::Elliptic {
                fixed_point: fp,
                residual,
            },
            diagnostics: diagnostics(&steps),
        });
    }

    let escaped = boundary_escape(&gaps, params, d_max);
    if bounded && !escaped {
        // Bounded without Cauchy behavior: try the Newton refinement
        // (rotations and fixed-slice elliptic maps land here).
        if let Ok((fp, residual)) = refine_fixed_point(f, points.last().unwrap()) {
            if residual < 1e-8 {
                return Ok(Classification {
                    kind: ClassKind::Elliptic {
                        fixed_point: fp,
                        residual,
                    },
                    diagnostics: diagnostics(&steps),
                });
            }
        }
        return Ok(Classification {
            kind: ClassKind::Unknown {
                reason: format!(
                    "orbit stayed within Kobayashi radius {d_max:.3} without settling"
                ),
            },
            diagnostics: diagnostics(&steps),
        });
    }
    if !escaped {
        return Ok(Classification {
            kind: ClassKind::Unknown {
                reason: "orbit neither settled nor approached the boundary".into(),
            },
            diagnostics: diagnostics(&steps),
        });
    }

    // Boundary regime: Denjoy-Wolff point from the orbit tail. A Siegel
    // orbit escaping to infinity lands exactly on e_1 in ball coordinates;
    // otherwise parabolic orbits approach tangentially with O(1/n)
    // coordinate error, so two Richardson levels in 1/n are applied before
    // normalizing (a no-op for geometrically convergent orbits).
    let dw = if siegel_orbit_escapes_to_infinity(&points) {
        BoundaryPoint::e1(x.dim())
    } else {
        BoundaryPoint::new(extrapolate_boundary_limit(&points))?
    };
    let rate = analyze_growth(&dist, params.estimator.tol);
    let lambda_rate = conv.lambda_from_rate(rate.value).min(1.0);
    let lambda_quotient = gap_quotient(&gaps);
    let agreement = (lambda_rate - lambda_quotient).abs() / lambda_rate.max(lambda_quotient);
    if agreement > params.consistency {
        return Ok(Classification {
            kind: ClassKind::Unknown {
                reason: format!(
                    "dilation estimates disagree: rate gives {lambda_rate:.6}, \
                     boundary quotient gives {lambda_quotient:.6}"
                ),
            },
            diagnostics: diagnostics(&steps),
        });
    }
    let kind = if lambda_rate < 1.0 - params.lambda_tol {
        ClassKind::Hyperbolic {
            lambda: lambda_rate,
            lambda_quotient,
            dw,
            rate,
        }
    } else {
        ClassKind::Parabolic {
            lambda_quotient,
            dw,
            rate,
        }
    };
    Ok(Classification {
        kind,
        diagnostics: diagnostics(&steps),
    })
}

/// True when the orbit lives on the Siegel domain and its first coordinate
/// grows without bound (`|Z| -> infinity`), which pins the ball-coordinate
/// Denjoy-Wolff point to exactly `e_1`.
fn siegel_orbit_escapes_to_infinity(points: &[DomainPoint]) -> bool {
    let log2_magnitude = |p: &DomainPoint| -> Option<f64> {
        match p {
            DomainPoint::Siegel(s) => {
                let (z, _) = s.scaled_parts();
                Some(f64::from(s.scale()) + z.norm().log2())
            }
            DomainPoint::Ball(_) => None,
        }
    };
    let n = points.len() - 1;
    if n < 8 {
        return false;
    }
    match (
        log2_magnitude(&points[n]),
        log2_magnitude(&points[n / 2]),
        log2_magnitude(&points[n / 4]),
    ) {
        (Some(end), Some(mid), Some(quarter)) => {
            end > 10.0 && end > mid + 0.5 && mid > quarter + 0.25
        }
        _ => false,
    }
}

/// Coordinate extrapolation of an orbit converging to a boundary point,
/// cancelling 1/n and 1/n^2 tails: with c_m the ball coordinates of the
/// orbit at indices m, 2m, 4m, the combination
/// `(4(2 c_{4m} - c_{2m}) - (2 c_{2m} - c_m))/3` has O(1/n^3) error.
fn extrapolate_boundary_limit(points: &[DomainPoint]) -> Vec<C64> {
    let n = points.len() - 1;
    let coords = |i: usize| points[i].to_ball().coords().to_vec();
    if n < 8 {
        return coords(n);
    }
    let m = n / 4;
    let c1 = coords(m);
    let c2 = coords(2 * m);
    let c4 = coords(4 * m);
    let mut out = Vec::with_capacity(c1.len());
    for j in 0..c1.len() {
        let e1 = c4[j] * 2.0 - c2[j];
        let e1_half = c2[j] * 2.0 - c1[j];
        out.push((e1 * 4.0 - e1_half) / 3.0);
    }
    let norm: f64 = out.iter().map(|c| c.norm_sqr()).sum();
    if !(norm > 0.25 && norm.is_finite()) {
        // Extrapolation degenerated; fall back to the raw tail.
        return coords(n);
    }
    out
}

fn boundary_escape(gaps: &[f64], params: &ClassifyParams, d_max: f64) -> bool {
    let end = *gaps.last().unwrap();
    if end < params.boundary_eps || d_max >= params.bound_radius {
        return true;
    }
    let max_gap = gaps.iter().copied().fold(0.0_f64, f64::max);
    let n = gaps.len();
    if n < 8 {
        return false;
    }
    let q2 = gaps[n / 2];
    let q3 = gaps[3 * n / 4];
    end < 1e-5 * max_gap && end < 0.8 * q3 && q3 < 0.8 * q2
}

/// Geometric mean of the boundary-gap quotients over the orbit tail; the
/// squared-gap ratio `(1 - |f z|^2)/(1 - |z|^2)` has the same limit as the
/// dilation quotient with plain norms.
fn gap_quotient(gaps: &[f64]) -> f64 {
    let n = gaps.len();
    let window = (n / 4).clamp(1, 24);
    let mut log_sum = 0.0;
    let mut count = 0usize;
    for i in n - window..n {
        if gaps[i - 1] > 0.0 && gaps[i] > 0.0 {
            log_sum += (gaps[i] / gaps[i - 1]).ln();
            count += 1;
        }
    }
    if count == 0 {
        1.0
    } else {
        (log_sum / count as f64).exp().min(1.0)
    }
}

/// Newton refinement of a fixed point from a starting guess, with an SVD
/// pseudo-inverse so fixed-point slices (singular `J - I`) still converge.
fn refine_fixed_point(
    f: &MapDescription,
    start: &DomainPoint,
) -> Result<(DomainPoint, f64), DynamicsError> {
    let dim = start.dim();
    let to_vec = |p: &DomainPoint| -> DVector<C64> {
        match p {
            DomainPoint::Ball(b) => DVector::from_column_slice(b.coords()),
            DomainPoint::Siegel(s) => {
                let (z, w) = s.materialize();
                let mut v = DVector::zeros(s.dim());
                v[0] = z;
                for (j, c) in w.iter().enumerate() {
                    v[j + 1] = *c;
                }
                v
            }
        }
    };
    let from_vec = |v: &DVector<C64>| -> Result<DomainPoint, GeometryError> {
        match start {
            DomainPoint::Ball(_) => Ok(DomainPoint::Ball(BallPoint::new(
                v.iter().copied().collect(),
            )?)),
            DomainPoint::Siegel(_) => Ok(DomainPoint::Siegel(crate::geometry::SiegelPoint::new(
                v[0],
                v.iter().skip(1).copied().collect(),
            )?)),
        }
    };
    let mut point = start.clone();
    let mut best = (point.clone(), f64::INFINITY);
    for _ in 0..40 {
        let image = f.eval(&point)?;
        let pv = to_vec(&point);
        let iv = to_vec(&image);
        let residual = (&iv - &pv).norm();
        if residual < best.1 {
            best = (point.clone(), residual);
        }
        if residual < 1e-13 {
            break;
        }
        let jac = f.jacobian(&point)?;
        let lhs = jac - DMatrix::<C64>::identity(dim, dim);
        let rhs = -(iv - &pv);
        let svd = lhs.svd(true, true);
        let delta = match svd.solve(&rhs, 1e-10) {
            Ok(d) => d,
            Err(_) => break,
        };
        // Backtrack if the update leaves the domain.
        let mut updated = None;
        let mut scale = 1.0;
        for _ in 0..8 {
            let candidate = &pv + &delta * C64::new(scale, 0.0);
            if let Ok(p) = from_vec(&candidate) {
                updated = Some(p);
                break;
            }
            scale *= 0.5;
        }
        match updated {
            Some(p) => point = p,
            None => break,
        }
    }
    Ok(best)
}

/// Result of restricting a self-map to the complex geodesic through two
/// boundary points.
#[derive(Debug, Clone)]
pub struct GeodesicRestriction {
    pub mobius: MobiusMap,
    pub fit_residual: f64,
    pub is_automorphism: bool,
    /// Attracting boundary fixed point and dilation, when the restriction is
    /// a hyperbolic disc automorphism.
    pub hyperbolic: Option<(C64, f64)>,
}

/// Tests invariance of the slice through `p`, `p'` under `f` and fits the
/// induced Mobius map of the disc (from three points, verified on all
/// samples to 1e-8). Siegel-side maps are conjugated through the Cayley
/// transform.
pub fn restrict_to_geodesic(
    f: &MapDescription,
    p: &BoundaryPoint,
    p_prime: &BoundaryPoint,
    samples: usize,
) -> Result<GeodesicRestriction, DynamicsError> {
    let slice = GeodesicSlice::through(p, p_prime)?;
    let samples = samples.max(6);
    let eval_ball = |x: &BallPoint| -> Result<BallPoint, DynamicsError> {
        match f.domain() {
            crate::geometry::Domain::Ball(_) => match f.eval(&DomainPoint::Ball(x.clone()))? {
                DomainPoint::Ball(y) => Ok(y),
                DomainPoint::Siegel(_) => unreachable!(),
            },
            crate::geometry::Domain::Siegel(_) => {
                let s = cayley(x);
                match f.eval(&DomainPoint::Siegel(s))? {
                    DomainPoint::Siegel(t) => Ok(cayley_inverse(&t)),
                    DomainPoint::Ball(_) => unreachable!(),
                }
            }
        }
    };
    let mut pairs = Vec::with_capacity(samples);
    for j in 0..samples {
        // Deterministic spiral of sample parameters.
        let r = 0.15 + 0.7 * (j as f64 + 0.5) / samples as f64;
        let theta = 2.399_963_229_728_653 * j as f64;
        let zeta = C64::from_polar(r, theta);
        let x = slice.eval(zeta)?;
        let y = eval_ball(&x)?;
        let (image_zeta, off_slice) = slice.invert(y.coords());
        let scale = 1.0 + y.norm();
        if off_slice > 1e-7 * scale {
            return Err(DynamicsError::NotInvariant {
                detail: format!(
                    "image of slice point at parameter {zeta} lies {off_slice:.3e} off the slice"
                ),
            });
        }
        if image_zeta.norm() >= 1.0 {
            return Err(DynamicsError::NotInvariant {
                detail: format!("image parameter {image_zeta} escaped the disc"),
            });
        }
        pairs.push((zeta, image_zeta));
    }
    let (mobius, _) = MobiusMap::fit(&pairs[..3])
        .ok_or_else(|| DynamicsError::Estimation("Mobius fit from 3 points failed".into()))?;
    let fit_residual = pairs
        .iter()
        .map(|(z, w)| (mobius.apply(*z) - w).norm())
        .fold(0.0_f64, f64::max);
    if fit_residual > 1e-8 {
        return Err(DynamicsError::NotInvariant {
            detail: format!(
                "slice is invariant but the restriction is not Mobius (residual {fit_residual:.3e})"
            ),
        });
    }
    let is_automorphism = mobius.is_disc_automorphism(1e-7);
    let hyperbolic = if is_automorphism {
        mobius
            .disc_dilation()
            .filter(|(_, lambda)| (lambda - 1.0).abs() > 1e-7)
    } else {
        None
    };
    Ok(GeodesicRestriction {
        mobius,
        fit_residual,
        is_automorphism,
        hyperbolic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SiegelPoint;
    use crate::maps::BallAutomorphism;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn ball_pt(coords: Vec<C64>) -> DomainPoint {
        DomainPoint::Ball(BallPoint::new(coords).unwrap())
    }

    fn siegel_pt(z: C64, w: Vec<C64>) -> DomainPoint {
        DomainPoint::Siegel(SiegelPoint::new(z, w).unwrap())
    }

    #[test]
    fn orbit_of_identity_repeats() {
        let id = MapDescription::identity_on(crate::geometry::Domain::Ball(2));
        let x = ball_pt(vec![c(0.1, 0.2), c(0.3, 0.0)]);
        let orb = orbit(&id, &x, 5).unwrap();
        assert_eq!(orb.len(), 6);
        for p in &orb {
            assert_eq!(p, &x);
        }
    }

    #[test]
    fn orbit_of_example_doubles_axis() {
        let f = MapDescription::example_hyperbolic(2, 1).unwrap();
        let x = siegel_pt(c(0.0, 1.0), vec![c(0.0, 0.0)]);
        let orb = orbit(&f, &x, 3).unwrap();
        let expected = [1.0, 2.0, 4.0, 8.0];
        for (p, e) in orb.iter().zip(expected) {
            if let DomainPoint::Siegel(s) = p {
                let (z, _) = s.materialize();
                assert!((z - c(0.0, e)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn orbit_steps_are_non_increasing() {
        let conv = MetricConvention::default();
        let g = MapDescription::example_parabolic(3, 2, 1.0).unwrap();
        let x = siegel_pt(c(0.2, 1.5), vec![c(0.3, 0.1), c(0.0, 0.2)]);
        let orb = orbit(&g, &x, 40).unwrap();
        let mut prev = f64::INFINITY;
        for pair in orb.windows(2) {
            let d = pair[0].distance(&pair[1], &conv).unwrap();
            assert!(d <= prev + 1e-9, "step grew from {prev} to {d}");
            prev = d;
        }
    }

    #[test]
    fn divergence_rate_of_identity_is_zero() {
        let id = MapDescription::identity_on(crate::geometry::Domain::Ball(1));
        let est = divergence_rate(&id, &ball_pt(vec![c(0.3, 0.1)]), &EstimatorParams::default())
            .unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn divergence_rate_of_disc_automorphism() {
        // (z + 1/2)/(1 + z/2): dilation 1/3 at 1, c = log 3.
        let f = MapDescription::BallAutomorphism(BallAutomorphism::disc_hyperbolic(0.5).unwrap());
        let est =
            divergence_rate(&f, &ball_pt(vec![c(0.1, 0.4)]), &EstimatorParams::default()).unwrap();
        assert!(
            (est.value - 3.0f64.ln()).abs() < 1e-9,
            "c = {} vs log 3 = {}",
            est.value,
            3.0f64.ln()
        );
        assert!(est.lower <= est.value && est.value <= est.upper);
        assert!(est.upper >= 3.0f64.ln() - 1e-12);
    }

    #[test]
    fn divergence_rate_of_hyperbolic_example_is_log_two() {
        for (m, q) in [(2usize, 1usize), (3, 2), (4, 1)] {
            let f = MapDescription::example_hyperbolic(m, q).unwrap();
            let w = vec![c(0.1, 0.05); m - 1];
            let x = siegel_pt(c(0.2, 2.0), w);
            let params = EstimatorParams {
                max_iter: 50,
                ..EstimatorParams::default()
            };
            let est = divergence_rate(&f, &x, &params).unwrap();
            assert!(
                (est.value - 2.0f64.ln()).abs() < 1e-3,
                "m={m}, q={q}: c = {}",
                est.value
            );
            assert!(est.lower <= 2.0f64.ln() + 1e-9 && 2.0f64.ln() <= est.upper + 1e-9);
        }
    }

    #[test]
    fn rate_scales_with_iteration_power() {
        let f = MapDescription::example_hyperbolic(2, 1).unwrap();
        let x = siegel_pt(c(0.0, 1.0), vec![c(0.2, 0.0)]);
        let params = EstimatorParams::default();
        let c1 = divergence_rate(&f, &x, &params).unwrap();
        for n in [2u32, 3] {
            let fn_ = MapDescription::iterate(f.clone(), n);
            let cn = divergence_rate(&fn_, &x, &params).unwrap();
            assert!(
                (cn.value - n as f64 * c1.value).abs() < 1e-6,
                "c(f^{n}) = {} vs {}",
                cn.value,
                n as f64 * c1.value
            );
        }
    }

    #[test]
    fn step_of_isometry_is_constant() {
        let g = BallAutomorphism::disc_hyperbolic(0.5).unwrap();
        let x = ball_pt(vec![c(0.2, -0.3)]);
        let fam = CommutingFamily::with_certificate(
            vec![MapDescription::BallAutomorphism(g.clone())],
            crate::maps::Certificate::Exact,
        );
        let est = step(&fam, &MultiIndex::unit(0, 1), &x, &EstimatorParams::default()).unwrap();
        let expect = x
            .distance(
                &DomainPoint::Ball(g.eval(&BallPoint::new(vec![c(0.2, -0.3)]).unwrap()).unwrap()),
                &MetricConvention::default(),
            )
            .unwrap();
        assert!((est.value - expect).abs() < 1e-12);
        assert!(est.converged);
    }

    #[test]
    fn step_of_identity_family_is_zero() {
        let fam = CommutingFamily::with_certificate(
            vec![MapDescription::identity_on(crate::geometry::Domain::Siegel(2))],
            crate::maps::Certificate::Exact,
        );
        let x = siegel_pt(c(0.0, 2.0), vec![c(0.1, 0.1)]);
        let est = step(&fam, &MultiIndex::new(vec![3]), &x, &EstimatorParams::default()).unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn step_never_exceeds_initial_distance() {
        let fam = CommutingFamily::verify(
            vec![
                MapDescription::example_hyperbolic(3, 1).unwrap(),
                MapDescription::example_parabolic(3, 2, 1.0).unwrap(),
            ],
            16,
            1e-9,
            0,
            &MetricConvention::default(),
        )
        .unwrap();
        let x = siegel_pt(c(0.1, 2.0), vec![c(0.2, 0.3), c(-0.1, 0.1)]);
        let index = MultiIndex::new(vec![1, 1]);
        let est = step(&fam, &index, &x, &EstimatorParams::default()).unwrap();
        let direct = fam
            .iterate_multiindex(&index, &x)
            .unwrap()
            .distance(&x, &MetricConvention::default())
            .unwrap();
        assert!(est.value <= direct + 1e-9);
    }

    #[test]
    fn classify_rotation_as_elliptic() {
        let u = DMatrix::from_row_slice(1, 1, &[C64::from_polar(1.0, 0.7)]);
        let f = MapDescription::BallAutomorphism(BallAutomorphism::rotation(u).unwrap());
        let x = ball_pt(vec![c(0.4, 0.1)]);
        let cls = denjoy_wolff(&f, &x, &ClassifyParams::default()).unwrap();
        match cls.kind {
            ClassKind::Elliptic {
                fixed_point,
                residual,
            } => {
                assert!(residual < 1e-10);
                if let DomainPoint::Ball(p) = fixed_point {
                    assert!(p.norm() < 1e-8, "fixed point should be the origin");
                }
            }
            other => panic!("expected elliptic, got {other:?}"),
        }
    }

    #[test]
    fn classify_disc_hyperbolic() {
        let f = MapDescription::BallAutomorphism(BallAutomorphism::disc_hyperbolic(0.5).unwrap());
        let cls = denjoy_wolff(&f, &ball_pt(vec![c(0.0, 0.2)]), &ClassifyParams::default())
            .unwrap();
        match cls.kind {
            ClassKind::Hyperbolic {
                lambda,
                lambda_quotient,
                dw,
                ..
            } => {
                assert!((lambda - 1.0 / 3.0).abs() < 1e-4, "lambda = {lambda}");
                assert!((lambda_quotient - 1.0 / 3.0).abs() < 0.02);
                assert!((dw.coords()[0] - c(1.0, 0.0)).norm() < 1e-6);
            }
            other => panic!("expected hyperbolic, got {other:?}"),
        }
    }

    #[test]
    fn classify_example_parabolic() {
        let g = MapDescription::example_parabolic(2, 2, 1.0).unwrap();
        let x = siegel_pt(c(0.0, 1.0), vec![c(0.0, 0.0)]);
        let cls = denjoy_wolff(&g, &x, &ClassifyParams::default()).unwrap();
        match cls.kind {
            ClassKind::Parabolic { dw, .. } => {
                // In ball coordinates the Denjoy-Wolff point is e_1.
                assert!((dw.coords()[0] - c(1.0, 0.0)).norm() < 1e-4, "dw = {dw:?}");
            }
            other => panic!("expected parabolic, got {other:?}"),
        }
    }

    #[test]
    fn classify_example_hyperbolic() {
        let f = MapDescription::example_hyperbolic(3, 2).unwrap();
        let x = siegel_pt(c(0.3, 1.5), vec![c(0.2, 0.1), c(0.1, -0.2)]);
        let cls = denjoy_wolff(&f, &x, &ClassifyParams::default()).unwrap();
        match cls.kind {
            ClassKind::Hyperbolic { lambda, dw, .. } => {
                assert!((lambda - 0.5).abs() < 1e-4, "lambda = {lambda}");
                assert!((dw.coords()[0] - c(1.0, 0.0)).norm() < 1e-5);
            }
            other => panic!("expected hyperbolic, got {other:?}"),
        }
    }

    #[test]
    fn restriction_of_identity_is_identity() {
        let id = MapDescription::identity_on(crate::geometry::Domain::Ball(2));
        let p = BoundaryPoint::e1(2);
        let q = p.antipode();
        let res = restrict_to_geodesic(&id, &p, &q, 12).unwrap();
        assert!(res.is_automorphism);
        assert!(res.hyperbolic.is_none());
        assert!((res.mobius.apply(c(0.3, 0.2)) - c(0.3, 0.2)).norm() < 1e-10);
    }

    #[test]
    fn restriction_of_siegel_doubling_has_dilation_half() {
        // ExampleHyperbolic{2,1} on the slice w = 0 acts as z -> 2z in the
        // Siegel picture; through the Cayley transform the disc restriction
        // is (1 + 3 zeta)/(3 + zeta) with dilation 1/2 at zeta = 1.
        let f = MapDescription::example_hyperbolic(2, 1).unwrap();
        let p = BoundaryPoint::e1(2);
        let q = p.antipode();
        let res = restrict_to_geodesic(&f, &p, &q, 12).unwrap();
        assert!(res.is_automorphism, "restriction should be an automorphism");
        let (fixed, lambda) = res.hyperbolic.expect("restriction is hyperbolic");
        assert!((fixed - c(1.0, 0.0)).norm() < 1e-7);
        assert!((lambda - 0.5).abs() < 1e-9, "dilation = {lambda}");
    }

    #[test]
    fn non_invariant_slice_is_reported() {
        // A generic automorphism of B^2 does not preserve the diameter
        // through +-e_1.
        let phi = BallAutomorphism::involution(vec![c(0.3, 0.1), c(0.2, -0.2)]).unwrap();
        let f = MapDescription::BallAutomorphism(phi);
        let p = BoundaryPoint::e1(2);
        let q = p.antipode();
        match restrict_to_geodesic(&f, &p, &q, 12) {
            Err(DynamicsError::NotInvariant { .. }) => {}
            other => panic!("expected invariance failure, got {other:?}"),
        }
    }

    #[test]
    fn hyperbolic_ball_automorphism_restricts_with_reciprocal_dilations() {
        // Restriction to the axis recovers the automorphism; dilations at
        // the two fixed points are reciprocal.
        let f = MapDescription::BallAutomorphism(BallAutomorphism::disc_hyperbolic(0.6).unwrap());
        let p = BoundaryPoint::e1(1);
        let q = p.antipode();
        let res = restrict_to_geodesic(&f, &p, &q, 12).unwrap();
        let (fixed, lambda) = res.hyperbolic.unwrap();
        assert!((fixed - c(1.0, 0.0)).norm() < 1e-8);
        let expect = (1.0 - 0.6) / (1.0 + 0.6);
        assert!((lambda - expect).abs() < 1e-10);
        let other = res.mobius.derivative(c(-1.0, 0.0)).norm();
        assert!((lambda * other - 1.0).abs() < 1e-9, "dilations not reciprocal");
    }
}
