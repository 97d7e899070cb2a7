//! Deterministic sampling of Kobayashi balls `B(p, r)`.

use super::ball::BallPoint;
use super::cayley::{cayley, cayley_inverse};
use super::mobius::BallInvolution;
use super::{DomainPoint, GeometryError, MetricConvention, C64};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Seeded sample of `count` points inside the Kobayashi ball of radius `r`
/// around `center`.
///
/// Sampling happens in the Mobius chart at the center: `B(center, r)` is the
/// image under `phi_center` of the Euclidean ball of radius
/// `tanh(r / scale)`, which is rejection-sampled from its bounding cube.
pub fn kobayashi_ball_sample(
    center: &DomainPoint,
    r: f64,
    count: usize,
    seed: u64,
    conv: &MetricConvention,
) -> Result<Vec<DomainPoint>, GeometryError> {
    if !(r > 0.0) || count == 0 {
        return Err(GeometryError::BadSampleRequest);
    }
    let center_ball = center.to_ball();
    let q = center_ball.dim();
    let radius = (r / conv.scale()).tanh();
    let phi = BallInvolution::new(center_ball.coords().to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coords: Vec<C64> = (0..q)
            .map(|_| {
                C64::new(
                    rng.gen_range(-radius..radius),
                    rng.gen_range(-radius..radius),
                )
            })
            .collect();
        let norm_sq: f64 = coords.iter().map(|c| c.norm_sqr()).sum();
        if norm_sq >= radius * radius {
            continue;
        }
        // phi_center swaps 0 and the center, so the chart point u maps to a
        // point at Kobayashi distance scale * arctanh |u| < r from center.
        let point = phi.apply(&BallPoint::with_gap(coords, 1.0 - norm_sq));
        out.push(match center {
            DomainPoint::Ball(_) => DomainPoint::Ball(point),
            DomainPoint::Siegel(_) => DomainPoint::Siegel(cayley(&point)),
        });
    }
    Ok(out)
}

/// Ball point sampled uniformly-in-chart from `B(center, r)`; single-draw
/// helper used by estimators that need one point per seed stream.
pub fn sample_one(
    center: &DomainPoint,
    r: f64,
    rng: &mut ChaCha8Rng,
    conv: &MetricConvention,
) -> Result<DomainPoint, GeometryError> {
    let center_ball = match center {
        DomainPoint::Ball(p) => p.clone(),
        DomainPoint::Siegel(s) => cayley_inverse(s),
    };
    let q = center_ball.dim();
    let radius = (r / conv.scale()).tanh();
    let phi = BallInvolution::new(center_ball.coords().to_vec())?;
    loop {
        let coords: Vec<C64> = (0..q)
            .map(|_| {
                C64::new(
                    rng.gen_range(-radius..radius),
                    rng.gen_range(-radius..radius),
                )
            })
            .collect();
        let norm_sq: f64 = coords.iter().map(|c| c.norm_sqr()).sum();
        if norm_sq >= radius * radius {
            continue;
        }
        let point = phi.apply(&BallPoint::with_gap(coords, 1.0 - norm_sq));
        return Ok(match center {
            DomainPoint::Ball(_) => DomainPoint::Ball(point),
            DomainPoint::Siegel(_) => DomainPoint::Siegel(cayley(&point)),
        });
    }
}
