//! Hyperbolic geometry of the unit ball `B^q` and the Siegel upper
//! half-space `H^q`: Kobayashi distance and infinitesimal metric in closed
//! form, the Cayley transform between the two realizations, Koranyi
//! approach regions and seeded sampling of Kobayashi balls.
//!
//! Points near the boundary are the norm here, so every quantity of the
//! form `1 - |z|^2` flows through dedicated cancellation-free expressions:
//! [`BallPoint`] caches its boundary gap, and [`SiegelPoint`] carries a
//! power-of-two scale exponent so that orbits escaping to infinity stay
//! representable.

mod ball;
mod cayley;
mod disc;
mod form;
mod mobius;
mod sample;
mod siegel;
mod slice;

pub use ball::{
    in_koranyi_region, kobayashi_distance_ball, kobayashi_metric_form_ball, BallPoint,
    BoundaryPoint,
};
pub use cayley::{cayley, cayley_boundary, cayley_inverse, CayleyImage};
pub(crate) use cayley::cayley_jacobian;
pub(crate) use siegel::cayley_inverse_jacobian;
pub use disc::MobiusMap;
pub use form::HermitianForm;
pub use mobius::BallInvolution;
pub use sample::kobayashi_ball_sample;
pub use siegel::{kobayashi_distance_siegel, siegel_metric_form, SiegelPoint};
pub use slice::GeodesicSlice;

use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout.
pub type C64 = Complex64;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point lies outside the open unit ball (squared norm {norm_sq})")]
    NotInBall { norm_sq: f64 },
    #[error("point lies outside the Siegel half-space (defect {defect})")]
    NotInSiegel { defect: f64 },
    #[error("cannot normalize a zero vector to the unit sphere")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Koranyi amplitude must be greater than 1, got {0}")]
    BadAmplitude(f64),
    #[error("metric scale must be positive, got {0}")]
    BadScale(f64),
    #[error("matrix is not Hermitian (asymmetry {0})")]
    NotHermitian(f64),
    #[error("form is not positive semi-definite (eigenvalue {0})")]
    NotPositive(f64),
    #[error("boundary input where an interior point is required")]
    BoundaryInput,
    #[error("sample count and radius must be positive")]
    BadSampleRequest,
    #[error("geodesic slice requires two distinct boundary points")]
    DegenerateSlice,
}

/// Normalization of the Kobayashi distance/metric.
///
/// With `scale = 2` (the default) the distance on the disc is
/// `k(0, r) = log((1+r)/(1-r))` and the divergence rate of a hyperbolic map
/// with dilation `lambda` is `-log lambda`. With `scale = 1` the distance is
/// the pure `arctanh` normalization and the divergence rate becomes
/// `-(1/2) log lambda`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConvention {
    scale: f64,
}

impl MetricConvention {
    pub fn new(scale: f64) -> Result<Self, GeometryError> {
        if !(scale > 0.0) {
            return Err(GeometryError::BadScale(scale));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Dilation at the Denjoy-Wolff point from a divergence rate under this
    /// convention: `lambda = exp(-2 c / scale)`.
    pub fn lambda_from_rate(&self, c: f64) -> f64 {
        (-2.0 * c / self.scale).exp()
    }

    /// Divergence rate of a non-elliptic map with dilation `lambda`.
    pub fn rate_from_lambda(&self, lambda: f64) -> f64 {
        -0.5 * self.scale * lambda.ln()
    }
}

impl Default for MetricConvention {
    fn default() -> Self {
        Self { scale: 2.0 }
    }
}

/// A point of either domain realization.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainPoint {
    Ball(BallPoint),
    Siegel(SiegelPoint),
}

/// Domain tag for self-maps and points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// Unit ball of the given complex dimension.
    Ball(usize),
    /// Siegel upper half-space of the given complex dimension.
    Siegel(usize),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball(q) | Domain::Siegel(q) => *q,
        }
    }
}

impl DomainPoint {
    pub fn domain(&self) -> Domain {
        match self {
            DomainPoint::Ball(p) => Domain::Ball(p.dim()),
            DomainPoint::Siegel(s) => Domain::Siegel(s.dim()),
        }
    }

    pub fn dim(&self) -> usize {
        self.domain().dim()
    }

    /// Kobayashi distance between two points of the same realization.
    pub fn distance(
        &self,
        other: &DomainPoint,
        conv: &MetricConvention,
    ) -> Result<f64, GeometryError> {
        match (self, other) {
            (DomainPoint::Ball(a), DomainPoint::Ball(b)) => kobayashi_distance_ball(a, b, conv),
            (DomainPoint::Siegel(a), DomainPoint::Siegel(b)) => {
                kobayashi_distance_siegel(a, b, conv)
            }
            _ => Err(GeometryError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            }),
        }
    }

    /// Boundary gap `1 - |z|^2` of the ball realization of the point,
    /// computed without catastrophic cancellation.
    pub fn boundary_gap(&self) -> f64 {
        match self {
            DomainPoint::Ball(p) => p.boundary_gap(),
            DomainPoint::Siegel(s) => s.ball_gap(),
        }
    }

    /// View in ball coordinates (Cayley transform when needed).
    pub fn to_ball(&self) -> BallPoint {
        match self {
            DomainPoint::Ball(p) => p.clone(),
            DomainPoint::Siegel(s) => cayley_inverse(s),
        }
    }
}

impl From<BallPoint> for DomainPoint {
    fn from(p: BallPoint) -> Self {
        DomainPoint::Ball(p)
    }
}

impl From<SiegelPoint> for DomainPoint {
    fn from(s: SiegelPoint) -> Self {
        DomainPoint::Siegel(s)
    }
}
