//! Computational holomorphic dynamics on the unit ball `B^q` and the Siegel
//! upper half-space `H^q`.
//!
//! The crate classifies holomorphic self-maps (elliptic / hyperbolic /
//! parabolic), estimates divergence rates, multi-index steps and types of
//! commuting families, constructs exact canonical hyperbolic semi-models for
//! commuting hyperbolic automorphisms and for an explicit polynomial family
//! on the Siegel domain, and exposes the commutation-obstruction rules as a
//! decision procedure.
//!
//! Modules mirror the pipeline:
//! - [`geometry`]: Kobayashi distance/metric on `B^q` and `H^q`, Cayley
//!   transform, Koranyi regions, Kobayashi-ball sampling.
//! - [`maps`]: the supported self-map classes, evaluation, Jacobians,
//!   composition algebra, multi-index iteration and commutation certificates.
//! - [`dynamics`]: orbit-based estimators (Denjoy-Wolff point, dilation,
//!   divergence rate, M-step, geodesic restriction).
//! - [`semimodel`]: limit pseudodistance / pullback metric functionals, type
//!   estimation, exact semi-model constructions and induced base maps.
//! - [`obstruction`]: the hyperbolic-vs-parabolic commutation rule engine and
//!   the counterexample generator.
//! - [`report`]: JSON schemas shared by the CLI and the Python bindings.
//! - [`verify`]: seeded, reproducible property suites behind `balldyn verify`.

pub mod dynamics;
pub mod geometry;
pub mod maps;
pub mod obstruction;
pub mod report;
pub mod semimodel;
pub mod verify;

pub use dynamics::{Classification, ClassifyParams, EstimatorParams, LimitEstimate};
pub use geometry::{
    BallPoint, BoundaryPoint, DomainPoint, HermitianForm, MetricConvention, SiegelPoint,
};
pub use maps::{CommutingFamily, MapDescription, MultiIndex};
pub use obstruction::PairVerdict;
pub use semimodel::SemiModel;
