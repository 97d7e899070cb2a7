//! Decision procedures for the commutation obstructions between hyperbolic
//! and parabolic self-maps, and the counterexample generator covering every
//! type combination the obstructions leave open.

use crate::dynamics::{denjoy_wolff, restrict_to_geodesic, ClassKind, ClassifyParams};
use crate::geometry::{BoundaryPoint, DomainPoint};
use crate::maps::{Certificate, CommutingFamily, MapDescription, MapsError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObstructionError {
    #[error(transparent)]
    Maps(#[from] MapsError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// Ellipticity class of one map, as consumed by the rule engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapKind {
    Elliptic,
    Hyperbolic,
    Parabolic,
}

/// Whether a positive step `s_1(x_0) > 0` is known for the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepSign {
    Positive,
    Zero,
    Unknown,
}

/// Classification summary of one map: its kind, its type (semi-model base
/// dimension) when known, the ambient dimension, and the step sign.
#[derive(Debug, Clone)]
pub struct MapProfile {
    pub kind: MapKind,
    pub type_dim: Option<usize>,
    pub ambient: usize,
    pub step: StepSign,
}

impl MapProfile {
    pub fn new(kind: MapKind, type_dim: Option<usize>, ambient: usize, step: StepSign) -> Self {
        Self {
            kind,
            type_dim,
            ambient,
            step,
        }
    }
}

/// The obstruction rule that a hypothetical commuting pair would violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstructionRule {
    /// A hyperbolic map of automorphism type (type = ambient dimension)
    /// commutes with no parabolic map.
    HyperbolicAutomorphismType,
    /// A parabolic map of type 0 commutes with no hyperbolic map.
    ParabolicTypeZero,
    /// A parabolic map of type 1 with positive step commutes with no
    /// hyperbolic map.
    ParabolicTypeOnePositiveStep,
}

/// Verdict of the pair rule engine.
#[derive(Debug, Clone)]
pub enum PairVerdict {
    Consistent,
    Inconsistent {
        rule: ObstructionRule,
        detail: String,
    },
    Unknown {
        reason: String,
    },
}

enum ClauseState {
    Fires(ObstructionRule, String),
    CannotFire,
    Undecidable(String),
}

fn clauses_for(h: &MapProfile, p: &MapProfile, h_name: &str, p_name: &str) -> Vec<ClauseState> {
    if h.kind != MapKind::Hyperbolic || p.kind != MapKind::Parabolic {
        return vec![ClauseState::CannotFire];
    }
    let mut out = Vec::new();
    // Clause: hyperbolic of automorphism type.
    out.push(match h.type_dim {
        Some(t) if t == h.ambient => ClauseState::Fires(
            ObstructionRule::HyperbolicAutomorphismType,
            format!(
                "{h_name} is hyperbolic of automorphism type {t} = ambient dimension, \
                 so {p_name} cannot be parabolic"
            ),
        ),
        Some(_) => ClauseState::CannotFire,
        None => ClauseState::Undecidable(format!("type of hyperbolic {h_name} unknown")),
    });
    // Clause: parabolic of type 0.
    out.push(match p.type_dim {
        Some(0) => ClauseState::Fires(
            ObstructionRule::ParabolicTypeZero,
            format!("{p_name} is parabolic of type 0, so it commutes with no hyperbolic map"),
        ),
        Some(_) => ClauseState::CannotFire,
        None => ClauseState::Undecidable(format!("type of parabolic {p_name} unknown")),
    });
    // Clause: parabolic of type 1 with positive step. A type-1 parabolic
    // with zero or unknown step is the open case and never decides.
    out.push(match p.type_dim {
        Some(1) => match p.step {
            StepSign::Positive => ClauseState::Fires(
                ObstructionRule::ParabolicTypeOnePositiveStep,
                format!(
                    "{p_name} is parabolic of type 1 with positive step, \
                     so it commutes with no hyperbolic map"
                ),
            ),
            StepSign::Zero | StepSign::Unknown => ClauseState::Undecidable(format!(
                "{p_name} is parabolic of type 1 with step not known positive; \
                 whether such a map can commute with a hyperbolic one is open"
            )),
        },
        Some(_) => ClauseState::CannotFire,
        None => ClauseState::Undecidable(format!("type of parabolic {p_name} unknown")),
    });
    out
}

/// Rule engine for a commuting pair of non-elliptic maps: flags the pair as
/// `Inconsistent` when the classified data contradict one of the
/// obstruction rules, `Consistent` when no rule can fire, `Unknown` when
/// missing data (or the open type-1 zero-step question) blocks the verdict.
pub fn check_pair(f: &MapProfile, g: &MapProfile) -> PairVerdict {
    if f.kind == MapKind::Elliptic || g.kind == MapKind::Elliptic {
        return PairVerdict::Unknown {
            reason: "elliptic members are outside the scope of the pair rules".into(),
        };
    }
    let mut undecided: Option<String> = None;
    let mut states = clauses_for(f, g, "f", "g");
    states.extend(clauses_for(g, f, "g", "f"));
    for state in states {
        match state {
            ClauseState::Fires(rule, detail) => {
                return PairVerdict::Inconsistent { rule, detail };
            }
            ClauseState::Undecidable(reason) => {
                undecided.get_or_insert(reason);
            }
            ClauseState::CannotFire => {}
        }
    }
    match undecided {
        Some(reason) => PairVerdict::Unknown { reason },
        None => PairVerdict::Consistent,
    }
}

/// The commuting pair `(f, g)` on `H^m` with `f` hyperbolic of type `u` and
/// `g` parabolic of type `v`; exists exactly for `1 <= u <= m-1`,
/// `2 <= v <= m`, covering every case the obstruction rules allow.
pub fn counterexample(
    m: usize,
    u: usize,
    v: usize,
    r: f64,
) -> Result<CommutingFamily, ObstructionError> {
    if m < 2 || u < 1 || u > m - 1 {
        return Err(ObstructionError::InvalidParameters(format!(
            "hyperbolic type must satisfy 1 <= u <= m-1, got u={u}, m={m}"
        )));
    }
    if v < 2 || v > m {
        return Err(ObstructionError::InvalidParameters(format!(
            "parabolic type must satisfy 2 <= v <= m, got v={v}, m={m}"
        )));
    }
    let f = MapDescription::example_hyperbolic(m, u)?;
    let g = MapDescription::example_parabolic(m, v, r)?;
    let family = CommutingFamily::verify(
        vec![f, g],
        4,
        1e-9,
        0,
        &crate::geometry::MetricConvention::default(),
    )?;
    debug_assert_eq!(family.certificate(), Certificate::Exact);
    Ok(family)
}

/// Result of the common-Denjoy-Wolff-point consistency check.
#[derive(Debug, Clone)]
pub enum CommonDwVerdict {
    /// All members share one Denjoy-Wolff point.
    SinglePoint { dw: BoundaryPoint },
    /// All-hyperbolic family with exactly two Denjoy-Wolff points; each
    /// member restricts to a hyperbolic automorphism of the connecting
    /// geodesic, with the reported dilations.
    TwoPoints {
        p: BoundaryPoint,
        p_prime: BoundaryPoint,
        dilations: Vec<f64>,
    },
    /// The family data contradict the dichotomy.
    Inconsistent { detail: String },
    Unknown { reason: String },
}

/// Verifies the Denjoy-Wolff dichotomy for a commuting family of
/// non-elliptic maps: a parabolic member forces a single common point; an
/// all-hyperbolic family has at most two, and with two every member must
/// restrict to a hyperbolic automorphism of the connecting slice.
pub fn common_dw_check(
    family: &CommutingFamily,
    x: &DomainPoint,
    params: &ClassifyParams,
) -> Result<CommonDwVerdict, ObstructionError> {
    let chordal_tol = 1e-6;
    let mut kinds = Vec::new();
    let mut dws = Vec::new();
    for map in family.maps() {
        let cls = denjoy_wolff(map, x, params)?;
        match cls.kind {
            ClassKind::Hyperbolic { dw, .. } => {
                kinds.push(MapKind::Hyperbolic);
                dws.push(dw);
            }
            ClassKind::Parabolic { dw, .. } => {
                kinds.push(MapKind::Parabolic);
                dws.push(dw);
            }
            ClassKind::Elliptic { .. } => {
                return Ok(CommonDwVerdict::Unknown {
                    reason: "family contains an elliptic member".into(),
                });
            }
            ClassKind::Unknown { reason } => {
                return Ok(CommonDwVerdict::Unknown {
                    reason: format!("member classification failed: {reason}"),
                });
            }
        }
    }
    // Cluster the Denjoy-Wolff points.
    let mut clusters: Vec<(BoundaryPoint, Vec<usize>)> = Vec::new();
    for (i, dw) in dws.iter().enumerate() {
        match clusters
            .iter_mut()
            .find(|(rep, _)| rep.chordal(dw) < chordal_tol)
        {
            Some((_, members)) => members.push(i),
            None => clusters.push((dw.clone(), vec![i])),
        }
    }
    let any_parabolic = kinds.contains(&MapKind::Parabolic);
    match clusters.len() {
        1 => Ok(CommonDwVerdict::SinglePoint {
            dw: clusters[0].0.clone(),
        }),
        2 if !any_parabolic => {
            let p = clusters[0].0.clone();
            let p_prime = clusters[1].0.clone();
            let mut dilations = Vec::with_capacity(family.len());
            for (i, map) in family.maps().iter().enumerate() {
                match restrict_to_geodesic(map, &p, &p_prime, 12) {
                    Ok(res) if res.is_automorphism => match res.hyperbolic {
                        Some((_, lambda)) => dilations.push(lambda),
                        None => {
                            return Ok(CommonDwVerdict::Inconsistent {
                                detail: format!(
                                    "member {i} restricts to a non-hyperbolic automorphism \
                                     of the connecting slice"
                                ),
                            })
                        }
                    },
                    Ok(_) => {
                        return Ok(CommonDwVerdict::Inconsistent {
                            detail: format!(
                                "member {i} does not restrict to an automorphism of the slice"
                            ),
                        })
                    }
                    Err(e) => {
                        return Ok(CommonDwVerdict::Inconsistent {
                            detail: format!("member {i} does not preserve the slice: {e}"),
                        })
                    }
                }
            }
            Ok(CommonDwVerdict::TwoPoints {
                p,
                p_prime,
                dilations,
            })
        }
        2 => Ok(CommonDwVerdict::Inconsistent {
            detail: "a parabolic member forces a single common Denjoy-Wolff point, \
                     but two were found"
                .into(),
        }),
        n => Ok(CommonDwVerdict::Inconsistent {
            detail: format!("found {n} distinct Denjoy-Wolff points, the dichotomy allows 2"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{C64, SiegelPoint};
    use crate::maps::BallAutomorphism;

    fn profile(
        kind: MapKind,
        type_dim: Option<usize>,
        ambient: usize,
        step: StepSign,
    ) -> MapProfile {
        MapProfile::new(kind, type_dim, ambient, step)
    }

    #[test]
    fn automorphism_type_blocks_parabolic() {
        let f = profile(MapKind::Hyperbolic, Some(3), 3, StepSign::Unknown);
        let g = profile(MapKind::Parabolic, Some(2), 3, StepSign::Positive);
        match check_pair(&f, &g) {
            PairVerdict::Inconsistent { rule, .. } => {
                assert_eq!(rule, ObstructionRule::HyperbolicAutomorphismType);
            }
            other => panic!("expected inconsistent, got {other:?}"),
        }
    }

    #[test]
    fn parabolic_type_zero_blocks_hyperbolic_in_either_order() {
        let f = profile(MapKind::Parabolic, Some(0), 4, StepSign::Unknown);
        let g = profile(MapKind::Hyperbolic, Some(2), 4, StepSign::Unknown);
        match check_pair(&f, &g) {
            PairVerdict::Inconsistent { rule, .. } => {
                assert_eq!(rule, ObstructionRule::ParabolicTypeZero);
            }
            other => panic!("expected inconsistent, got {other:?}"),
        }
    }

    #[test]
    fn type_one_with_positive_step_blocks_hyperbolic() {
        let f = profile(MapKind::Hyperbolic, Some(1), 4, StepSign::Unknown);
        let g = profile(MapKind::Parabolic, Some(1), 4, StepSign::Positive);
        match check_pair(&f, &g) {
            PairVerdict::Inconsistent { rule, .. } => {
                assert_eq!(rule, ObstructionRule::ParabolicTypeOnePositiveStep);
            }
            other => panic!("expected inconsistent, got {other:?}"),
        }
    }

    #[test]
    fn type_one_with_zero_or_unknown_step_is_open() {
        let f = profile(MapKind::Hyperbolic, Some(1), 4, StepSign::Unknown);
        for step in [StepSign::Zero, StepSign::Unknown] {
            let g = profile(MapKind::Parabolic, Some(1), 4, step);
            assert!(
                matches!(check_pair(&f, &g), PairVerdict::Unknown { .. }),
                "step {step:?} must stay open"
            );
        }
    }

    #[test]
    fn intermediate_types_are_consistent() {
        // Hyperbolic type u < q with parabolic type v >= 2: counterexamples
        // exist, so the verdict is consistent.
        let f = profile(MapKind::Hyperbolic, Some(2), 4, StepSign::Unknown);
        let g = profile(MapKind::Parabolic, Some(3), 4, StepSign::Positive);
        assert!(matches!(check_pair(&f, &g), PairVerdict::Consistent));
    }

    #[test]
    fn parabolic_pair_is_consistent() {
        let f = profile(MapKind::Parabolic, Some(2), 3, StepSign::Positive);
        let g = profile(MapKind::Parabolic, Some(0), 3, StepSign::Zero);
        assert!(matches!(check_pair(&f, &g), PairVerdict::Consistent));
    }

    #[test]
    fn elliptic_inputs_degrade_to_unknown() {
        let f = profile(MapKind::Elliptic, None, 2, StepSign::Unknown);
        let g = profile(MapKind::Parabolic, Some(1), 2, StepSign::Positive);
        assert!(matches!(check_pair(&f, &g), PairVerdict::Unknown { .. }));
    }

    #[test]
    fn missing_type_data_degrades_to_unknown() {
        let f = profile(MapKind::Hyperbolic, None, 3, StepSign::Unknown);
        let g = profile(MapKind::Parabolic, Some(2), 3, StepSign::Unknown);
        assert!(matches!(check_pair(&f, &g), PairVerdict::Unknown { .. }));
    }

    #[test]
    fn generator_validates_parameters() {
        assert!(counterexample(4, 2, 3, 1.0).is_ok());
        assert!(counterexample(2, 1, 2, 1.0).is_ok());
        assert!(counterexample(3, 3, 2, 1.0).is_err());
        assert!(counterexample(3, 1, 1, 1.0).is_err());
        assert!(counterexample(3, 1, 2, 0.0).is_err());
    }

    #[test]
    fn generator_output_commutes_exactly() {
        let fam = counterexample(5, 3, 4, 1.5).unwrap();
        assert_eq!(fam.certificate(), Certificate::Exact);
        assert_eq!(fam.len(), 2);
    }

    #[test]
    fn example_family_has_common_dw_point() {
        let fam = counterexample(3, 1, 2, 1.0).unwrap();
        let x = DomainPoint::Siegel(
            SiegelPoint::new(
                C64::new(0.2, 2.0),
                vec![C64::new(0.1, 0.1), C64::new(0.0, 0.2)],
            )
            .unwrap(),
        );
        match common_dw_check(&fam, &x, &ClassifyParams::default()).unwrap() {
            CommonDwVerdict::SinglePoint { dw } => {
                assert!((dw.coords()[0] - C64::new(1.0, 0.0)).norm() < 1e-4);
            }
            other => panic!("expected a single common point, got {other:?}"),
        }
    }

    #[test]
    fn opposite_disc_automorphisms_give_two_points() {
        // gamma and its inverse commute, with Denjoy-Wolff points 1 and -1.
        let g = BallAutomorphism::disc_hyperbolic(0.5).unwrap();
        let ginv = g.inverse();
        let fam = CommutingFamily::verify(
            vec![
                MapDescription::BallAutomorphism(g),
                MapDescription::BallAutomorphism(ginv),
            ],
            16,
            1e-9,
            0,
            &crate::geometry::MetricConvention::default(),
        )
        .unwrap();
        let x = DomainPoint::Ball(crate::geometry::BallPoint::origin(1));
        match common_dw_check(&fam, &x, &ClassifyParams::default()).unwrap() {
            CommonDwVerdict::TwoPoints { dilations, .. } => {
                assert_eq!(dilations.len(), 2);
                for d in dilations {
                    assert!((d - 1.0 / 3.0).abs() < 1e-8, "dilation {d}");
                }
            }
            other => panic!("expected the two-point case, got {other:?}"),
        }
    }

    #[test]
    fn single_member_family_is_trivially_consistent() {
        let fam = CommutingFamily::with_certificate(
            vec![MapDescription::example_parabolic(2, 2, 1.0).unwrap()],
            Certificate::Exact,
        );
        let x = DomainPoint::Siegel(SiegelPoint::base(2));
        match common_dw_check(&fam, &x, &ClassifyParams::default()).unwrap() {
            CommonDwVerdict::SinglePoint { .. } => {}
            other => panic!("expected single point, got {other:?}"),
        }
    }
}
