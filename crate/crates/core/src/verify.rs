//! Seeded, reproducible property suites behind `balldyn verify`: each suite
//! runs a fixed list of named checks and reports one pass/fail line per
//! check. Identical seeds give byte-identical reports.

use crate::dynamics::{
    denjoy_wolff, divergence_rate, step, ClassKind, ClassifyParams, EstimatorParams,
};
use crate::geometry::{
    cayley, in_koranyi_region, kobayashi_ball_sample, kobayashi_distance_ball,
    kobayashi_distance_siegel, kobayashi_metric_form_ball, BallPoint, BoundaryPoint, C64,
    DomainPoint, MetricConvention,
};
use crate::maps::{
    BallAutomorphism, Certificate, CommutingFamily, MapDescription, MultiIndex,
};
use crate::obstruction::{
    check_pair, common_dw_check, counterexample, CommonDwVerdict, MapKind, MapProfile, PairVerdict,
    StepSign,
};
use crate::semimodel::{
    csm_commuting_hyperbolic_automorphisms, csm_example_family, gamma_induced,
    limit_pseudodistance, limit_pullback_form, type_estimate, NormalFormAutomorphism,
    TypeEstimateParams,
};
use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

pub const SUITES: [&str; 5] = ["distances", "steps", "divrate", "csm", "obstructions"];

pub fn run_suite(name: &str, seed: u64, conv: &MetricConvention) -> Option<SuiteReport> {
    let checks = match name {
        "distances" => distances_suite(seed, conv),
        "steps" => steps_suite(seed, conv),
        "divrate" => divrate_suite(seed, conv),
        "csm" => csm_suite(seed, conv),
        "obstructions" => obstructions_suite(seed, conv),
        _ => return None,
    };
    let passed = checks.iter().all(|c| c.pass);
    Some(SuiteReport {
        suite: name.to_string(),
        checks,
        passed,
    })
}

fn check(name: &str, pass: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        pass,
        detail,
    }
}

fn random_ball_point(rng: &mut ChaCha8Rng, q: usize, radius: f64) -> BallPoint {
    let r = radius / (q as f64).sqrt();
    loop {
        let coords: Vec<C64> = (0..q)
            .map(|_| C64::new(rng.gen_range(-r..r), rng.gen_range(-r..r)))
            .collect();
        if let Ok(p) = BallPoint::new(coords) {
            return p;
        }
    }
}

fn random_unitary(rng: &mut ChaCha8Rng, q: usize) -> DMatrix<C64> {
    let mut cols: Vec<nalgebra::DVector<C64>> = Vec::new();
    for _ in 0..q {
        let mut v = nalgebra::DVector::from_iterator(
            q,
            (0..q).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))),
        );
        for prev in &cols {
            let proj = prev.dotc(&v);
            v -= prev * proj;
        }
        let n = v.norm();
        cols.push(v / C64::new(n, 0.0));
    }
    DMatrix::from_columns(&cols)
}

fn random_automorphism(rng: &mut ChaCha8Rng, q: usize) -> BallAutomorphism {
    let center = random_ball_point(rng, q, 0.5);
    BallAutomorphism::new(random_unitary(rng, q), center.coords().to_vec()).unwrap()
}

fn distances_suite(seed: u64, conv: &MetricConvention) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // Symmetry on 1000 random pairs.
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let q = rng.gen_range(1..=3);
        let a = random_ball_point(&mut rng, q, 0.9);
        let b = random_ball_point(&mut rng, q, 0.9);
        let ab = kobayashi_distance_ball(&a, &b, conv).unwrap();
        let ba = kobayashi_distance_ball(&b, &a, conv).unwrap();
        worst = worst.max((ab - ba).abs());
    }
    checks.push(check(
        "distance_symmetry",
        worst < 1e-12,
        format!("max |k(a,b) - k(b,a)| = {worst:.3e} over 1000 pairs"),
    ));

    // Triangle inequality on 1000 random triples.
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let q = rng.gen_range(1..=3);
        let a = random_ball_point(&mut rng, q, 0.9);
        let b = random_ball_point(&mut rng, q, 0.9);
        let c = random_ball_point(&mut rng, q, 0.9);
        let ac = kobayashi_distance_ball(&a, &c, conv).unwrap();
        let ab = kobayashi_distance_ball(&a, &b, conv).unwrap();
        let bc = kobayashi_distance_ball(&b, &c, conv).unwrap();
        worst = worst.max(ac - ab - bc);
    }
    checks.push(check(
        "triangle_inequality",
        worst < 1e-10,
        format!("max k(a,c) - k(a,b) - k(b,c) = {worst:.3e} over 1000 triples"),
    ));

    // Automorphism invariance.
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let q = rng.gen_range(1..=3);
        let g = random_automorphism(&mut rng, q);
        let a = random_ball_point(&mut rng, q, 0.8);
        let b = random_ball_point(&mut rng, q, 0.8);
        let before = kobayashi_distance_ball(&a, &b, conv).unwrap();
        let after =
            kobayashi_distance_ball(&g.eval(&a).unwrap(), &g.eval(&b).unwrap(), conv).unwrap();
        worst = worst.max((before - after).abs());
    }
    checks.push(check(
        "automorphism_invariance",
        worst < 1e-9,
        format!("max |k(ga,gb) - k(a,b)| = {worst:.3e} over 200 pairs"),
    ));

    // Cayley isometry.
    let mut worst = 0.0_f64;
    for _ in 0..200 {
        let q = rng.gen_range(1..=3);
        let a = random_ball_point(&mut rng, q, 0.8);
        let b = random_ball_point(&mut rng, q, 0.8);
        let kb = kobayashi_distance_ball(&a, &b, conv).unwrap();
        let ks = kobayashi_distance_siegel(&cayley(&a), &cayley(&b), conv).unwrap();
        worst = worst.max((kb - ks).abs());
    }
    checks.push(check(
        "cayley_isometry",
        worst < 1e-9,
        format!("max |k_ball - k_siegel| = {worst:.3e} over 200 pairs"),
    ));

    // Metric/distance consistency by finite differences.
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let q = rng.gen_range(1..=3);
        let a = random_ball_point(&mut rng, q, 0.6);
        let v: Vec<C64> = (0..q)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let h = kobayashi_metric_form_ball(&a, conv).unwrap();
        let kappa = h.evaluate(&v).sqrt();
        let t = 1e-6;
        let shifted = BallPoint::new(
            a.coords()
                .iter()
                .zip(&v)
                .map(|(z, dv)| z + dv * t)
                .collect(),
        )
        .unwrap();
        let quot = kobayashi_distance_ball(&a, &shifted, conv).unwrap() / t;
        worst = worst.max((quot - kappa).abs());
    }
    checks.push(check(
        "metric_distance_consistency",
        worst < 1e-4,
        format!("max |k(a, a+tv)/t - kappa(a;v)| = {worst:.3e} at t = 1e-6"),
    ));

    // Kobayashi ball sampling respects its defining predicate.
    let center = DomainPoint::Ball(random_ball_point(&mut rng, 2, 0.5));
    let samples = kobayashi_ball_sample(&center, 1.2, 128, seed, conv).unwrap();
    let max_d = samples
        .iter()
        .map(|s| s.distance(&center, conv).unwrap())
        .fold(0.0_f64, f64::max);
    checks.push(check(
        "kobayashi_ball_sampling",
        max_d < 1.2,
        format!("max sampled distance {max_d:.6} < radius 1.2"),
    ));

    // Koranyi region: radial points are inside, tangential ones leave.
    let vertex = BoundaryPoint::e1(1);
    let radial = BallPoint::new(vec![C64::new(0.95, 0.0)]).unwrap();
    let inside = in_koranyi_region(&radial, &vertex, 1.5).unwrap();
    let n = 4096.0_f64;
    let tangential =
        BallPoint::new(vec![C64::from_polar(1.0 - 1.0 / n, 1.0 / n.sqrt())]).unwrap();
    let outside = !in_koranyi_region(&tangential, &vertex, 10.0).unwrap();
    checks.push(check(
        "koranyi_membership",
        inside && outside,
        format!("radial in: {inside}, tangential out: {outside}"),
    ));

    checks
}

fn steps_suite(seed: u64, conv: &MetricConvention) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let params = EstimatorParams {
        convention: *conv,
        ..EstimatorParams::default()
    };

    // Monotone non-increasing step sequences for the example pair.
    let fam = counterexample(3, 1, 2, 1.0).unwrap();
    let x = DomainPoint::Siegel(
        crate::geometry::SiegelPoint::new(
            C64::new(0.2, 2.0),
            vec![C64::new(0.3, 0.1), C64::new(0.1, 0.2)],
        )
        .unwrap(),
    );
    let diag = fam.diagonal_step();
    let index = MultiIndex::new(vec![1, 1]);
    let mut y = x.clone();
    let mut z = fam.iterate_multiindex(&index, &x).unwrap();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let mut worst_rise = 0.0_f64;
    for _ in 0..60 {
        let d = y.distance(&z, conv).unwrap();
        if d > prev + 1e-10 {
            monotone = false;
            worst_rise = worst_rise.max(d - prev);
        }
        prev = d;
        y = diag.eval(&y).unwrap();
        z = diag.eval(&z).unwrap();
    }
    checks.push(check(
        "step_sequence_monotone",
        monotone,
        format!("worst rise {worst_rise:.3e} over 60 diagonal steps"),
    ));

    // s^F_M(x) <= k(x, F^M x).
    let mut ok = true;
    let mut detail = String::new();
    for entries in [[1u32, 0], [0, 1], [1, 1], [2, 1]] {
        let index = MultiIndex::new(entries.to_vec());
        let est = step(&fam, &index, &x, &params).unwrap();
        let direct = fam
            .iterate_multiindex(&index, &x)
            .unwrap()
            .distance(&x, conv)
            .unwrap();
        if est.value > direct + 1e-9 {
            ok = false;
            detail = format!("index {entries:?}: step {} > k {direct}", est.value);
        }
    }
    checks.push(check(
        "step_below_initial_distance",
        ok,
        if detail.is_empty() {
            "s_M(x) <= k(x, F^M x) for all tested indices".into()
        } else {
            detail
        },
    ));

    // Isometry family: step is exactly the displacement.
    let a = rng.gen_range(0.3..0.7);
    let g = BallAutomorphism::disc_hyperbolic(a).unwrap();
    let xb = DomainPoint::Ball(random_ball_point(&mut rng, 1, 0.6));
    let gfam = CommutingFamily::with_certificate(
        vec![MapDescription::BallAutomorphism(g.clone())],
        Certificate::Exact,
    );
    let est = step(&gfam, &MultiIndex::unit(0, 1), &xb, &params).unwrap();
    let expect = MapDescription::BallAutomorphism(g)
        .eval(&xb)
        .unwrap()
        .distance(&xb, conv)
        .unwrap();
    checks.push(check(
        "isometry_step_is_displacement",
        (est.value - expect).abs() < 1e-10,
        format!("step {} vs displacement {expect}", est.value),
    ));

    // limit_pseudodistance is dominated by the distance.
    let y2 = DomainPoint::Siegel(
        crate::geometry::SiegelPoint::new(
            C64::new(-0.3, 1.4),
            vec![C64::new(0.0, 0.25), C64::new(0.2, -0.1)],
        )
        .unwrap(),
    );
    let lim = limit_pseudodistance(&fam, &x, &y2, &params).unwrap();
    let k = x.distance(&y2, conv).unwrap();
    checks.push(check(
        "limit_pseudodistance_dominated",
        lim.upper <= k + 1e-12,
        format!("limit upper {} <= k(x,y) = {k}", lim.upper),
    ));

    // Eigenvalue history of the pullback forms is entrywise non-increasing.
    let lim = limit_pullback_form(&fam, &x, &params).unwrap();
    let mut ok = true;
    for pair in lim.eigenvalue_history.windows(2) {
        let scale = pair[0].first().copied().unwrap_or(1.0).max(1e-300);
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            if *b > a + 1e-8 * scale {
                ok = false;
            }
        }
    }
    checks.push(check(
        "pullback_eigenvalues_monotone",
        ok,
        format!(
            "{} history rows, top eigenvalue {:.6e}",
            lim.eigenvalue_history.len(),
            lim.form.eigenvalues().first().copied().unwrap_or(0.0)
        ),
    ));

    checks
}

fn divrate_suite(seed: u64, conv: &MetricConvention) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let params = EstimatorParams {
        convention: *conv,
        ..EstimatorParams::default()
    };

    // Identity has divergence rate 0.
    let id = MapDescription::identity_on(crate::geometry::Domain::Ball(2));
    let x0 = DomainPoint::Ball(random_ball_point(&mut rng, 2, 0.5));
    let est = divergence_rate(&id, &x0, &params).unwrap();
    checks.push(check(
        "identity_rate_zero",
        est.value == 0.0 && est.converged,
        format!("c(id) = {}", est.value),
    ));

    // Disc automorphisms: c = -scale/2 * log lambda to 1e-6.
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        let a = rng.gen_range(0.2..0.8);
        let lambda = (1.0 - a) / (1.0 + a);
        let f = MapDescription::BallAutomorphism(BallAutomorphism::disc_hyperbolic(a).unwrap());
        let x = DomainPoint::Ball(random_ball_point(&mut rng, 1, 0.5));
        let est = divergence_rate(&f, &x, &params).unwrap();
        let expect = conv.rate_from_lambda(lambda);
        worst = worst.max((est.value - expect).abs());
    }
    checks.push(check(
        "disc_automorphism_rate",
        worst < 1e-6,
        format!("max |c + (scale/2) log lambda| = {worst:.3e} over 10 maps"),
    ));

    // Hyperbolic example brackets log 2 by iteration 50.
    let mut ok = true;
    let mut detail = String::new();
    for (m, q) in [(2usize, 1usize), (3, 2), (4, 2)] {
        let f = MapDescription::example_hyperbolic(m, q).unwrap();
        let x = DomainPoint::Siegel(
            crate::geometry::SiegelPoint::new(C64::new(0.2, 2.0), vec![C64::new(0.2, 0.1); m - 1])
                .unwrap(),
        );
        let p50 = EstimatorParams {
            max_iter: 50,
            convention: *conv,
            ..EstimatorParams::default()
        };
        let est = divergence_rate(&f, &x, &p50).unwrap();
        let target = 2.0_f64.ln() * conv.scale() / 2.0;
        if (est.value - target).abs() > 1e-3 || est.lower > target + 1e-9 || est.upper < target - 1e-9
        {
            ok = false;
            detail = format!("(m,q)=({m},{q}): value {} brackets [{}, {}]", est.value, est.lower, est.upper);
        }
    }
    checks.push(check(
        "hyperbolic_example_rate_log2",
        ok,
        if detail.is_empty() {
            "c(f) brackets log 2 within 1e-3 by iteration 50".into()
        } else {
            detail
        },
    ));

    // Homogeneity c(f^n) = n c(f) within combined brackets for n = 2, 3.
    let f = MapDescription::example_hyperbolic(2, 1).unwrap();
    let x = DomainPoint::Siegel(
        crate::geometry::SiegelPoint::new(C64::new(0.0, 1.0), vec![C64::new(0.25, 0.0)]).unwrap(),
    );
    let c1 = divergence_rate(&f, &x, &params).unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for n in [2u32, 3] {
        let cn = divergence_rate(&MapDescription::iterate(f.clone(), n), &x, &params).unwrap();
        let err = (cn.value - n as f64 * c1.value).abs();
        let slack = (cn.upper - cn.lower) + n as f64 * (c1.upper - c1.lower) + 1e-9;
        if err > slack {
            ok = false;
            detail = format!("n = {n}: |c(f^n) - n c(f)| = {err:.3e} > slack {slack:.3e}");
        }
    }
    checks.push(check(
        "rate_homogeneity",
        ok,
        if detail.is_empty() {
            "c(f^n) = n c(f) within combined brackets for n in {2, 3}".into()
        } else {
            detail
        },
    ));

    // Hyperbolic classification: exp(-c) consistent with lambda within 5%.
    let cls_params = ClassifyParams {
        estimator: params.clone(),
        ..ClassifyParams::default()
    };
    let f = MapDescription::example_hyperbolic(3, 1).unwrap();
    let x = DomainPoint::Siegel(
        crate::geometry::SiegelPoint::new(
            C64::new(0.1, 1.5),
            vec![C64::new(0.2, 0.0), C64::new(0.0, 0.1)],
        )
        .unwrap(),
    );
    let cls = denjoy_wolff(&f, &x, &cls_params).unwrap();
    let ok = match cls.kind {
        ClassKind::Hyperbolic {
            lambda,
            lambda_quotient,
            ..
        } => (lambda - lambda_quotient).abs() / lambda.max(lambda_quotient) < 0.05,
        _ => false,
    };
    checks.push(check(
        "dilation_crosscheck",
        ok,
        "rate-based and quotient-based dilations agree within 5%".into(),
    ));

    checks
}

fn csm_suite(seed: u64, conv: &MetricConvention) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    let params = EstimatorParams {
        convention: *conv,
        ..EstimatorParams::default()
    };

    // Exact intertwining residuals for the example family models.
    let mut worst = 0.0_f64;
    for (m, q, p) in [(2usize, 1usize, 2usize), (4, 2, 3), (3, 2, 2)] {
        let models = csm_example_family(m, q, p, 1.0).unwrap();
        let residual = models
            .pair_model
            .intertwining_residual(&models.family, 50, seed, conv)
            .unwrap();
        worst = worst.max(residual);
    }
    checks.push(check(
        "example_family_intertwining",
        worst < 1e-10,
        format!("max residual {worst:.3e} over 3 parameter sets"),
    ));

    // divcomm identity: k_Z(l x, T^M l x) = s^F_M(x).
    let models = csm_example_family(3, 1, 2, 1.0).unwrap();
    let mut worst = 0.0_f64;
    for _ in 0..6 {
        let x = DomainPoint::Siegel(
            crate::geometry::SiegelPoint::new(
                C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(1.0..3.0)),
                vec![
                    C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
                    C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)),
                ],
            )
            .unwrap(),
        );
        let index = MultiIndex::new(vec![rng.gen_range(0..3), rng.gen_range(0..2)]);
        if index.total() == 0 {
            continue;
        }
        let s = step(&models.family, &index, &x, &params).unwrap();
        let lx = models.pair_model.map_point(&x).unwrap();
        let tlx = models.pair_model.auto_multiindex(&index, &lx).unwrap();
        let base_dist = lx.distance(&tlx, conv).unwrap();
        worst = worst.max((base_dist - s.value).abs());
    }
    checks.push(check(
        "divcomm_identity",
        worst < 1e-4,
        format!("max |k_Z(lx, T^M lx) - s_M(x)| = {worst:.3e}"),
    ));

    // disdiv: c(tau_j) = c(f_j) within combined brackets.
    let mut ok = true;
    let mut detail = String::new();
    let x = DomainPoint::Siegel(
        crate::geometry::SiegelPoint::new(
            C64::new(0.2, 2.0),
            vec![C64::new(0.3, 0.0), C64::new(0.1, 0.1)],
        )
        .unwrap(),
    );
    let autos = models.pair_model.auto_maps().unwrap();
    let base_x = models.pair_model.map_point(&x).unwrap();
    for (j, (f, tau)) in models.family.maps().iter().zip(&autos).enumerate() {
        let cf = divergence_rate(f, &x, &params).unwrap();
        let ct = divergence_rate(tau, &base_x, &params).unwrap();
        let err = (cf.value - ct.value).abs();
        let slack = (cf.upper - cf.lower) + (ct.upper - ct.lower) + 1e-6;
        if err > slack {
            ok = false;
            detail = format!("member {j}: |c(tau) - c(f)| = {err:.3e} > slack {slack:.3e}");
        }
    }
    checks.push(check(
        "disdiv_rates_match",
        ok,
        if detail.is_empty() {
            "c(tau_j) = c(f_j) within estimator brackets".into()
        } else {
            detail
        },
    ));

    // Normal-form recovery for conjugated commuting hyperbolic automorphisms.
    let q = 2usize;
    let lambda1 = rng.gen_range(0.3..0.6);
    let phases1: Vec<f64> = (0..q - 1).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let nf = NormalFormAutomorphism::SiegelHyperbolic {
        lambda: lambda1,
        phases: phases1.clone(),
        expanding: true,
    };
    let tau = nf.to_map(q).unwrap();
    // Realize in the ball by Cayley conjugation and conjugate by a random
    // automorphism.
    let conj = random_automorphism(&mut rng, q);
    let ball_nf = {
        let origin = BallPoint::origin(q);
        let through = |x: &BallPoint| -> BallPoint {
            let s = cayley(x);
            match tau.eval(&DomainPoint::Siegel(s)).unwrap() {
                DomainPoint::Siegel(t) => crate::geometry::cayley_inverse(&t),
                DomainPoint::Ball(_) => unreachable!(),
            }
        };
        let value0 = through(&origin);
        // Fit the automorphism parameters from 200 sampled points is
        // overkill; evaluate the Jacobian numerically instead via central
        // differences on each coordinate.
        let h = 1e-6;
        let qd = q;
        let mut jac = DMatrix::<C64>::zeros(qd, qd);
        for k in 0..qd {
            for (sign, weight) in [(1.0, 0.5 / h), (-1.0, -0.5 / h)] {
                let mut coords = origin.coords().to_vec();
                coords[k] += C64::new(sign * h, 0.0);
                let val = through(&BallPoint::new(coords).unwrap());
                for j in 0..qd {
                    jac[(j, k)] += val.coords()[j] * weight;
                }
            }
            for (sign, weight) in [(1.0, 0.5 / h), (-1.0, -0.5 / h)] {
                let mut coords = origin.coords().to_vec();
                coords[k] += C64::new(0.0, sign * h);
                let val = through(&BallPoint::new(coords).unwrap());
                for j in 0..qd {
                    // d/d(iy) = -i d/dy for the holomorphic part.
                    jac[(j, k)] += val.coords()[j] * C64::new(0.0, -1.0) * weight;
                }
            }
            for j in 0..qd {
                jac[(j, k)] *= C64::new(0.5, 0.0);
            }
        }
        crate::maps::BallAutomorphism::new(
            {
                let norm_sq: f64 = value0.coords().iter().map(|c| c.norm_sqr()).sum();
                let gap = 1.0 - norm_sq;
                let s = gap.sqrt();
                let mut inv = DMatrix::<C64>::zeros(qd, qd);
                for j in 0..qd {
                    for k in 0..qd {
                        let p_jk = if norm_sq == 0.0 {
                            C64::new(0.0, 0.0)
                        } else {
                            value0.coords()[j] * value0.coords()[k].conj() / norm_sq
                        };
                        let q_jk = if j == k {
                            C64::new(1.0, 0.0) - p_jk
                        } else {
                            -p_jk
                        };
                        inv[(j, k)] = -(p_jk / gap + q_jk / s);
                    }
                }
                crate::maps::reunitarize(-(inv * jac))
            },
            value0.coords().to_vec(),
        )
        .unwrap()
    };
    let member = conj
        .inverse()
        .compose(&ball_nf)
        .unwrap()
        .compose(&conj)
        .unwrap();
    let family = CommutingFamily::with_certificate(
        vec![MapDescription::BallAutomorphism(member)],
        Certificate::Exact,
    );
    let recovered = csm_commuting_hyperbolic_automorphisms(&family, &params);
    let ok = match &recovered {
        Ok(model) => match &model.autos()[0] {
            NormalFormAutomorphism::SiegelHyperbolic { lambda, phases, .. } => {
                let mut expect = phases1.clone();
                expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
                (lambda - lambda1).abs() < 1e-7
                    && phases
                        .iter()
                        .zip(&expect)
                        .all(|(a, b)| (a - b).abs() < 1e-7)
            }
            _ => false,
        },
        Err(_) => false,
    };
    checks.push(check(
        "normal_form_recovery",
        ok,
        format!("lambda target {lambda1:.6}, recovery {:?}", recovered.is_ok()),
    ));

    // Gamma functoriality on structured maps.
    let models43 = csm_example_family(4, 2, 3, 1.0).unwrap();
    let f = models43.family.maps()[0].clone();
    let g = models43.family.maps()[1].clone();
    let compose = MapDescription::composition(vec![f.clone(), g.clone()]).unwrap();
    let lhs = gamma_induced(&compose, &models43.g_model)
        .unwrap()
        .lower_to_siegel_polynomial()
        .unwrap();
    let rhs = gamma_induced(&f, &models43.g_model)
        .unwrap()
        .lower_to_siegel_polynomial()
        .unwrap()
        .compose(
            &gamma_induced(&g, &models43.g_model)
                .unwrap()
                .lower_to_siegel_polynomial()
                .unwrap(),
        )
        .unwrap();
    let gamma_residual = lhs.coefficient_distance(&rhs);
    checks.push(check(
        "gamma_functoriality",
        gamma_residual < 1e-12,
        format!("coefficient distance {gamma_residual:.3e}"),
    ));

    // Type monotonicity across the example grid (m <= 4 for speed).
    let mut ok = true;
    let mut detail = String::new();
    let tparams = TypeEstimateParams {
        estimator: params.clone(),
        ..TypeEstimateParams::default()
    };
    for m in 2..=4usize {
        for q in 1..m {
            for p in 2..=m {
                let models = csm_example_family(m, q, p, 1.0).unwrap();
                let x = DomainPoint::Siegel(
                    crate::geometry::SiegelPoint::new(
                        C64::new(0.1, 3.0),
                        vec![C64::new(0.25, 0.1); m - 1],
                    )
                    .unwrap(),
                );
                let pair = type_estimate(&models.family, &x, &tparams).unwrap();
                let expected = (p - 1).min(q);
                if pair.dimension != Some(expected) || expected > q.min(p) {
                    ok = false;
                    detail = format!(
                        "(m,q,p)=({m},{q},{p}): estimated {:?}, expected {expected}",
                        pair.dimension
                    );
                }
            }
        }
    }
    checks.push(check(
        "type_monotonicity_grid",
        ok,
        if detail.is_empty() {
            "type(pair) = min(p-1, q) <= min(type f, type g) on the m <= 4 grid".into()
        } else {
            detail
        },
    ));

    checks
}

fn obstructions_suite(seed: u64, conv: &MetricConvention) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    // 50 synthetic clause-violating inputs produce Inconsistent with the
    // right clause.
    let mut ok = true;
    let mut detail = String::new();
    for i in 0..50 {
        let ambient = rng.gen_range(2..=5usize);
        let clause = i % 3;
        let (f, g, expect) = match clause {
            0 => (
                MapProfile::new(MapKind::Hyperbolic, Some(ambient), ambient, StepSign::Unknown),
                MapProfile::new(
                    MapKind::Parabolic,
                    Some(rng.gen_range(2..=ambient)),
                    ambient,
                    StepSign::Unknown,
                ),
                crate::obstruction::ObstructionRule::HyperbolicAutomorphismType,
            ),
            1 => (
                MapProfile::new(
                    MapKind::Hyperbolic,
                    Some(rng.gen_range(1..ambient)),
                    ambient,
                    StepSign::Unknown,
                ),
                MapProfile::new(MapKind::Parabolic, Some(0), ambient, StepSign::Unknown),
                crate::obstruction::ObstructionRule::ParabolicTypeZero,
            ),
            _ => (
                MapProfile::new(
                    MapKind::Hyperbolic,
                    Some(rng.gen_range(1..ambient)),
                    ambient,
                    StepSign::Unknown,
                ),
                MapProfile::new(MapKind::Parabolic, Some(1), ambient, StepSign::Positive),
                crate::obstruction::ObstructionRule::ParabolicTypeOnePositiveStep,
            ),
        };
        // Randomize the argument order; the engine is symmetric.
        let verdict = if rng.gen_bool(0.5) {
            check_pair(&f, &g)
        } else {
            check_pair(&g, &f)
        };
        match verdict {
            PairVerdict::Inconsistent { rule, .. } if rule == expect => {}
            other => {
                ok = false;
                detail = format!("case {i}: expected {expect:?}, got {other:?}");
            }
        }
    }
    checks.push(check(
        "synthetic_violations_flagged",
        ok,
        if detail.is_empty() {
            "50 clause-violating inputs all flagged with the correct clause".into()
        } else {
            detail
        },
    ));

    // Generator outputs are always consistent.
    let mut ok = true;
    let mut detail = String::new();
    for m in 2..=5usize {
        for u in 1..m {
            for v in 2..=m {
                let fam = counterexample(m, u, v, 1.0);
                if fam.is_err() {
                    ok = false;
                    detail = format!("generator failed at (m,u,v)=({m},{u},{v})");
                    continue;
                }
                let f = MapProfile::new(MapKind::Hyperbolic, Some(u), m, StepSign::Unknown);
                let g = MapProfile::new(MapKind::Parabolic, Some(v), m, StepSign::Positive);
                if !matches!(check_pair(&f, &g), PairVerdict::Consistent) {
                    ok = false;
                    detail = format!("(m,u,v)=({m},{u},{v}) flagged inconsistent");
                }
            }
        }
    }
    checks.push(check(
        "generator_outputs_consistent",
        ok,
        if detail.is_empty() {
            "check_pair(counterexample(m,u,v)) consistent on the full m <= 5 grid".into()
        } else {
            detail
        },
    ));

    // Common-DW check on 50 random commuting families built from normal
    // forms (single automorphism or automorphism + its inverse).
    let mut ok = true;
    let mut detail = String::new();
    let cls = ClassifyParams {
        estimator: EstimatorParams {
            convention: *conv,
            ..EstimatorParams::default()
        },
        ..ClassifyParams::default()
    };
    for i in 0..50 {
        let a = rng.gen_range(0.25..0.75);
        let g = BallAutomorphism::disc_hyperbolic(a).unwrap();
        let (maps, expect_two) = if i % 2 == 0 {
            (
                vec![
                    MapDescription::BallAutomorphism(g.clone()),
                    MapDescription::iterate(MapDescription::BallAutomorphism(g.clone()), 2),
                ],
                false,
            )
        } else {
            (
                vec![
                    MapDescription::BallAutomorphism(g.clone()),
                    MapDescription::BallAutomorphism(g.inverse()),
                ],
                true,
            )
        };
        let fam = CommutingFamily::with_certificate(maps, Certificate::Exact);
        let x = DomainPoint::Ball(random_ball_point(&mut rng, 1, 0.4));
        match common_dw_check(&fam, &x, &cls) {
            Ok(CommonDwVerdict::SinglePoint { .. }) if !expect_two => {}
            Ok(CommonDwVerdict::TwoPoints { .. }) if expect_two => {}
            other => {
                ok = false;
                detail = format!("case {i}: unexpected verdict {other:?}");
            }
        }
    }
    checks.push(check(
        "common_dw_dichotomy",
        ok,
        if detail.is_empty() {
            "50 normal-form families satisfy the one-or-two-point dichotomy".into()
        } else {
            detail
        },
    ));

    // Round trip: classification and type of generator output reproduce the
    // requested parameters.
    let fam = counterexample(3, 2, 2, 1.0).unwrap();
    let x = DomainPoint::Siegel(
        crate::geometry::SiegelPoint::new(
            C64::new(0.2, 2.5),
            vec![C64::new(0.3, 0.1), C64::new(0.1, 0.2)],
        )
        .unwrap(),
    );
    let f_cls = denjoy_wolff(&fam.maps()[0], &x, &cls).unwrap();
    let g_cls = denjoy_wolff(&fam.maps()[1], &x, &cls).unwrap();
    let f_single =
        CommutingFamily::with_certificate(vec![fam.maps()[0].clone()], Certificate::Exact);
    let g_single =
        CommutingFamily::with_certificate(vec![fam.maps()[1].clone()], Certificate::Exact);
    let tparams = TypeEstimateParams::default();
    let tf = type_estimate(&f_single, &x, &tparams).unwrap();
    let tg = type_estimate(&g_single, &x, &tparams).unwrap();
    let ok = matches!(f_cls.kind, ClassKind::Hyperbolic { .. })
        && matches!(g_cls.kind, ClassKind::Parabolic { .. })
        && tf.dimension == Some(2)
        && tg.dimension == Some(2);
    checks.push(check(
        "generator_roundtrip",
        ok,
        format!(
            "f: {:?}/type {:?}, g: {:?}/type {:?}",
            short_kind(&f_cls.kind),
            tf.dimension,
            short_kind(&g_cls.kind),
            tg.dimension
        ),
    ));

    checks
}

fn short_kind(kind: &ClassKind) -> &'static str {
    match kind {
        ClassKind::Elliptic { .. } => "elliptic",
        ClassKind::Hyperbolic { .. } => "hyperbolic",
        ClassKind::Parabolic { .. } => "parabolic",
        ClassKind::Unknown { .. } => "unknown",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_with_default_seed() {
        let conv = MetricConvention::default();
        for name in SUITES {
            let report = run_suite(name, 0, &conv).unwrap();
            for check in &report.checks {
                assert!(check.pass, "{name}/{}: {}", check.name, check.detail);
            }
        }
    }

    #[test]
    fn unknown_suite_is_none() {
        assert!(run_suite("nope", 0, &MetricConvention::default()).is_none());
    }
}
