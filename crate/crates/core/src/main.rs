//! Command-line interface: classification, estimators, semi-models and the
//! obstruction rules as JSON-reporting subcommands with reproducible seeds.
//!
//! Exit codes: 0 success/definite verdict, 1 usage or I/O error, 2 unknown
//! verdict, 3 invariant violation detected.

use balldyn::dynamics::{
    denjoy_wolff, divergence_rate, step, ClassKind, ClassifyParams, EstimatorParams,
};
use balldyn::geometry::{Domain, MetricConvention};
use balldyn::maps::{CommutingFamily, MapDescription, MultiIndex};
use balldyn::obstruction::{check_pair, counterexample, PairVerdict};
use balldyn::report::{
    classification_json, envelope, family_from_json, family_to_json, limit_json, map_from_json,
    map_to_json, parse_point_json, point_from_coords, profile_from_json, semimodel_json,
    verdict_json, ConfigJson, FamilyJson, MapJson,
};
use balldyn::semimodel::{
    csm_commuting_hyperbolic_automorphisms, csm_example_family, gamma_induced, type_estimate,
    SemiModel, TypeEstimateParams,
};
use balldyn::verify::{run_suite, SUITES};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "balldyn",
    version,
    about = "Holomorphic dynamics on the unit ball and Siegel half-space: \
             classification, divergence rates, semi-models, commutation obstructions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    /// Convergence tolerance for iterative estimators.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration budget for orbits and limits.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Seed for all sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kobayashi normalization: 2 (default, c = -log lambda) or 1.
    #[arg(long, default_value_t = 2.0)]
    metric_scale: f64,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunFlags {
    fn config(&self) -> ConfigJson {
        ConfigJson {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            metric_scale: self.metric_scale,
        }
    }

    fn convention(&self) -> Result<MetricConvention, CliError> {
        MetricConvention::new(self.metric_scale).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn estimator(&self) -> Result<EstimatorParams, CliError> {
        Ok(EstimatorParams {
            max_iter: self.max_iter,
            tol: self.tol,
            convention: self.convention()?,
            cancel: Default::default(),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Denjoy-Wolff classification of a self-map.
    Classify {
        map: PathBuf,
        /// Base point coordinates as JSON [[re,im], ...]; domain default
        /// when omitted.
        #[arg(long)]
        point: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Divergence rate estimate with brackets.
    Divrate {
        map: PathBuf,
        #[arg(long)]
        point: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// M-step of a commuting family.
    Step {
        family: PathBuf,
        /// Multi-index, comma separated (e.g. "1,0").
        #[arg(long)]
        index: String,
        #[arg(long)]
        point: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Numerical type (semi-model dimension) of a commuting family.
    Type {
        family: PathBuf,
        #[arg(long)]
        point: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Exact semi-model construction (automorphism families and the example
    /// family), numerical type otherwise.
    Semimodel {
        family: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Induced self-map on the base of the family's exact semi-model.
    Gamma {
        family: PathBuf,
        map: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Obstruction rule engine on a pair of classification profiles.
    CheckPair {
        profiles: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Generate the commuting pair with hyperbolic type u and parabolic
    /// type v on the Siegel domain of dimension m.
    GenCounterexample {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        u: usize,
        #[arg(long)]
        v: usize,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run the named property suites (all when omitted); exits nonzero iff
    /// any check fails.
    Verify {
        #[arg(long)]
        suite: Option<String>,
        #[command(flatten)]
        flags: RunFlags,
    },
}

enum CliError {
    Usage(String),
    Unknown(String),
    Violation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Unknown(_) => 2,
            CliError::Violation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Unknown(m) | CliError::Violation(m) => m,
        }
    }
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn load_map(path: &PathBuf) -> Result<MapDescription, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let json: MapJson = serde_json::from_str(&text).map_err(io_err)?;
    map_from_json(&json).map_err(io_err)
}

fn load_family(path: &PathBuf, flags: &RunFlags) -> Result<CommutingFamily, CliError> {
    let text = std::fs::read_to_string(path).map_err(io_err)?;
    let json: FamilyJson = serde_json::from_str(&text).map_err(io_err)?;
    family_from_json(&json, 32, 1e-9, flags.seed, &flags.convention()?).map_err(io_err)
}

fn base_point(
    domain: Domain,
    point: &Option<String>,
) -> Result<balldyn::geometry::DomainPoint, CliError> {
    match point {
        None => Ok(match domain {
            Domain::Ball(q) => {
                balldyn::geometry::DomainPoint::Ball(balldyn::geometry::BallPoint::origin(q))
            }
            Domain::Siegel(m) => {
                balldyn::geometry::DomainPoint::Siegel(balldyn::geometry::SiegelPoint::base(m))
            }
        }),
        Some(text) => {
            let coords = parse_point_json(text).map_err(io_err)?;
            point_from_coords(domain, &coords).map_err(io_err)
        }
    }
}

fn write_report(flags: &RunFlags, body: Value) -> Result<(), CliError> {
    let report = envelope(&flags.config(), body);
    let mut text = serde_json::to_string_pretty(&report).map_err(io_err)?;
    text.push('\n');
    match &flags.out {
        Some(path) => std::fs::write(path, text).map_err(io_err),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn classify_cmd(
    map: &PathBuf,
    point: &Option<String>,
    flags: &RunFlags,
) -> Result<(), CliError> {
    let map = load_map(map)?;
    let x = base_point(map.domain(), point)?;
    let params = ClassifyParams {
        estimator: flags.estimator()?,
        ..ClassifyParams::default()
    };
    let cls = denjoy_wolff(&map, &x, &params).map_err(|e| CliError::Usage(e.to_string()))?;
    let unknown = matches!(cls.kind, ClassKind::Unknown { .. });
    write_report(flags, classification_json(&cls))?;
    if unknown {
        return Err(CliError::Unknown("classification is unknown".into()));
    }
    Ok(())
}

fn divrate_cmd(map: &PathBuf, point: &Option<String>, flags: &RunFlags) -> Result<(), CliError> {
    let map = load_map(map)?;
    let x = base_point(map.domain(), point)?;
    let est = divergence_rate(&map, &x, &flags.estimator()?)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let conv = flags.convention()?;
    write_report(
        flags,
        json!({
            "c": limit_json(&est),
            "lambda_equivalent": conv.lambda_from_rate(est.value),
        }),
    )
}

fn step_cmd(
    family: &PathBuf,
    index: &str,
    point: &Option<String>,
    flags: &RunFlags,
) -> Result<(), CliError> {
    let family = load_family(family, flags)?;
    let entries: Result<Vec<u32>, _> = index.split(',').map(|s| s.trim().parse()).collect();
    let entries = entries.map_err(|e| CliError::Usage(format!("bad index: {e}")))?;
    let x = base_point(family.domain(), point)?;
    let est = step(
        &family,
        &MultiIndex::new(entries.clone()),
        &x,
        &flags.estimator()?,
    )
    .map_err(|e| CliError::Usage(e.to_string()))?;
    write_report(
        flags,
        json!({
            "index": entries,
            "step": limit_json(&est),
        }),
    )
}

fn type_cmd(family: &PathBuf, point: &Option<String>, flags: &RunFlags) -> Result<(), CliError> {
    let family = load_family(family, flags)?;
    let x = base_point(family.domain(), point)?;
    let params = TypeEstimateParams {
        estimator: flags.estimator()?,
        ..TypeEstimateParams::default()
    };
    let est = type_estimate(&family, &x, &params).map_err(|e| CliError::Usage(e.to_string()))?;
    let body = json!({
        "type": est.dimension,
        "gap": if est.gap.is_finite() { json!(est.gap) } else { json!("infinite") },
        "spectra": est.spectra,
    });
    write_report(flags, body)?;
    if est.dimension.is_none() {
        return Err(CliError::Unknown(
            "rank did not stabilize; see the spectrum dump in the report".into(),
        ));
    }
    Ok(())
}

/// Dispatch to the exact constructions when the family supports them.
fn build_semimodel(
    family: &CommutingFamily,
    flags: &RunFlags,
) -> Result<(SemiModel, Value), CliError> {
    // All members ball automorphism words: hyperbolic-automorphism model.
    if family
        .maps()
        .iter()
        .all(|m| m.lower_to_ball_automorphism().is_some())
    {
        let model = csm_commuting_hyperbolic_automorphisms(family, &flags.estimator()?)
            .map_err(|e| CliError::Unknown(e.to_string()))?;
        let body = semimodel_json(&model);
        return Ok((model, body));
    }
    // The example pair (f, g).
    if family.len() == 2 {
        if let (
            MapDescription::ExampleHyperbolic { dim, q },
            MapDescription::ExampleParabolic { dim: d2, p, r },
        ) = (&family.maps()[0], &family.maps()[1])
        {
            if dim == d2 {
                let models = csm_example_family(*dim, *q, *p, *r)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let body = json!({
                    "pair": semimodel_json(&models.pair_model),
                    "f": semimodel_json(&models.f_model),
                    "g": semimodel_json(&models.g_model),
                });
                return Ok((models.pair_model, body));
            }
        }
    }
    // Single example member.
    if family.len() == 1 {
        match &family.maps()[0] {
            MapDescription::ExampleHyperbolic { dim, q } => {
                let models = csm_example_family(*dim, *q, 2, 1.0)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let body = semimodel_json(&models.f_model);
                return Ok((models.f_model, body));
            }
            MapDescription::ExampleParabolic { dim, p, r } => {
                let models = csm_example_family(*dim, 1, *p, *r)
                    .map_err(|e| CliError::Usage(e.to_string()))?;
                let body = semimodel_json(&models.g_model);
                return Ok((models.g_model, body));
            }
            _ => {}
        }
    }
    // Fall back to the numerical type.
    let x = match family.domain() {
        Domain::Ball(q) => {
            balldyn::geometry::DomainPoint::Ball(balldyn::geometry::BallPoint::origin(q))
        }
        Domain::Siegel(m) => {
            balldyn::geometry::DomainPoint::Siegel(balldyn::geometry::SiegelPoint::base(m))
        }
    };
    let params = TypeEstimateParams {
        estimator: flags.estimator()?,
        ..TypeEstimateParams::default()
    };
    let est = type_estimate(family, &x, &params).map_err(|e| CliError::Usage(e.to_string()))?;
    match est.dimension {
        Some(d) => {
            let model = SemiModel::numeric(d);
            let body = semimodel_json(&model);
            Ok((model, body))
        }
        None => Err(CliError::Unknown(
            "no exact construction applies and the numerical rank did not stabilize".into(),
        )),
    }
}

fn semimodel_cmd(family: &PathBuf, flags: &RunFlags) -> Result<(), CliError> {
    let family = load_family(family, flags)?;
    let (_, body) = build_semimodel(&family, flags)?;
    write_report(flags, body)
}

fn gamma_cmd(family: &PathBuf, map: &PathBuf, flags: &RunFlags) -> Result<(), CliError> {
    let family = load_family(family, flags)?;
    let g = load_map(map)?;
    let (model, _) = build_semimodel(&family, flags)?;
    let gamma = gamma_induced(&g, &model).map_err(|e| CliError::Unknown(e.to_string()))?;
    write_report(
        flags,
        json!({
            "gamma": serde_json::to_value(map_to_json(&gamma)).map_err(io_err)?,
            "base_dim": model.dimension(),
        }),
    )
}

fn check_pair_cmd(profiles: &PathBuf, flags: &RunFlags) -> Result<(), CliError> {
    let text = std::fs::read_to_string(profiles).map_err(io_err)?;
    let value: Value = serde_json::from_str(&text).map_err(io_err)?;
    let f = profile_from_json(
        value
            .get("f")
            .ok_or_else(|| CliError::Usage("missing profile f".into()))?,
    )
    .map_err(io_err)?;
    let g = profile_from_json(
        value
            .get("g")
            .ok_or_else(|| CliError::Usage("missing profile g".into()))?,
    )
    .map_err(io_err)?;
    let verdict = check_pair(&f, &g);
    let unknown = matches!(verdict, PairVerdict::Unknown { .. });
    write_report(flags, verdict_json(&verdict))?;
    if unknown {
        return Err(CliError::Unknown("pair verdict is unknown".into()));
    }
    Ok(())
}

fn gen_counterexample_cmd(
    m: usize,
    u: usize,
    v: usize,
    r: f64,
    flags: &RunFlags,
) -> Result<(), CliError> {
    let family = counterexample(m, u, v, r).map_err(|e| CliError::Usage(e.to_string()))?;
    let json = family_to_json(&family);
    write_report(
        flags,
        json!({
            "family": serde_json::to_value(&json).map_err(io_err)?,
            "hyperbolic_type": u,
            "parabolic_type": v,
        }),
    )
}

fn verify_cmd(suite: &Option<String>, flags: &RunFlags) -> Result<(), CliError> {
    let conv = flags.convention()?;
    let names: Vec<&str> = match suite {
        Some(s) => vec![s.as_str()],
        None => SUITES.to_vec(),
    };
    let mut reports = Vec::new();
    let mut all_pass = true;
    for name in names {
        let report = run_suite(name, flags.seed, &conv)
            .ok_or_else(|| CliError::Usage(format!("unknown suite {name}")))?;
        all_pass &= report.passed;
        reports.push(report);
    }
    write_report(
        flags,
        json!({
            "suites": reports,
            "all_pass": all_pass,
        }),
    )?;
    if !all_pass {
        return Err(CliError::Violation("property suite failed".into()));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Classify { map, point, flags } => classify_cmd(map, point, flags),
        Command::Divrate { map, point, flags } => divrate_cmd(map, point, flags),
        Command::Step {
            family,
            index,
            point,
            flags,
        } => step_cmd(family, index, point, flags),
        Command::Type {
            family,
            point,
            flags,
        } => type_cmd(family, point, flags),
        Command::Semimodel { family, flags } => semimodel_cmd(family, flags),
        Command::Gamma { family, map, flags } => gamma_cmd(family, map, flags),
        Command::CheckPair { profiles, flags } => check_pair_cmd(profiles, flags),
        Command::GenCounterexample {
            m,
            u,
            v,
            r,
            flags,
        } => gen_counterexample_cmd(*m, *u, *v, *r, flags),
        Command::Verify { suite, flags } => verify_cmd(suite, flags),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("BALLDYN_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("balldyn: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
