//! JSON schemas for maps, families, points and reports, shared by the CLI
//! and the Python bindings. Complex numbers are `[re, im]` pairs; every
//! report embeds the tool version, the run configuration and the seed so
//! that identical inputs reproduce byte-identical output.

use crate::dynamics::{ClassKind, Classification, LimitEstimate};
use crate::geometry::{BallPoint, C64, Domain, DomainPoint, SiegelPoint};
use crate::maps::{
    BallAutomorphism, Certificate, CommutingFamily, MapDescription, SiegelPolynomial,
};
use crate::obstruction::{MapKind, MapProfile, ObstructionRule, PairVerdict, StepSign};
use crate::semimodel::{Intertwiner, NormalFormAutomorphism, SemiModel};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Build(String),
}

pub type ComplexJson = [f64; 2];

fn cpx(c: C64) -> ComplexJson {
    [c.re, c.im]
}

fn cpx_from(v: &Value, what: &str) -> Result<C64, ReportError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| ReportError::Malformed(format!("{what}: expected [re, im]")))?;
    let re = arr[0]
        .as_f64()
        .ok_or_else(|| ReportError::Malformed(format!("{what}: non-numeric real part")))?;
    let im = arr[1]
        .as_f64()
        .ok_or_else(|| ReportError::Malformed(format!("{what}: non-numeric imaginary part")))?;
    Ok(C64::new(re, im))
}

fn vector_json(v: &DVector<C64>) -> Value {
    Value::Array(v.iter().map(|c| json!(cpx(*c))).collect())
}

fn matrix_json(m: &DMatrix<C64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|j| Value::Array((0..m.ncols()).map(|k| json!(cpx(m[(j, k)]))).collect()))
            .collect(),
    )
}

fn vector_from(v: &Value, what: &str) -> Result<Vec<C64>, ReportError> {
    v.as_array()
        .ok_or_else(|| ReportError::Malformed(format!("{what}: expected an array")))?
        .iter()
        .map(|x| cpx_from(x, what))
        .collect()
}

fn matrix_from(v: &Value, what: &str) -> Result<DMatrix<C64>, ReportError> {
    let rows = v
        .as_array()
        .ok_or_else(|| ReportError::Malformed(format!("{what}: expected an array of rows")))?;
    let n = rows.len();
    let mut data = Vec::with_capacity(n * n);
    let mut ncols = None;
    for row in rows {
        let entries = vector_from(row, what)?;
        match ncols {
            None => ncols = Some(entries.len()),
            Some(c) if c != entries.len() => {
                return Err(ReportError::Malformed(format!("{what}: ragged matrix")))
            }
            _ => {}
        }
        data.extend(entries);
    }
    Ok(DMatrix::from_row_slice(n, ncols.unwrap_or(0), &data))
}

/// Wire form of a map: `{"kind": ..., "dim": m, "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapJson {
    pub kind: String,
    pub dim: usize,
    pub params: Value,
}

pub fn map_to_json(map: &MapDescription) -> MapJson {
    match map {
        MapDescription::BallAutomorphism(g) => MapJson {
            kind: "ball_automorphism".into(),
            dim: g.dim(),
            params: json!({
                "unitary": matrix_json(g.unitary()),
                "center": Value::Array(g.center().iter().map(|c| json!(cpx(*c))).collect()),
            }),
        },
        MapDescription::SiegelPolynomial(p) => MapJson {
            kind: "siegel_polynomial".into(),
            dim: p.dim(),
            params: json!({
                "alpha": p.alpha(),
                "linear": vector_json(p.linear()),
                "quadratic": matrix_json(p.quad()),
                "constant": cpx(p.constant()),
                "matrix": matrix_json(p.matrix()),
                "translation": vector_json(p.offset()),
            }),
        },
        MapDescription::ExampleHyperbolic { dim, q } => MapJson {
            kind: "example_hyperbolic".into(),
            dim: *dim,
            params: json!({ "q": q }),
        },
        MapDescription::ExampleParabolic { dim, p, r } => MapJson {
            kind: "example_parabolic".into(),
            dim: *dim,
            params: json!({ "p": p, "r": r }),
        },
        MapDescription::Composition(maps) => MapJson {
            kind: "composition".into(),
            dim: maps[0].domain().dim(),
            params: json!({
                "maps": maps.iter().map(|m| serde_json::to_value(map_to_json(m)).unwrap()).collect::<Vec<_>>(),
            }),
        },
        MapDescription::Iterate { base, power } => MapJson {
            kind: "iterate".into(),
            dim: base.domain().dim(),
            params: json!({
                "base": serde_json::to_value(map_to_json(base)).unwrap(),
                "power": power,
            }),
        },
    }
}

pub fn map_from_json(json: &MapJson) -> Result<MapDescription, ReportError> {
    let p = &json.params;
    let build = |e: crate::maps::MapsError| ReportError::Build(e.to_string());
    match json.kind.as_str() {
        "ball_automorphism" => {
            let unitary = matrix_from(
                p.get("unitary")
                    .ok_or_else(|| ReportError::Malformed("missing unitary".into()))?,
                "unitary",
            )?;
            let center = vector_from(
                p.get("center")
                    .ok_or_else(|| ReportError::Malformed("missing center".into()))?,
                "center",
            )?;
            Ok(MapDescription::BallAutomorphism(
                BallAutomorphism::new(unitary, center).map_err(build)?,
            ))
        }
        "siegel_polynomial" => {
            let get = |key: &str| {
                p.get(key)
                    .ok_or_else(|| ReportError::Malformed(format!("missing {key}")))
            };
            let alpha = get("alpha")?
                .as_f64()
                .ok_or_else(|| ReportError::Malformed("alpha must be a real number".into()))?;
            let linear = DVector::from_vec(vector_from(get("linear")?, "linear")?);
            let quad = matrix_from(get("quadratic")?, "quadratic")?;
            let constant = cpx_from(get("constant")?, "constant")?;
            let matrix = matrix_from(get("matrix")?, "matrix")?;
            let offset = DVector::from_vec(vector_from(get("translation")?, "translation")?);
            Ok(MapDescription::SiegelPolynomial(
                SiegelPolynomial::new(json.dim, alpha, linear, quad, constant, matrix, offset)
                    .map_err(build)?,
            ))
        }
        "example_hyperbolic" => {
            let q = p
                .get("q")
                .and_then(Value::as_u64)
                .ok_or_else(|| ReportError::Malformed("missing integer q".into()))?;
            MapDescription::example_hyperbolic(json.dim, q as usize).map_err(build)
        }
        "example_parabolic" => {
            let pp = p
                .get("p")
                .and_then(Value::as_u64)
                .ok_or_else(|| ReportError::Malformed("missing integer p".into()))?;
            let r = p
                .get("r")
                .and_then(Value::as_f64)
                .ok_or_else(|| ReportError::Malformed("missing real r".into()))?;
            MapDescription::example_parabolic(json.dim, pp as usize, r).map_err(build)
        }
        "composition" => {
            let maps = p
                .get("maps")
                .and_then(Value::as_array)
                .ok_or_else(|| ReportError::Malformed("missing maps array".into()))?;
            let parsed: Result<Vec<MapDescription>, ReportError> = maps
                .iter()
                .map(|v| map_from_json(&serde_json::from_value(v.clone())?))
                .collect();
            MapDescription::composition(parsed?).map_err(build)
        }
        "iterate" => {
            let base = p
                .get("base")
                .ok_or_else(|| ReportError::Malformed("missing base".into()))?;
            let power = p
                .get("power")
                .and_then(Value::as_u64)
                .ok_or_else(|| ReportError::Malformed("missing integer power".into()))?;
            Ok(MapDescription::iterate(
                map_from_json(&serde_json::from_value(base.clone())?)?,
                power as u32,
            ))
        }
        other => Err(ReportError::Malformed(format!("unknown map kind {other}"))),
    }
}

/// Wire form of a commuting family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyJson {
    pub maps: Vec<MapJson>,
    pub certificate: Value,
}

pub fn family_to_json(family: &CommutingFamily) -> FamilyJson {
    let certificate = match family.certificate() {
        Certificate::Exact => json!("exact"),
        Certificate::Numeric { tol } => json!({ "numeric": { "tol": tol } }),
        Certificate::Unverified => json!("unverified"),
    };
    FamilyJson {
        maps: family.maps().iter().map(map_to_json).collect(),
        certificate,
    }
}

/// Parses a family; `exact`/`numeric` certificates are re-verified rather
/// than trusted.
pub fn family_from_json(
    json: &FamilyJson,
    samples: usize,
    tol: f64,
    seed: u64,
    conv: &crate::geometry::MetricConvention,
) -> Result<CommutingFamily, ReportError> {
    let maps: Result<Vec<MapDescription>, ReportError> =
        json.maps.iter().map(map_from_json).collect();
    let maps = maps?;
    if json.certificate == json!("unverified") {
        return Ok(CommutingFamily::with_certificate(
            maps,
            Certificate::Unverified,
        ));
    }
    CommutingFamily::verify(maps, samples, tol, seed, conv)
        .map_err(|e| ReportError::Build(e.to_string()))
}

/// Interprets user-provided coordinates as a point of the map's domain:
/// ball coordinates for ball maps, `(z, w)` for Siegel maps.
pub fn point_from_coords(domain: Domain, coords: &[C64]) -> Result<DomainPoint, ReportError> {
    if coords.len() != domain.dim() {
        return Err(ReportError::Malformed(format!(
            "expected {} coordinates, got {}",
            domain.dim(),
            coords.len()
        )));
    }
    match domain {
        Domain::Ball(_) => Ok(DomainPoint::Ball(
            BallPoint::new(coords.to_vec()).map_err(|e| ReportError::Build(e.to_string()))?,
        )),
        Domain::Siegel(_) => Ok(DomainPoint::Siegel(
            SiegelPoint::new(coords[0], coords[1..].to_vec())
                .map_err(|e| ReportError::Build(e.to_string()))?,
        )),
    }
}

pub fn parse_point_json(text: &str) -> Result<Vec<C64>, ReportError> {
    let value: Value = serde_json::from_str(text)?;
    vector_from(&value, "point")
}

/// Run configuration embedded in every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigJson {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub metric_scale: f64,
}

/// Report envelope: `{tool_version, config, seed, ...body}`.
pub fn envelope(config: &ConfigJson, body: Value) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert(
        "tool_version".into(),
        json!(env!("CARGO_PKG_VERSION")),
    );
    obj.insert("config".into(), serde_json::to_value(config).unwrap());
    obj.insert("seed".into(), json!(config.seed));
    if let Value::Object(body) = body {
        for (k, v) in body {
            obj.insert(k, v);
        }
    }
    Value::Object(obj)
}

pub fn limit_json(est: &LimitEstimate) -> Value {
    json!({
        "value": est.value,
        "lower": est.lower,
        "upper": est.upper,
        "iterations": est.iterations,
        "converged": est.converged,
    })
}

pub fn classification_json(cls: &Classification) -> Value {
    let diagnostics = json!({
        "iterations": cls.diagnostics.iterations,
        "residuals": cls.diagnostics.residuals,
    });
    match &cls.kind {
        ClassKind::Elliptic {
            fixed_point,
            residual,
        } => {
            let coords: Vec<ComplexJson> = match fixed_point {
                DomainPoint::Ball(b) => b.coords().iter().map(|c| cpx(*c)).collect(),
                DomainPoint::Siegel(s) => {
                    let (z, w) = s.materialize();
                    std::iter::once(cpx(z)).chain(w.iter().map(|c| cpx(*c))).collect()
                }
            };
            json!({
                "kind": "elliptic",
                "fixed_point": coords,
                "residual": residual,
                "diagnostics": diagnostics,
            })
        }
        ClassKind::Hyperbolic {
            lambda,
            lambda_quotient,
            dw,
            rate,
        } => json!({
            "kind": "hyperbolic",
            "lambda": lambda,
            "lambda_quotient": lambda_quotient,
            "dw": dw.coords().iter().map(|c| cpx(*c)).collect::<Vec<_>>(),
            "c": limit_json(rate),
            "diagnostics": diagnostics,
        }),
        ClassKind::Parabolic {
            lambda_quotient,
            dw,
            rate,
        } => json!({
            "kind": "parabolic",
            "lambda": 1.0,
            "lambda_quotient": lambda_quotient,
            "dw": dw.coords().iter().map(|c| cpx(*c)).collect::<Vec<_>>(),
            "c": limit_json(rate),
            "diagnostics": diagnostics,
        }),
        ClassKind::Unknown { reason } => json!({
            "kind": "unknown",
            "reason": reason,
            "diagnostics": diagnostics,
        }),
    }
}

pub fn semimodel_json(model: &SemiModel) -> Value {
    let intertwiner = model.intertwiner().map(|i| match i {
        Intertwiner::Identity(d) => json!({ "kind": "identity", "dim": d.dim() }),
        Intertwiner::QuadShear { dim, base } => json!({
            "kind": "quad_shear", "dim": dim, "base": base,
        }),
        Intertwiner::Projection { dim, keep } => json!({
            "kind": "projection", "dim": dim, "keep": keep,
        }),
        Intertwiner::BallConjugation { pre, w_unitary } => json!({
            "kind": "ball_conjugation",
            "pre": serde_json::to_value(map_to_json(&MapDescription::BallAutomorphism(pre.clone()))).unwrap(),
            "w_unitary": matrix_json(w_unitary),
        }),
    });
    let autos: Vec<Value> = model
        .autos()
        .iter()
        .map(|a| match a {
            NormalFormAutomorphism::SiegelHyperbolic {
                lambda,
                phases,
                expanding,
            } => json!({
                "form": "siegel_hyperbolic",
                "lambda": lambda,
                "phases": phases,
                "dw_at_infinity": expanding,
            }),
            NormalFormAutomorphism::SiegelParabolicTranslation { r } => json!({
                "form": "siegel_parabolic_translation",
                "r": r,
            }),
            NormalFormAutomorphism::ExplicitLinear { alpha, diag } => json!({
                "form": "explicit_linear",
                "alpha": alpha,
                "diag": diag.iter().map(|c| cpx(*c)).collect::<Vec<_>>(),
            }),
        })
        .collect();
    json!({
        "type": model.dimension(),
        "base": { "domain": "siegel", "dim": model.dimension() },
        "exactness": match model.exactness() {
            crate::semimodel::Exactness::Exact => "exact",
            crate::semimodel::Exactness::Numeric => "numeric",
        },
        "intertwiner": intertwiner,
        "autos": autos,
    })
}

/// Profile JSON: `{"kind", "type", "ambient", "step"}`.
pub fn profile_from_json(v: &Value) -> Result<MapProfile, ReportError> {
    let kind = match v.get("kind").and_then(Value::as_str) {
        Some("elliptic") => MapKind::Elliptic,
        Some("hyperbolic") => MapKind::Hyperbolic,
        Some("parabolic") => MapKind::Parabolic,
        other => {
            return Err(ReportError::Malformed(format!(
                "profile kind must be elliptic|hyperbolic|parabolic, got {other:?}"
            )))
        }
    };
    let type_dim = match v.get("type") {
        None | Some(Value::Null) => None,
        Some(t) => Some(t.as_u64().ok_or_else(|| {
            ReportError::Malformed("profile type must be a nonnegative integer".into())
        })? as usize),
    };
    let ambient = v
        .get("ambient")
        .and_then(Value::as_u64)
        .ok_or_else(|| ReportError::Malformed("profile needs an ambient dimension".into()))?
        as usize;
    let step = match v.get("step").and_then(Value::as_str) {
        Some("positive") => StepSign::Positive,
        Some("zero") => StepSign::Zero,
        Some("unknown") | None => StepSign::Unknown,
        Some(other) => {
            return Err(ReportError::Malformed(format!(
                "step must be positive|zero|unknown, got {other}"
            )))
        }
    };
    Ok(MapProfile::new(kind, type_dim, ambient, step))
}

pub fn verdict_json(verdict: &PairVerdict) -> Value {
    match verdict {
        PairVerdict::Consistent => json!({ "verdict": "consistent" }),
        PairVerdict::Inconsistent { rule, detail } => json!({
            "verdict": "inconsistent",
            "rule": match rule {
                ObstructionRule::HyperbolicAutomorphismType => "hyperbolic_automorphism_type",
                ObstructionRule::ParabolicTypeZero => "parabolic_type_zero",
                ObstructionRule::ParabolicTypeOnePositiveStep => "parabolic_type_one_positive_step",
            },
            "detail": detail,
        }),
        PairVerdict::Unknown { reason } => json!({
            "verdict": "unknown",
            "reason": reason,
        }),
    }
}
