//! JSON formats for bodies, point sets, progressions, sets and reports.
//!
//! Rationals travel as `"p/q"` strings (`"3"` is accepted on input).

use num_traits::Zero;
use pfr_core::bodies::{ExactReal, VolumeMethod};
use pfr_core::fitting::FitSource;
use pfr_core::lattice::LatticePointSet;
use pfr_core::progressions::{AmbientGroup, Coordinates, Frame, Progression, ProgressionKind};
use pfr_core::setops::FiniteSet;
use pfr_core::transfer::{failed_checks, CoverBound, RbmReport, TransferReport};
use pfr_core::{BodyKind, Error, SymmetricBody, VolumeEstimate, Q};
use serde_json::{json, Map, Value};

/// Failure with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    pub witness: Option<Vec<Q>>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_LIMIT: i32 = 3;

impl CliError {
    pub fn format(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "format",
            message: message.into(),
            witness: None,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
            witness: None,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut e = json!({ "kind": self.kind, "message": self.message });
        if let Some(w) = &self.witness {
            e["witness"] = rat_vec(w);
        }
        e
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = match &e {
            Error::NotCovered { .. } => String::from("A is not covered by P + X"),
            _ => e.to_string(),
        };
        let (code, kind) = match &e {
            Error::Truncated { .. } => (EXIT_LIMIT, "truncated"),
            Error::Guard(_) => (EXIT_LIMIT, "guard"),
            Error::LowAcceptance => (EXIT_LIMIT, "low_acceptance"),
            Error::ResampleExhausted(_) => (EXIT_LIMIT, "resample_exhausted"),
            Error::NotCovered { .. } => (EXIT_FAILED, "not_covered"),
            Error::VerificationFailed(_) => (EXIT_FAILED, "verification_failed"),
            Error::VolumeMismatch(..) => (EXIT_FAILED, "volume_mismatch"),
            Error::Internal(_) => (EXIT_FAILED, "internal"),
            _ => (EXIT_USAGE, "invalid_input"),
        };
        let witness = match e {
            Error::NotCovered { witness } => Some(witness),
            _ => None,
        };
        CliError {
            code,
            kind,
            message,
            witness,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn rat(x: &Q) -> Value {
    Value::String(format!("{}/{}", x.numer(), x.denom()))
}

pub fn rat_vec(v: &[Q]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

pub fn rat_mat(m: &[Vec<Q>]) -> Value {
    Value::Array(m.iter().map(|r| rat_vec(r)).collect())
}

pub fn parse_rat(s: &str) -> CliResult<Q> {
    let s = s.trim();
    let bad = || CliError::format(format!("not a rational: {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: pfr_core::num::Int = n.trim().parse().map_err(|_| bad())?;
            let d: pfr_core::num::Int = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Q::new(n, d))
        }
        None => Ok(Q::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

fn rat_of(v: &Value) -> CliResult<Q> {
    match v {
        Value::String(s) => parse_rat(s),
        Value::Number(n) if n.is_i64() => Ok(Q::from_integer(n.as_i64().unwrap_or(0).into())),
        _ => Err(CliError::format(format!("expected a \"p/q\" string, got {v}"))),
    }
}

fn array<'a>(v: &'a Value, what: &str) -> CliResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| CliError::format(format!("{what}: expected an array")))
}

fn field<'a>(v: &'a Value, key: &str) -> CliResult<&'a Value> {
    v.get(key).ok_or_else(|| CliError::format(format!("missing field {key:?}")))
}

pub fn rat_vec_of(v: &Value, what: &str) -> CliResult<Vec<Q>> {
    array(v, what)?.iter().map(rat_of).collect()
}

pub fn rat_mat_of(v: &Value, what: &str) -> CliResult<Vec<Vec<Q>>> {
    array(v, what)?.iter().map(|r| rat_vec_of(r, what)).collect()
}

fn int_rows_of(v: &Value, what: &str) -> CliResult<Vec<Vec<i64>>> {
    array(v, what)?
        .iter()
        .map(|r| {
            array(r, what)?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| CliError::format(format!("{what}: expected integers"))))
                .collect()
        })
        .collect()
}

pub fn body_json(b: &SymmetricBody) -> Value {
    match b.kind() {
        BodyKind::Ellipsoid => json!({ "type": "ellipsoid", "gram": rat_mat(b.gram().unwrap_or(&Vec::new())) }),
        BodyKind::Polytope => json!({ "type": "polytope", "forms": rat_mat(b.forms().unwrap_or(&Vec::new())) }),
    }
}

pub fn body_from(v: &Value) -> CliResult<SymmetricBody> {
    let ty = field(v, "type")?.as_str().unwrap_or("");
    Ok(match ty {
        "ellipsoid" => SymmetricBody::ellipsoid(rat_mat_of(field(v, "gram")?, "gram")?)?,
        "polytope" => SymmetricBody::polytope(rat_mat_of(field(v, "forms")?, "forms")?)?,
        other => return Err(CliError::format(format!("unknown body type {other:?}"))),
    })
}

pub fn points_json(p: &LatticePointSet) -> Value {
    json!({ "points": p.points, "truncated": p.truncated })
}

pub fn points_from(v: &Value) -> CliResult<(Vec<Vec<i64>>, bool)> {
    let truncated = v.get("truncated").and_then(Value::as_bool).unwrap_or(false);
    Ok((int_rows_of(field(v, "points")?, "points")?, truncated))
}

fn group_name(g: &AmbientGroup) -> &'static str {
    match g.coordinates {
        Coordinates::Integer => "integer",
        Coordinates::Rational => "rational",
    }
}

fn group_from(v: &Value, m: usize) -> CliResult<AmbientGroup> {
    match v.get("group").and_then(Value::as_str).unwrap_or("integer") {
        "integer" => Ok(AmbientGroup::integer(m)),
        "rational" => Ok(AmbientGroup::rational(m)),
        other => Err(CliError::format(format!("unknown group {other:?}"))),
    }
}

pub fn set_json(s: &FiniteSet) -> Value {
    json!({ "m": s.group().m, "group": group_name(s.group()), "elements": rat_mat(&s.elements()) })
}

pub fn set_from(v: &Value) -> CliResult<FiniteSet> {
    let m = field(v, "m")?
        .as_u64()
        .ok_or_else(|| CliError::format("m: expected a non-negative integer"))? as usize;
    let elements = rat_mat_of(field(v, "elements")?, "elements")?;
    if let Some(e) = elements.iter().find(|e| e.len() != m) {
        return Err(CliError::format(format!("element of length {} in a set with m = {m}", e.len())));
    }
    Ok(FiniteSet::new(group_from(v, m)?, &elements)?)
}

fn kind_name(k: ProgressionKind) -> &'static str {
    match k {
        ProgressionKind::Gap => "gap",
        ProgressionKind::Convex => "convex",
        ProgressionKind::Ellipsoid => "ellipsoid",
        ProgressionKind::Skew => "skew",
    }
}

pub fn frame_json(f: &Frame) -> Value {
    json!({ "group": group_name(f.group()), "a0": rat_vec(f.a0()), "gens": rat_mat(f.generators()) })
}

pub fn frame_from(v: &Value) -> CliResult<Frame> {
    let a0 = rat_vec_of(field(v, "a0")?, "a0")?;
    let gens = rat_mat_of(field(v, "gens")?, "gens")?;
    Ok(Frame::new(group_from(v, a0.len())?, a0, gens)?)
}

pub fn progression_json(p: &Progression) -> Value {
    json!({
        "frame": frame_json(p.frame()),
        "body": body_json(p.body()),
        "center": rat_vec(p.center()),
        "kind": kind_name(p.kind()),
    })
}

pub fn progression_from(v: &Value) -> CliResult<Progression> {
    let kind = match field(v, "kind")?.as_str().unwrap_or("") {
        "gap" => ProgressionKind::Gap,
        "convex" => ProgressionKind::Convex,
        "ellipsoid" => ProgressionKind::Ellipsoid,
        "skew" => ProgressionKind::Skew,
        other => return Err(CliError::format(format!("unknown progression kind {other:?}"))),
    };
    let frame = frame_from(field(v, "frame")?)?;
    let body = body_from(field(v, "body")?)?;
    let center = match v.get("center") {
        Some(c) => rat_vec_of(c, "center")?,
        None => vec![Q::zero(); body.dim()],
    };
    Ok(Progression::new(frame, body, center, kind)?)
}

pub fn volume_json(v: &VolumeEstimate) -> Value {
    let method = match v.method {
        VolumeMethod::Exact => "exact",
        VolumeMethod::MonteCarlo => "monte_carlo",
    };
    json!({ "value": v.value, "std_error": v.std_error, "method": method, "samples": v.samples })
}

pub fn exact_real_json(x: &ExactReal) -> Value {
    match x {
        ExactReal::Rational(v) => json!({ "rational": rat(v) }),
        ExactReal::SqrtOf(v) => json!({ "sqrt_of": rat(v) }),
    }
}

fn source_name(s: FitSource) -> &'static str {
    match s {
        FitSource::Mvee => "mvee",
        FitSource::Inertia => "inertia",
        FitSource::LatticeInertia => "lattice_inertia",
    }
}

fn bound_json(b: &Option<CoverBound>) -> Value {
    match b {
        Some(b) => json!({ "lhs": b.lhs, "rhs": volume_json(&b.rhs), "holds": b.holds }),
        None => Value::Null,
    }
}

pub fn rbm_json(r: &RbmReport) -> Value {
    let points: Vec<Value> = r
        .points
        .iter()
        .map(|p| json!({ "t1": p.t1, "t2": p.t2, "ratio": p.ratio, "std_error": p.std_error }))
        .collect();
    json!({ "c": r.c, "std_error": r.std_error, "points": points })
}

pub fn transfer_json(r: &TransferReport) -> Value {
    let scores: Vec<Value> = r
        .scores
        .iter()
        .map(|s| json!({ "source": source_name(s.source), "y": s.y, "z": s.z }))
        .collect();
    let c = &r.counts;
    let k = &r.checks;
    json!({
        "verified": r.verified,
        "failed_checks": failed_checks(&r.checks),
        "surrogate": { "body": body_json(&r.surrogate), "source": source_name(r.surrogate_source) },
        "scores": scores,
        "shift": r.shift,
        "y": r.y,
        "z": r.z,
        "p_prime": progression_json(&r.p_prime),
        "x_prime": set_json(&r.x_prime),
        "counts": {
            "c_points": c.c_points, "b_points": c.b_points, "p_size": c.p_size,
            "y": c.y, "z": c.z, "x": c.x, "x_prime": c.x_prime,
        },
        "b_over_c": rat(&r.b_over_c),
        "y_bound": bound_json(&r.y_bound),
        "z_bound": bound_json(&r.z_bound),
        "rbm": r.rbm.as_ref().map(rbm_json),
        "checks": {
            "y_packing": k.y_packing, "y_covering": k.y_covering,
            "z_packing": k.z_packing, "z_covering": k.z_covering,
            "cover": k.cover, "x_prime_bound": k.x_prime_bound, "b_count_bound": k.b_count_bound,
        },
        "cover_witness": r.cover_witness.as_deref().map(rat_vec),
    })
}

/// Finds `key` in an instance document, or treats the whole document as the object.
pub fn pick<'a>(doc: &'a Value, key: &str) -> &'a Value {
    match doc {
        Value::Object(m) => m.get(key).unwrap_or(doc),
        _ => doc,
    }
}

pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in pairs {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}
