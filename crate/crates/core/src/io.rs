//! JSON formats for PDBs, views, representations, distributions and reports.
//! Rationals are strings `"a/b"`; fractional powers are factor lists
//! `[{"base":"1/5","exp":"1/2"}]`.

use std::collections::BTreeMap;

use num::BigRational;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::compilers::{
    BidCompilationReport, CompileError, ConditionEliminationReport, DaggerReport, DaggerVerdict, DivergentAssignment,
    Elimination, RepresentableAssignment, Representation, SegmentationReport,
};
use crate::diagnostics::{BoundReport, DisjointBoundRow, ImageMomentBound, MomentCheck, Witness};
use crate::probspace::{
    bid_new, format_rational, infer_schema, parse_rational, ti_new, Distribution, Equality, FactFamily, Mass,
    MomentReport, ParamKind, Pdb, PdbError, PowProb, PowProbError, Prob, ProbError, Tail, Template, TiPdb,
    WorldFamily,
};
use crate::relmodel::{
    format_formula, parse_formula, parse_term, Atom, Fact, Formula, Instance, ParseError, Query, QueryError, Schema,
    SchemaError, View,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Shape(String),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    PowProb(#[from] PowProbError),
    #[error(transparent)]
    Pdb(#[from] PdbError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Compile(#[from] CompileError),
}

fn shape(msg: impl Into<String>) -> IoError {
    IoError::Shape(msg.into())
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, IoError> {
    v.get(key).ok_or_else(|| shape(format!("missing field `{key}`")))
}

fn str_field<'a>(v: &'a Value, key: &str) -> Result<&'a str, IoError> {
    field(v, key)?.as_str().ok_or_else(|| shape(format!("`{key}` must be a string")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>, IoError> {
    v.as_array().ok_or_else(|| shape(format!("{what} must be an array")))
}

fn rational(v: &Value) -> Result<BigRational, IoError> {
    match v {
        Value::String(s) => Ok(parse_rational(s)?),
        Value::Number(n) if n.is_i64() => Ok(BigRational::from_integer(n.as_i64().expect("checked").into())),
        _ => Err(shape(format!("expected a rational \"a/b\", got {v}"))),
    }
}

pub fn rational_json(r: &BigRational) -> Value {
    Value::String(format_rational(r))
}

// ---- atoms, facts, instances

pub fn parse_atom(v: &Value) -> Result<Atom, IoError> {
    match v {
        Value::Number(n) => n.as_i64().map(Atom::Int).ok_or_else(|| shape(format!("atom {n} is not an i64"))),
        Value::String(s) => Ok(Atom::Str(s.clone())),
        Value::Object(o) => {
            if let Some(i) = o.get("copy").and_then(Value::as_u64) {
                Ok(Atom::CopyIdx(i as u32))
            } else if o.get("bot") == Some(&Value::Bool(true)) {
                Ok(Atom::Bot)
            } else {
                Err(shape(format!("unknown atom {v}")))
            }
        }
        _ => Err(shape(format!("unknown atom {v}"))),
    }
}

pub fn atom_json(a: &Atom) -> Value {
    match a {
        Atom::Int(i) => json!(i),
        Atom::Str(s) => json!(s),
        Atom::CopyIdx(i) => json!({ "copy": i }),
        Atom::Bot => json!({ "bot": true }),
    }
}

pub fn parse_fact(v: &Value) -> Result<Fact, IoError> {
    let rel = str_field(v, "rel")?;
    let args = match v.get("args") {
        Some(a) => array(a, "args")?.iter().map(parse_atom).collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    Ok(Fact::new(rel, args))
}

pub fn fact_json(f: &Fact) -> Value {
    json!({ "rel": f.rel, "args": f.args.iter().map(atom_json).collect::<Vec<_>>() })
}

pub fn parse_instance(v: &Value) -> Result<Instance, IoError> {
    let facts = match v {
        Value::Object(_) => field(v, "facts")?,
        _ => v,
    };
    Ok(Instance::new(array(facts, "instance")?.iter().map(parse_fact).collect::<Result<Vec<_>, _>>()?))
}

pub fn instance_json(i: &Instance) -> Value {
    Value::Array(i.iter().map(fact_json).collect())
}

// ---- probabilities

fn parse_powprob(v: &Value) -> Result<PowProb, IoError> {
    let factors = array(v, "factor list")?
        .iter()
        .map(|f| Ok((Prob::new(rational(field(f, "base")?)?)?, rational(field(f, "exp")?)?)))
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(PowProb::new(factors)?)
}

pub fn powprob_json(p: &PowProb) -> Value {
    Value::Array(
        p.factors()
            .iter()
            .map(|(b, e)| json!({ "base": b.to_string(), "exp": format_rational(e) }))
            .collect(),
    )
}

pub fn marginal_json(m: &crate::probspace::Marginal) -> Value {
    match m {
        crate::probspace::Marginal::Exact(p) => json!(p.to_string()),
        crate::probspace::Marginal::Power(p) => powprob_json(p),
    }
}

/// Exact masses as `"a/b"`; algebraic ones as `{"exact": …, "approx": …}`.
pub fn mass_json(m: &Mass) -> Value {
    match m.as_rational() {
        Some(r) => rational_json(r),
        None => json!({ "exact": m.to_string(), "approx": m.to_f64() }),
    }
}

// ---- PDBs

fn parse_schema(v: Option<&Value>) -> Result<Option<Schema>, IoError> {
    let Some(v) = v else { return Ok(None) };
    let rels = array(v, "schema")?
        .iter()
        .map(|r| {
            let arity = field(r, "arity")?.as_u64().ok_or_else(|| shape("arity must be a nonnegative integer"))?;
            Ok((str_field(r, "name")?.to_string(), arity as usize))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(Some(Schema::new(rels)?))
}

fn schema_json(s: &Schema) -> Value {
    Value::Array(s.relations().map(|(r, a)| json!({ "name": r, "arity": a })).collect())
}

fn parse_weighted_facts(v: &Value) -> Result<Vec<(Fact, crate::probspace::Marginal)>, IoError> {
    array(v, "facts")?
        .iter()
        .map(|f| {
            let p = field(f, "p")?;
            let m = match p {
                Value::Array(_) => crate::probspace::Marginal::power(parse_powprob(p)?),
                _ => Prob::new(rational(p)?)?.into(),
            };
            Ok((parse_fact(f)?, m))
        })
        .collect()
}

fn weighted_fact_json(f: &Fact, p: Value) -> Value {
    let mut o = fact_json(f);
    o["p"] = p;
    o
}

fn parse_family(v: &Value) -> Result<FactFamily, IoError> {
    let kind = match str_field(v, "kind")? {
        "inverse_poly" => ParamKind::InversePolynomial {
            c: rational(field(v, "c")?)?,
            s: field(v, "s")?.as_u64().ok_or_else(|| shape("`s` must be an integer"))? as u32,
            d: rational(field(v, "d")?)?,
        },
        "geometric" => ParamKind::Geometric {
            a: rational(field(v, "a")?)?,
            ratio: rational(field(v, "ratio")?)?,
        },
        k => return Err(shape(format!("unknown family kind `{k}`"))),
    };
    let t = field(v, "template")?;
    let template = if let Some(r) = t.get("unary").and_then(Value::as_str) {
        Template::UnaryIdentity(r.to_string())
    } else if let Some(r) = t.get("pair").and_then(Value::as_str) {
        Template::DisjointPair(r.to_string())
    } else {
        return Err(shape("template must be {\"unary\": R} or {\"pair\": R}"));
    };
    Ok(FactFamily::Parametric { kind, template })
}

fn family_json(kind: &ParamKind, template: &Template) -> Value {
    let mut o = match kind {
        ParamKind::InversePolynomial { c, s, d } => {
            json!({ "kind": "inverse_poly", "c": format_rational(c), "s": s, "d": format_rational(d) })
        }
        ParamKind::Geometric { a, ratio } => {
            json!({ "kind": "geometric", "a": format_rational(a), "ratio": format_rational(ratio) })
        }
    };
    o["template"] = match template {
        Template::UnaryIdentity(r) => json!({ "unary": r }),
        Template::DisjointPair(r) => json!({ "pair": r }),
    };
    o
}

fn parse_ti(v: &Value, schema: Option<Schema>) -> Result<TiPdb, IoError> {
    let family = match (v.get("family"), v.get("facts")) {
        (Some(f), _) => parse_family(f)?,
        (None, Some(f)) => FactFamily::Explicit(parse_weighted_facts(f)?),
        (None, None) => FactFamily::Explicit(Vec::new()),
    };
    let schema = match schema {
        Some(s) => s,
        None => match &family {
            FactFamily::Explicit(fs) => infer_schema(fs.iter().map(|(f, _)| f))?,
            FactFamily::Parametric { template, .. } => Schema::new([(template.relation().to_string(), template.arity())])?,
        },
    };
    Ok(ti_new(schema, family)?)
}

pub fn parse_pdb(v: &Value) -> Result<Pdb, IoError> {
    let schema = parse_schema(v.get("schema"))?;
    match str_field(v, "kind")? {
        "ti" => Ok(Pdb::Ti(parse_ti(v, schema)?)),
        "bid" => {
            let blocks = array(field(v, "blocks")?, "blocks")?
                .iter()
                .map(|b| {
                    parse_weighted_facts(b)?
                        .into_iter()
                        .map(|(f, m)| m.as_exact().cloned().map(|p| (f, p)).ok_or(PdbError::NonRational.into()))
                        .collect::<Result<Vec<_>, IoError>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let schema = match schema {
                Some(s) => s,
                None => infer_schema(blocks.iter().flatten().map(|(f, _)| f))?,
            };
            Ok(Pdb::Bid(bid_new(schema, blocks)?))
        }
        "explicit" => {
            let worlds = array(field(v, "worlds")?, "worlds")?
                .iter()
                .map(|w| Ok((parse_instance(field(w, "facts")?)?, Prob::new(rational(field(w, "p")?)?)?)))
                .collect::<Result<Vec<_>, IoError>>()?;
            if let Some(s) = &schema {
                for (w, _) in &worlds {
                    for f in w.iter() {
                        s.check_fact(f)?;
                    }
                }
            }
            Ok(Pdb::Explicit(Distribution::explicit(worlds)?))
        }
        "world_family" => match str_field(v, "family")? {
            "square_exponential" => Ok(Pdb::Family(WorldFamily::SquareExponential)),
            "doubling_sizes" => Ok(Pdb::Family(WorldFamily::DoublingSizes)),
            f => Err(shape(format!("unknown world family `{f}`"))),
        },
        k => Err(shape(format!("unknown PDB kind `{k}`"))),
    }
}

pub fn ti_json(ti: &TiPdb) -> Value {
    let mut o = json!({ "kind": "ti", "schema": schema_json(&ti.schema) });
    match &ti.family {
        FactFamily::Explicit(fs) => {
            o["facts"] = Value::Array(fs.iter().map(|(f, m)| weighted_fact_json(f, marginal_json(m))).collect());
        }
        FactFamily::Parametric { kind, template } => o["family"] = family_json(kind, template),
    }
    o
}

pub fn pdb_json(pdb: &Pdb) -> Value {
    match pdb {
        Pdb::Ti(ti) => ti_json(ti),
        Pdb::Bid(bid) => {
            let blocks: Vec<Value> = bid
                .blocks()
                .iter()
                .map(|b| Value::Array(b.iter().map(|(f, p)| weighted_fact_json(f, json!(p.to_string()))).collect()))
                .collect();
            json!({ "kind": "bid", "schema": schema_json(&bid.schema), "blocks": blocks })
        }
        Pdb::Explicit(d) => {
            let mut o = distribution_json(d);
            o["kind"] = json!("explicit");
            o
        }
        Pdb::Family(f) => json!({
            "kind": "world_family",
            "family": match f {
                WorldFamily::SquareExponential => "square_exponential",
                WorldFamily::DoublingSizes => "doubling_sizes",
            }
        }),
    }
}

pub fn distribution_json(d: &Distribution) -> Value {
    let worlds: Vec<Value> = d.iter().map(|(w, m)| json!({ "facts": instance_json(w), "p": mass_json(m) })).collect();
    json!({ "complete": d.is_complete(), "total": mass_json(&d.total()), "worlds": worlds })
}

pub fn equality_json(e: &Equality) -> Value {
    match e {
        Equality::Equal => json!({ "result": "Equal" }),
        Equality::NotEqual(w) => json!({ "result": "NotEqual", "witness": instance_json(w) }),
        Equality::Indeterminate(w) => json!({ "result": "Indeterminate", "witness": instance_json(w) }),
    }
}

// ---- views and representations

pub fn parse_view(v: &Value) -> Result<View, IoError> {
    let obj = v.as_object().ok_or_else(|| shape("view must be an object of named queries"))?;
    let queries = obj
        .iter()
        .map(|(name, q)| {
            let head = array(field(q, "head")?, "head")?
                .iter()
                .map(|t| match t {
                    Value::String(s) => Ok(parse_term(s)?),
                    Value::Number(_) => Ok(crate::relmodel::Term::Const(parse_atom(t)?)),
                    _ => Err(shape("head entries must be strings or integers")),
                })
                .collect::<Result<Vec<_>, IoError>>()?;
            let body = parse_formula(str_field(q, "body")?)?;
            Ok((name.clone(), Query::new(head, body)?))
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(View::new(queries))
}

pub fn view_json(view: &View) -> Value {
    let mut o = Map::new();
    for (name, q) in view.queries() {
        let head: Vec<Value> = q.head.iter().map(|t| json!(t.to_string())).collect();
        o.insert(name.to_string(), json!({ "head": head, "body": format_formula(&q.body) }));
    }
    Value::Object(o)
}

pub fn parse_condition(s: &str) -> Result<Formula, IoError> {
    Ok(parse_formula(s)?)
}

pub fn parse_representation(v: &Value) -> Result<Representation, IoError> {
    let Pdb::Ti(base) = parse_pdb(field(v, "base")?)? else {
        return Err(shape("representation base must be a TI-PDB"));
    };
    let condition = match v.get("condition") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(parse_formula(s)?),
        Some(_) => return Err(shape("condition must be a formula string or null")),
    };
    Ok(Representation::new(base, condition, parse_view(field(v, "view")?)?)?)
}

pub fn representation_json(r: &Representation) -> Value {
    json!({
        "base": ti_json(&r.base),
        "condition": r.condition.as_ref().map(format_formula),
        "view": view_json(&r.view),
    })
}

// ---- reports

pub fn bid_report_json(r: &BidCompilationReport) -> Value {
    let blocks: Vec<Value> = r
        .blocks
        .iter()
        .map(|b| {
            let facts: Vec<Value> = b
                .facts
                .iter()
                .map(|(f, p, q)| json!({ "fact": fact_json(f), "p": p.to_string(), "q": q.to_string() }))
                .collect();
            json!({ "residual": b.residual.to_string(), "facts": facts })
        })
        .collect();
    json!({ "blocks": blocks })
}

pub fn condition_report_json(r: &ConditionEliminationReport) -> Value {
    json!({
        "i0": instance_json(&r.i0),
        "p_phi": r.p_phi.to_string(),
        "p_0": r.p_0.to_string(),
        "p_psi": r.p_psi.to_string(),
        "k": r.k,
        "p_rep": r.p_rep.to_string(),
        "p_bot": r.p_bot.to_string(),
    })
}

pub fn elimination_json(e: &Elimination) -> Value {
    match e {
        Elimination::AlwaysTrue => json!({ "case": "always_true" }),
        Elimination::SingleWorld(w) => json!({ "case": "single_world", "world": instance_json(w) }),
        Elimination::General(r) => json!({ "case": "general", "report": condition_report_json(r) }),
    }
}

pub fn segmentation_report_json(r: &SegmentationReport) -> Value {
    let instances: Vec<Value> = r
        .instances
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "instance": instance_json(&e.instance),
                "p": e.p.to_string(),
                "segments": e.segments,
                "q": powprob_json(&e.q),
            })
        })
        .collect();
    json!({ "c": r.c, "relation": r.relation, "tagged": r.tagged, "instances": instances })
}

pub fn tail_json(t: &Tail) -> Value {
    match t {
        Tail::Bound(b) => json!({ "bound": format_rational(b) }),
        Tail::Infinite => json!("infinite"),
        Tail::Unknown => json!("unknown"),
    }
}

pub fn moment_report_json(r: &MomentReport) -> Value {
    json!({ "k": r.k, "partial": format_rational(&r.partial), "tail": tail_json(&r.tail) })
}

pub fn image_moment_json(r: &ImageMomentBound) -> Value {
    json!({ "k": r.k, "partial_bound": format_rational(&r.partial), "tail": tail_json(&r.tail) })
}

pub fn moment_check_json(r: &MomentCheck) -> Value {
    json!({ "k": r.k, "moment": format_rational(&r.moment), "bound": format_rational(&r.bound), "holds": r.holds })
}

pub fn dagger_report_json(r: &DaggerReport) -> Value {
    let verdict = match r.verdict {
        DaggerVerdict::Holds => "Holds",
        DaggerVerdict::Diverges => "Diverges",
        DaggerVerdict::Unknown => "Unknown",
    };
    json!({
        "verdict": verdict,
        "c": r.c,
        "horizon": r.horizon,
        "dagger_partial": r.dagger_partial,
        "ddagger_partial": r.ddagger_partial,
        "certificate": r.certificate,
    })
}

pub fn bound_report_json(r: &BoundReport) -> Value {
    json!({
        "target": instance_json(&r.target),
        "a_star": r.a_star.iter().map(atom_json).collect::<Vec<_>>(),
        "f_star": r.f_star.iter().map(fact_json).collect::<Vec<_>>(),
        "r": r.r,
        "bound": mass_json(&r.bound),
        "actual": mass_json(&r.actual),
        "holds": r.holds,
    })
}

pub fn disjoint_rows_json(rows: &[DisjointBoundRow]) -> Value {
    Value::Array(
        rows.iter()
            .map(|r| json!({ "n": r.n, "d_n": r.d, "value": r.value, "target": r.target, "fails": r.fails }))
            .collect(),
    )
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::MutualExclusive(f, g) => json!({ "kind": "MutualExclusive", "facts": [fact_json(f), fact_json(g)] }),
        Witness::NoMaxWorld(a, b) => json!({ "kind": "NoMaxWorld", "worlds": [instance_json(a), instance_json(b)] }),
        Witness::MaxWorld(d) => json!({ "kind": "MaxWorld", "world": instance_json(d) }),
    }
}

pub fn representable_json(a: &RepresentableAssignment) -> Value {
    let worlds: Vec<Value> = a
        .worlds
        .iter()
        .map(|w| json!({ "facts": instance_json(&w.instance), "z": format_rational(&w.z), "p": w.p.to_string() }))
        .collect();
    json!({
        "normalizer": format_rational(&a.normalizer),
        "worlds": worlds,
        "terms": a.terms.iter().map(mass_json).collect::<Vec<_>>(),
    })
}

pub fn divergent_json(a: &DivergentAssignment) -> Value {
    let worlds: Vec<Value> =
        a.worlds.iter().map(|(w, p)| json!({ "facts": instance_json(w), "p": p.to_string() })).collect();
    json!({ "worlds": worlds, "selected": a.selected })
}

/// Parses a JSON text.
pub fn from_str(text: &str) -> Result<Value, IoError> {
    Ok(serde_json::from_str(text)?)
}

/// Canonical pretty rendering (object keys sorted).
pub fn to_string(v: &Value) -> String {
    let sorted: BTreeMap<String, Value> = match v {
        Value::Object(o) => o.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        _ => return serde_json::to_string_pretty(v).expect("serialisable"),
    };
    serde_json::to_string_pretty(&sorted).expect("serialisable")
}
