//! Batch front end: one JSON document in, one JSON document out.
//! Input and output schemas are described in `docs/cli.md`.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::covering::is_norm_euclidean;
use crate::data::{table3_orders, AlgebraRecord};
use crate::error::{Error, Result};
use crate::exact_quat::{disc_involution, OrthogonalInvolution, QuatAlgebra, Quaternion, Rational};
use crate::h4_geom::{
    coarse_domain, default_coarse_domain, dirichlet_from_coarse, reduce_point, DomainDescription, Frame, H4Point,
    HalfSpaceH4, SphereSide,
};
use crate::lattice_orders::{
    algebra_disc, has_class_number_one, is_ddagger_order, is_maximal_ddagger_order, order_disc, order_from_strings,
    Order,
};
use crate::order_enum::{candidate_involutions, classify_from};
use crate::twisted_euclid::{Generator, GeneratorWord, QuatMatrix, TwistedRing};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    OrderInfo,
    Gcd,
    Rho,
    Classify,
    Enumerate,
    Dirichlet,
    Reduce,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "dagger", about = "Quaternion orders with orthogonal involution")]
pub struct JobConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    /// Input JSON document; an empty object when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Seed for randomized workloads.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn field<'a>(doc: &'a Value, key: &str) -> Result<&'a Value> {
    doc.get(key).ok_or_else(|| invalid(format!("missing field `{key}`")))
}

fn string_of(v: &Value, what: &str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_i64() => Ok(n.to_string()),
        _ => Err(invalid(format!("`{what}` must be a string or an integer"))),
    }
}

fn rational(v: &Value, what: &str) -> Result<Rational> {
    let s = string_of(v, what)?;
    s.trim().parse::<Rational>().map_err(|_| Error::Parse(format!("`{what}`: not a rational: {s}")))
}

fn quaternion(alg: &crate::exact_quat::Algebra, v: &Value, what: &str) -> Result<Quaternion> {
    Quaternion::parse(alg, &string_of(v, what)?)
}

/// An order with its involution, from a name, a bundled row or an explicit basis.
pub fn parse_order(v: &Value) -> Result<(Order, OrthogonalInvolution)> {
    let rows = |k: usize| -> Result<(Order, OrthogonalInvolution)> {
        let all = table3_orders()?;
        let r = all.get(k).ok_or_else(|| invalid(format!("no bundled order {k}")))?;
        Ok((r.order()?, r.involution()?))
    };
    match v {
        Value::String(name) => {
            let alg = QuatAlgebra::from_ints(-1, -1)?;
            let basis: &[&str] = match name.as_str() {
                "hurwitz" => &["1", "i", "j", "(1+i+j+ij)/2"],
                "lipschitz" => &["1", "i", "j", "ij"],
                _ => return Err(invalid(format!("unknown order name `{name}`"))),
            };
            Ok((order_from_strings(&alg, basis)?, OrthogonalInvolution::standard(&alg)))
        }
        Value::Object(m) if m.contains_key("table3") => {
            let k = m["table3"].as_u64().ok_or_else(|| invalid("`table3` must be a nonnegative integer"))?;
            rows(k as usize)
        }
        Value::Object(m) => {
            let a: AlgebraRecord = serde_json::from_value(field(v, "algebra")?.clone())
                .map_err(|e| Error::Parse(format!("`algebra`: {e}")))?;
            let alg = QuatAlgebra::new(rational(&json!(a.a), "algebra.a")?, rational(&json!(a.b), "algebra.b")?)?;
            let basis = field(v, "basis")?
                .as_array()
                .ok_or_else(|| invalid("`basis` must be an array"))?
                .iter()
                .map(|b| quaternion(&alg, b, "basis"))
                .collect::<Result<Vec<_>>>()?;
            let order = crate::lattice_orders::make_order(&alg, &basis)?;
            let sigma = match m.get("involution") {
                Some(u) => OrthogonalInvolution::new(quaternion(&alg, u, "involution")?)?,
                None => OrthogonalInvolution::standard(&alg),
            };
            Ok((order, sigma))
        }
        _ => Err(invalid("`order` must be a name or an object")),
    }
}

fn strings(qs: &[Quaternion]) -> Value {
    Value::Array(qs.iter().map(|q| Value::String(q.to_string())).collect())
}

fn int_value(n: &num_bigint::BigInt) -> Value {
    match i64::try_from(n) {
        Ok(x) => json!(x),
        Err(_) => json!(n.to_string()),
    }
}

fn order_json(o: &Order) -> Value {
    let alg = o.algebra();
    json!({"algebra": [alg.a().to_string(), alg.b().to_string()], "basis": strings(&o.basis())})
}

fn matrix_json(m: &QuatMatrix) -> Value {
    strings(&[m.a.clone(), m.b.clone(), m.c.clone(), m.d.clone()])
}

fn point_json(p: &H4Point) -> Value {
    json!({"alpha": p.alpha().to_string(), "s": p.s().to_string(), "height_sq": p.height_sq().to_string()})
}

fn halfspace_json(h: &HalfSpaceH4) -> Value {
    match h {
        HalfSpaceH4::Sphere { center, radius_sq, side } => json!({
            "kind": "sphere",
            "center": center.to_string(),
            "radius_sq": radius_sq.to_string(),
            "side": match side { SphereSide::Inside => "inside", SphereSide::Outside => "outside" },
        }),
        HalfSpaceH4::VerticalPlane { normal, offset } => json!({
            "kind": "plane",
            "normal": normal.to_string(),
            "offset": offset.to_string(),
        }),
    }
}

fn word_json(w: &GeneratorWord) -> Value {
    Value::Array(
        w.0.iter()
            .map(|g| match g {
                Generator::Translation(t) => json!({"translation": t.to_string()}),
                Generator::Unit(u) => json!({"unit": u.to_string()}),
                Generator::Inversion => json!("inversion"),
            })
            .collect(),
    )
}

fn order_info(doc: &Value) -> Result<Value> {
    let (o, sigma) = parse_order(field(doc, "order")?)?;
    let ddagger = is_ddagger_order(&o, &sigma);
    let mut out = Map::new();
    out.insert("order".into(), order_json(&o));
    out.insert("disc".into(), int_value(&order_disc(&o)));
    out.insert("disc_H".into(), int_value(&algebra_disc(o.algebra())?));
    out.insert("disc_inv".into(), int_value(&disc_involution(&sigma)));
    out.insert("ddagger".into(), json!(ddagger));
    out.insert("maximal_ddagger".into(), json!(ddagger && is_maximal_ddagger_order(&o, &sigma)?));
    if o.algebra().is_definite() {
        out.insert("class_number_one".into(), json!(has_class_number_one(&o)?));
    }
    Ok(Value::Object(out))
}

fn gcd(doc: &Value) -> Result<Value> {
    let (o, sigma) = parse_order(field(doc, "order")?)?;
    let alg = o.algebra().clone();
    let a = quaternion(&alg, field(doc, "a")?, "a")?;
    let b = quaternion(&alg, field(doc, "b")?, "b")?;
    for (x, name) in [(&a, "a"), (&b, "b")] {
        if !o.contains(x) {
            return Err(invalid(format!("`{name}` = {x} is not in the order")));
        }
    }
    let ring = TwistedRing::new(o, sigma)?;
    let t = ring.twisted_euclidean(&a, &b)?;
    Ok(json!({
        "gcd": t.gcd().to_string(),
        "steps": t.q_list.len(),
        "quotients": strings(&t.q_list),
        "remainders": strings(&t.r_list),
    }))
}

fn rho(doc: &Value) -> Result<Value> {
    let (o, sigma) = parse_order(field(doc, "order")?)?;
    let (euclidean, cert) = is_norm_euclidean(&o, &sigma)?;
    let mut out = serde_json::to_value(&cert).map_err(|e| invalid(e.to_string()))?;
    out["euclidean"] = json!(euclidean);
    Ok(out)
}

fn classify() -> Result<Value> {
    let report = classify_from(&table3_orders()?)?;
    let count = |t: &str| report.tagged(t).count();
    let mut out = serde_json::to_value(&report).map_err(|e| invalid(e.to_string()))?;
    out["partition"] = json!({
        "table1": count("1"),
        "table3": report.maximal().count(),
        "table4": count("4"),
    });
    Ok(out)
}

fn enumerate(doc: &Value) -> Result<Value> {
    let (o, _) = parse_order(field(doc, "order")?)?;
    let cands = candidate_involutions(&o)?;
    Ok(json!({
        "order": order_json(&o),
        "candidates": cands.iter().map(|c| json!({
            "xi": c.xi.to_string(),
            "standard_basis": [c.standard_basis.0.to_string(), c.standard_basis.1.to_string()],
            "rebased": order_json(&c.rebased_order),
            "disc_inv": int_value(&c.disc_invol),
        })).collect::<Vec<_>>(),
    }))
}

fn coarse_for(doc: &Value, o: &Order, sigma: &OrthogonalInvolution) -> Result<DomainDescription> {
    match (doc.get("alpha"), doc.get("s")) {
        (Some(a), Some(s)) => coarse_domain(o, sigma, &quaternion(o.algebra(), a, "alpha")?, &rational(s, "s")?),
        (None, None) => default_coarse_domain(o, sigma),
        _ => Err(invalid("give both `alpha` and `s`, or neither")),
    }
}

fn dirichlet(doc: &Value) -> Result<Value> {
    let (o, sigma) = parse_order(field(doc, "order")?)?;
    let d = dirichlet_from_coarse(coarse_for(doc, &o, &sigma)?)?;
    Ok(json!({
        "base_point": point_json(&d.base_point),
        "halfspaces": d.halfspaces.iter().map(halfspace_json).collect::<Vec<_>>(),
        "gamma_prime": d.gamma_prime.iter().map(matrix_json).collect::<Vec<_>>(),
        "cusps": d.cusp_count,
        "c_hat": d.c_hat.as_ref().map(|c| c.to_string()),
        "height_floor_sq": d.height_floor_sq.to_string(),
    }))
}

fn random_point(frame: &Frame, rng: &mut ChaCha8Rng) -> Result<H4Point> {
    let basis = frame.sigma().fixed_space();
    let mut alpha = Quaternion::zero(frame.sigma().algebra());
    for b in &basis {
        let c = Rational::new(rng.gen_range(-300..=300).into(), 100.into());
        alpha = &alpha + &b.scale(&c);
    }
    let s = Rational::new(rng.gen_range(1..=300).into(), 100.into());
    frame.point(alpha, s)
}

fn reduce(doc: &Value, seed: u64) -> Result<Value> {
    let (o, sigma) = parse_order(field(doc, "order")?)?;
    let coarse = coarse_for(doc, &o, &sigma)?;
    let domain = match doc.get("domain").and_then(Value::as_str).unwrap_or("coarse") {
        "coarse" => coarse,
        "dirichlet" => dirichlet_from_coarse(coarse)?,
        other => return Err(invalid(format!("unknown domain `{other}`"))),
    };
    let frame = Frame::new(&sigma);
    let points: Vec<H4Point> = match (doc.get("point"), doc.get("samples")) {
        (Some(p), None) => vec![frame.point(quaternion(o.algebra(), field(p, "alpha")?, "point.alpha")?, rational(field(p, "s")?, "point.s")?)?],
        (None, Some(n)) => {
            let n = n.as_u64().ok_or_else(|| invalid("`samples` must be a nonnegative integer"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| random_point(&frame, &mut rng)).collect::<Result<_>>()?
        }
        _ => return Err(invalid("give exactly one of `point` and `samples`")),
    };
    let mut results = Vec::new();
    for p in &points {
        let r = reduce_point(&domain, p)?;
        let monotone = r.inversion_heights.windows(2).all(|w| w[0] <= w[1]);
        results.push(json!({
            "input": point_json(p),
            "word": word_json(&r.word),
            "point": point_json(&r.point),
            "inversion_heights": r.inversion_heights.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
            "heights_monotone": monotone,
            "steps": r.steps,
        }));
    }
    Ok(json!({"base_point": point_json(&domain.base_point), "results": results}))
}

fn read_input(path: Option<&Path>) -> Result<Value> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?,
        None => return Ok(json!({})),
    };
    let v: Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    if !v.is_object() {
        return Err(invalid("input must be a JSON object"));
    }
    Ok(v)
}

/// Run one job and return its report.
pub fn run(config: &JobConfig) -> Result<Value> {
    let doc = read_input(config.input.as_deref())?;
    match config.command {
        Command::OrderInfo => order_info(&doc),
        Command::Gcd => gcd(&doc),
        Command::Rho => rho(&doc),
        Command::Classify => classify(),
        Command::Enumerate => enumerate(&doc),
        Command::Dirichlet => dirichlet(&doc),
        Command::Reduce => reduce(&doc, config.seed),
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, path)
}

pub fn error_json(e: &Error) -> Value {
    json!({"error": {"code": e.code(), "message": e.to_string()}})
}

/// Process exit status for `config`: 0 on success, 1 on any error.
pub fn main_with(config: &JobConfig) -> i32 {
    match run(config) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("values serialize") + "\n";
            let written = match &config.output {
                Some(p) => write_atomic(p, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    eprintln!("{}", error_json(&Error::Validation(format!("cannot write output: {e}"))));
                    1
                }
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}
