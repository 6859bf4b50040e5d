//! JSON form of [`FamilySpec`]: `{"dim": n, "node": {"kind": ..., ...}}`.
//!
//! Node kinds and their fields:
//!
//! | kind       | fields                                                    |
//! |------------|-----------------------------------------------------------|
//! | `constant` | `matrix`: `{"dim", "re", "im"}` row-major                 |
//! | `jordan`   | `eigenvalue`: number or `[re, im]`                        |
//! | `diag_expr`| `entries`: expressions in `h`, one per diagonal slot      |
//! | `h_scaled` | `inner`: node                                             |
//! | `sum`      | `terms`: nodes                                            |
//! | `product`  | `factors`: nodes, multiplied left to right                |
//! | `random`   | `seed`: unsigned integer, `scale`: number                 |
//! | `funcalc`  | `inner`: node, `expr`: text, `contour`: `{"center", "radius", "nodes"}` |
//!
//! Validation errors carry the JSON pointer of the offending value.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::expr::FuncExpr;
use crate::family::{FamilyNode, FamilySpec};
use crate::funcalc::{family_funcalc_with_source, ContourSpec};
use crate::linalg::{ComplexMatrix, C64};
use crate::report::{to_json_string, write_report};

pub const KINDS: [&str; 8] = [
    "constant",
    "jordan",
    "diag_expr",
    "h_scaled",
    "sum",
    "product",
    "random",
    "funcalc",
];

pub fn family_to_json(spec: &FamilySpec) -> Value {
    json!({ "dim": spec.dim(), "node": node_to_json(spec) })
}

fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

fn node_to_json(spec: &FamilySpec) -> Value {
    match spec.node() {
        FamilyNode::Constant(m) => json!({"kind": "constant", "matrix": m.to_json()}),
        FamilyNode::Jordan { eigenvalue } => json!({"kind": "jordan", "eigenvalue": complex_json(*eigenvalue)}),
        FamilyNode::DiagExpr(entries) => json!({
            "kind": "diag_expr",
            "entries": entries.iter().map(|e| e.source.clone()).collect::<Vec<_>>(),
        }),
        FamilyNode::HScaled(inner) => json!({"kind": "h_scaled", "inner": node_to_json(inner)}),
        FamilyNode::Sum(terms) => json!({
            "kind": "sum",
            "terms": terms.iter().map(node_to_json).collect::<Vec<_>>(),
        }),
        FamilyNode::Product(factors) => json!({
            "kind": "product",
            "factors": factors.iter().map(node_to_json).collect::<Vec<_>>(),
        }),
        FamilyNode::SeededRandom { seed, scale } => json!({"kind": "random", "seed": seed, "scale": scale}),
        FamilyNode::Funcalc(d) => json!({
            "kind": "funcalc",
            "inner": node_to_json(d.inner()),
            "expr": d.source(),
            "contour": {
                "center": complex_json(d.contour().center()),
                "radius": d.contour().radius(),
                "nodes": d.contour().nodes(),
            },
        }),
    }
}

pub fn family_from_json(value: &Value) -> Result<FamilySpec> {
    let obj = object(value, "")?;
    allow_keys(obj, "", &["dim", "node"])?;
    let dim = obj
        .get("dim")
        .and_then(Value::as_u64)
        .filter(|&d| d >= 1)
        .ok_or_else(|| Error::schema("/dim", "expected a positive integer"))? as usize;
    let node = obj.get("node").ok_or_else(|| Error::schema("/node", "missing"))?;
    parse_node(node, dim, "/node")
}

fn object<'a>(value: &'a Value, pointer: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::schema(pointer, "expected an object"))
}

fn allow_keys(obj: &Map<String, Value>, pointer: &str, allowed: &[&str]) -> Result<()> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::schema(format!("{pointer}/{k}"), "unexpected field")),
        None => Ok(()),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, pointer: &str, key: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::schema(format!("{pointer}/{key}"), "missing"))
}

fn parse_complex(value: &Value, pointer: &str) -> Result<C64> {
    let bad = || Error::schema(pointer, "expected a number or [re, im]");
    let z = match value {
        Value::Number(n) => C64::new(n.as_f64().ok_or_else(bad)?, 0.0),
        Value::Array(a) if a.len() == 2 => C64::new(a[0].as_f64().ok_or_else(bad)?, a[1].as_f64().ok_or_else(bad)?),
        _ => return Err(bad()),
    };
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(bad());
    }
    Ok(z)
}

fn node_list(obj: &Map<String, Value>, pointer: &str, key: &str, dim: usize) -> Result<Vec<FamilySpec>> {
    let path = format!("{pointer}/{key}");
    let items = field(obj, pointer, key)?
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::schema(&path, "expected a non-empty array of nodes"))?;
    items
        .iter()
        .enumerate()
        .map(|(i, v)| parse_node(v, dim, &format!("{path}/{i}")))
        .collect()
}

fn parse_node(value: &Value, dim: usize, pointer: &str) -> Result<FamilySpec> {
    let obj = object(value, pointer)?;
    let kind_ptr = format!("{pointer}/kind");
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::schema(&kind_ptr, "expected a string"))?;
    let at = |e: Error, key: &str| -> Error {
        match e {
            e @ Error::Schema { .. } => e,
            other => Error::schema(format!("{pointer}/{key}"), other.to_string()),
        }
    };
    match kind {
        "constant" => {
            allow_keys(obj, pointer, &["kind", "matrix"])?;
            let mptr = format!("{pointer}/matrix");
            let m = ComplexMatrix::from_json(field(obj, pointer, "matrix")?, &mptr)?;
            if m.dim() != dim {
                return Err(Error::schema(
                    format!("{mptr}/dim"),
                    format!("matrix dimension {} differs from family dimension {dim}", m.dim()),
                ));
            }
            Ok(FamilySpec::constant(m))
        }
        "jordan" => {
            allow_keys(obj, pointer, &["kind", "eigenvalue"])?;
            let eig = parse_complex(field(obj, pointer, "eigenvalue")?, &format!("{pointer}/eigenvalue"))?;
            FamilySpec::jordan(dim, eig)
        }
        "diag_expr" => {
            allow_keys(obj, pointer, &["kind", "entries"])?;
            let path = format!("{pointer}/entries");
            let items = field(obj, pointer, "entries")?
                .as_array()
                .ok_or_else(|| Error::schema(&path, "expected an array of strings"))?;
            if items.len() != dim {
                return Err(Error::schema(
                    &path,
                    format!("expected {dim} entries, found {}", items.len()),
                ));
            }
            let sources = items
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_str()
                        .ok_or_else(|| Error::schema(format!("{path}/{i}"), "expected a string"))
                })
                .collect::<Result<Vec<_>>>()?;
            for (i, s) in sources.iter().enumerate() {
                crate::family::DiagEntry::parse(s).map_err(|e| at(e, &format!("entries/{i}")))?;
            }
            FamilySpec::diag_expr(&sources)
        }
        "h_scaled" => {
            allow_keys(obj, pointer, &["kind", "inner"])?;
            let inner = parse_node(field(obj, pointer, "inner")?, dim, &format!("{pointer}/inner"))?;
            Ok(FamilySpec::h_scaled(inner))
        }
        "sum" => {
            allow_keys(obj, pointer, &["kind", "terms"])?;
            FamilySpec::sum(node_list(obj, pointer, "terms", dim)?)
        }
        "product" => {
            allow_keys(obj, pointer, &["kind", "factors"])?;
            FamilySpec::product(node_list(obj, pointer, "factors", dim)?)
        }
        "random" => {
            allow_keys(obj, pointer, &["kind", "seed", "scale"])?;
            let seed = field(obj, pointer, "seed")?
                .as_u64()
                .ok_or_else(|| Error::schema(format!("{pointer}/seed"), "expected an unsigned integer"))?;
            let scale = field(obj, pointer, "scale")?
                .as_f64()
                .filter(|s| s.is_finite())
                .ok_or_else(|| Error::schema(format!("{pointer}/scale"), "expected a finite number"))?;
            FamilySpec::random(dim, seed, scale)
        }
        "funcalc" => {
            allow_keys(obj, pointer, &["kind", "inner", "expr", "contour"])?;
            let inner = parse_node(field(obj, pointer, "inner")?, dim, &format!("{pointer}/inner"))?;
            let source = field(obj, pointer, "expr")?
                .as_str()
                .ok_or_else(|| Error::schema(format!("{pointer}/expr"), "expected a string"))?;
            let expr = FuncExpr::parse(source).map_err(|e| at(e.into(), "expr"))?;
            let cptr = format!("{pointer}/contour");
            let cobj = object(field(obj, pointer, "contour")?, &cptr)?;
            allow_keys(cobj, &cptr, &["center", "radius", "nodes"])?;
            let center = parse_complex(field(cobj, &cptr, "center")?, &format!("{cptr}/center"))?;
            let radius = field(cobj, &cptr, "radius")?
                .as_f64()
                .ok_or_else(|| Error::schema(format!("{cptr}/radius"), "expected a number"))?;
            let nodes = match cobj.get("nodes") {
                Some(v) => v
                    .as_u64()
                    .ok_or_else(|| Error::schema(format!("{cptr}/nodes"), "expected an unsigned integer"))?
                    as usize,
                None => crate::funcalc::DEFAULT_NODES,
            };
            let contour = ContourSpec::new(center, radius, nodes).map_err(|e| at(e, "contour"))?;
            Ok(family_funcalc_with_source(&inner, &expr, source, &contour))
        }
        other => Err(Error::schema(
            kind_ptr,
            format!("unknown kind `{other}`; expected one of {}", KINDS.join(", ")),
        )),
    }
}

/// Parses a family from JSON text.
pub fn family_from_str(text: &str) -> Result<FamilySpec> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::schema("", format!("invalid JSON: {e}")))?;
    family_from_json(&value)
}

pub fn load_family(path: &Path) -> Result<FamilySpec> {
    family_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_family(spec: &FamilySpec, path: &Path) -> Result<()> {
    write_report(path, &to_json_string(&family_to_json(spec)))
}
