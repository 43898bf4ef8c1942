//! Text descriptors (`kind:key=val,...`) and JSON documents for subequations.
//!
//! | descriptor | family |
//! |---|---|
//! | `poscone:n`, `posconec:n` | real / complex positive cone |
//! | `flm:l0=..,mu=..,n=..[,m=..]`, `flmc:...` | `A >= l0 p p^* + mu`, with `mu` padded to `diag(mu I_n, 0_m)` |
//! | `ball:n=..,r=..`, `ballc:...` | gradient ball of radius `r` |
//!
//! Any descriptor may add `delta=..` to take the perturbed family.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{Flags, MuField, MuTable, Subequation};
use num_traits::Zero;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, SelfAdjoint};
use crate::scalar::{Entry, Flavor, Scalar};
use crate::C64;

/// A double-precision subequation of either flavour.
#[derive(Clone, Debug)]
pub enum AnySubequation {
    Real(Subequation<f64>),
    Complex(Subequation<C64>),
}

impl AnySubequation {
    pub fn flavor(&self) -> Flavor {
        match self {
            AnySubequation::Real(_) => Flavor::Real,
            AnySubequation::Complex(_) => Flavor::Complex,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnySubequation::Real(s) => s.dim(),
            AnySubequation::Complex(s) => s.dim(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            AnySubequation::Real(s) => s.name(),
            AnySubequation::Complex(s) => s.name(),
        }
    }

    pub fn into_real(self) -> Result<Subequation<f64>> {
        match self {
            AnySubequation::Real(s) => Ok(s),
            AnySubequation::Complex(s) => Err(Error::Unsupported(format!(
                "{} is complex where a real family is needed",
                s.name()
            ))),
        }
    }

    pub fn into_complex(self) -> Result<Subequation<C64>> {
        match self {
            AnySubequation::Complex(s) => Ok(s),
            AnySubequation::Real(s) => Err(Error::Unsupported(format!(
                "{} is real where a complex family is needed",
                s.name()
            ))),
        }
    }

    pub fn from_doc(doc: &SpecDoc) -> Result<Self> {
        if doc.kind.ends_with('c') || doc.params.get("flavor") == Some(&Value::from("complex")) {
            Ok(AnySubequation::Complex(Subequation::from_doc(doc)?))
        } else {
            Ok(AnySubequation::Real(Subequation::from_doc(doc)?))
        }
    }
}

pub(crate) fn parse_kv(input: &str, body: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, part) in body.split(',').map(str::trim).filter(|s| !s.is_empty()).enumerate() {
        match part.split_once('=') {
            Some((k, v)) => {
                if out.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                    return Err(Error::descriptor(input, format!("duplicate key `{}`", k.trim())));
                }
            }
            // A bare leading value is the dimension, as in `poscone:3`.
            None if i == 0 => {
                out.insert("n".to_string(), part.to_string());
            }
            None => return Err(Error::descriptor(input, format!("expected key=value, got `{part}`"))),
        }
    }
    Ok(out)
}

pub(crate) fn take_usize(input: &str, kv: &mut BTreeMap<String, String>, key: &str, default: Option<usize>) -> Result<usize> {
    match kv.remove(key) {
        Some(v) => v
            .parse()
            .map_err(|_| Error::descriptor(input, format!("`{key}` must be a nonnegative integer"))),
        None => default.ok_or_else(|| Error::descriptor(input, format!("missing `{key}`"))),
    }
}

pub(crate) fn take_f64(input: &str, kv: &mut BTreeMap<String, String>, key: &str, default: Option<f64>) -> Result<f64> {
    let v = match kv.remove(key) {
        Some(v) => v
            .parse::<f64>()
            .map_err(|_| Error::descriptor(input, format!("`{key}` must be a number")))?,
        None => default.ok_or_else(|| Error::descriptor(input, format!("missing `{key}`")))?,
    };
    if !v.is_finite() {
        return Err(Error::descriptor(input, format!("`{key}` must be finite")));
    }
    Ok(v)
}

/// `diag(mu I_n, 0_m)`.
fn padded_mu<E: Entry>(mu: f64, n: usize, m: usize) -> SelfAdjoint<E> {
    let d: Vec<E::Real> = (0..n + m)
        .map(|i| if i < n { E::Real::of(mu) } else { E::Real::zero() })
        .collect();
    SelfAdjoint::diagonal(&d)
}

fn build<E: Entry>(input: &str, kind: &str, kv: &mut BTreeMap<String, String>) -> Result<Subequation<E>> {
    let spec = match kind {
        "poscone" => {
            let n = take_usize(input, kv, "n", None)?;
            Subequation::pos_cone(n)
        }
        "flm" => {
            let l0 = take_f64(input, kv, "l0", None)?;
            let mu = take_f64(input, kv, "mu", Some(0.0))?;
            let n = take_usize(input, kv, "n", None)?;
            let m = take_usize(input, kv, "m", Some(0))?;
            Subequation::f_lambda_mu(E::Real::of(l0), padded_mu::<E>(mu, n, m))
        }
        "ball" => {
            let n = take_usize(input, kv, "n", None)?;
            let r = take_f64(input, kv, "r", Some(1.0))?;
            Subequation::gradient_ball(n, E::Real::of(r)).map_err(|e| Error::descriptor(input, e.to_string()))?
        }
        other => return Err(Error::descriptor(input, format!("unknown family `{other}`"))),
    };
    if spec.dim() == 0 {
        return Err(Error::descriptor(input, "dimension must be positive"));
    }
    match kv.remove("delta") {
        Some(d) => {
            let d: f64 = d
                .parse()
                .map_err(|_| Error::descriptor(input, "`delta` must be a number"))?;
            spec.perturbed(E::Real::of(d))
                .map_err(|e| Error::descriptor(input, e.to_string()))
        }
        None => Ok(spec),
    }
}

/// Parses a descriptor such as `poscone:3` or `flm:l0=1,mu=0,n=2,m=1`.
pub fn parse_descriptor(input: &str) -> Result<AnySubequation> {
    let (kind, body) = input.trim().split_once(':').unwrap_or((input.trim(), ""));
    let mut kv = parse_kv(input, body)?;
    let (base, complex) = match kind {
        "posconec" | "flmc" | "ballc" => (&kind[..kind.len() - 1], true),
        k => (k, false),
    };
    let out = if complex {
        AnySubequation::Complex(build(input, base, &mut kv)?)
    } else {
        AnySubequation::Real(build(input, base, &mut kv)?)
    };
    if let Some(k) = kv.keys().next() {
        return Err(Error::descriptor(input, format!("unknown key `{k}`")));
    }
    Ok(out)
}

/// JSON form of a subequation: `{kind, params, flags}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpecDoc {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flags: Option<Flags>,
}

fn entry_value<E: Entry>(x: E) -> Value {
    match E::FLAVOR {
        Flavor::Real => Value::from(x.re().as_f64()),
        Flavor::Complex => Value::from(vec![x.re().as_f64(), x.im().as_f64()]),
    }
}

fn matrix_value<E: Entry>(m: &SelfAdjoint<E>) -> Value {
    Value::Array(
        (0..m.dim())
            .map(|i| Value::Array(m.as_matrix().row(i).iter().map(|&x| entry_value(x)).collect()))
            .collect(),
    )
}

fn value_entry<E: Entry>(v: &Value) -> Result<E> {
    let bad = || Error::descriptor(&v.to_string(), "expected a finite number or [re, im]");
    let (re, im) = match v {
        Value::Array(a) if a.len() == 2 => (a[0].as_f64().ok_or_else(bad)?, a[1].as_f64().ok_or_else(bad)?),
        _ => (v.as_f64().ok_or_else(bad)?, 0.0),
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::NonFinite("subequation parameter"));
    }
    E::from_parts(E::Real::of(re), E::Real::of(im)).ok_or_else(bad)
}

fn value_matrix<E: Entry>(v: &Value) -> Result<SelfAdjoint<E>> {
    let rows = v
        .as_array()
        .ok_or_else(|| Error::descriptor(&v.to_string(), "expected nested rows"))?;
    let rows: Vec<Vec<E>> = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| Error::descriptor(&r.to_string(), "expected a row"))?
                .iter()
                .map(value_entry)
                .collect()
        })
        .collect::<Result<_>>()?;
    SelfAdjoint::new(Matrix::from_rows(&rows)?)
}

fn param<'a>(doc: &'a SpecDoc, key: &str) -> Result<&'a Value> {
    doc.params
        .get(key)
        .ok_or_else(|| Error::descriptor(&doc.kind, format!("missing parameter `{key}`")))
}

fn param_f64(doc: &SpecDoc, key: &str) -> Result<f64> {
    let v = param(doc, key)?
        .as_f64()
        .ok_or_else(|| Error::descriptor(&doc.kind, format!("`{key}` must be a number")))?;
    if !v.is_finite() {
        return Err(Error::NonFinite("subequation parameter"));
    }
    Ok(v)
}

fn param_usize(doc: &SpecDoc, key: &str) -> Result<usize> {
    param(doc, key)?
        .as_u64()
        .map(|v| v as usize)
        .ok_or_else(|| Error::descriptor(&doc.kind, format!("`{key}` must be a nonnegative integer")))
}

fn f64_list(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::descriptor(&v.to_string(), "expected a list of numbers"))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| Error::descriptor(&x.to_string(), "expected a number")))
        .collect()
}

impl<E: Entry> Subequation<E> {
    /// JSON document for the family; user predicates cannot be serialized.
    pub fn to_doc(&self) -> Result<SpecDoc> {
        let c = if E::FLAVOR == Flavor::Complex { "c" } else { "" };
        let mut params = Map::new();
        let mut flags = None;
        let kind = match self {
            Subequation::PosCone { n } => {
                params.insert("n".into(), Value::from(*n));
                format!("poscone{c}")
            }
            Subequation::FLambdaMu { n, lambda0, mu, flags: f } => {
                params.insert("n".into(), Value::from(*n));
                params.insert("l0".into(), Value::from(lambda0.as_f64()));
                match mu {
                    MuField::Constant(m) => {
                        params.insert("mu".into(), matrix_value(m));
                    }
                    MuField::Tabulated(t) => {
                        let mut grid = Map::new();
                        grid.insert("origin".into(), Value::from(t.origin.clone()));
                        grid.insert("spacing".into(), Value::from(t.spacing.clone()));
                        grid.insert("shape".into(), Value::from(t.shape.clone()));
                        grid.insert("values".into(), Value::Array(t.values.iter().map(matrix_value).collect()));
                        params.insert("mu_table".into(), Value::Object(grid));
                    }
                }
                flags = Some(*f);
                format!("flm{c}")
            }
            Subequation::GradientBall { n, bound } => {
                params.insert("n".into(), Value::from(*n));
                params.insert("r".into(), Value::from(bound.as_f64()));
                format!("ball{c}")
            }
            Subequation::Perturbed { inner, delta } => {
                params.insert("delta".into(), Value::from(delta.as_f64()));
                params.insert("inner".into(), serde_json::to_value(inner.to_doc()?)?);
                "perturbed".to_string()
            }
            Subequation::Product(p) => {
                params.insert("f".into(), serde_json::to_value(p.f.to_doc()?)?);
                params.insert("g".into(), serde_json::to_value(p.g.to_doc()?)?);
                "product".to_string()
            }
            Subequation::Custom(cp) => {
                return Err(Error::Unsupported(format!(
                    "user predicate `{}` has no serialized form",
                    cp.name
                )))
            }
        };
        if matches!(self, Subequation::Perturbed { .. } | Subequation::Product(_)) && c == "c" {
            params.insert("flavor".into(), Value::from("complex"));
        }
        Ok(SpecDoc { kind, params, flags })
    }

    pub fn from_doc(doc: &SpecDoc) -> Result<Self> {
        let kind = doc.kind.as_str();
        let (base, complex) = match kind {
            "posconec" | "flmc" | "ballc" => (&kind[..kind.len() - 1], true),
            k => (k, doc.params.get("flavor") == Some(&Value::from("complex"))),
        };
        if complex != (E::FLAVOR == Flavor::Complex) {
            return Err(Error::Unsupported(format!(
                "document describes a {} family, a {} one was requested",
                if complex { "complex" } else { "real" },
                E::FLAVOR.as_str()
            )));
        }
        let spec = match base {
            "poscone" => Subequation::pos_cone(param_usize(doc, "n")?),
            "flm" => {
                let l0 = E::Real::of(param_f64(doc, "l0")?);
                let mut spec = if let Some(t) = doc.params.get("mu_table") {
                    let field = |k: &str| {
                        t.get(k)
                            .ok_or_else(|| Error::descriptor(&doc.kind, format!("mu_table needs `{k}`")))
                    };
                    let values = field("values")?
                        .as_array()
                        .ok_or_else(|| Error::descriptor(&doc.kind, "mu_table values must be a list"))?
                        .iter()
                        .map(value_matrix)
                        .collect::<Result<Vec<_>>>()?;
                    let shape = f64_list(field("shape")?)?.into_iter().map(|x| x as usize).collect();
                    let table = MuTable::new(f64_list(field("origin")?)?, f64_list(field("spacing")?)?, shape, values)?;
                    Subequation::f_lambda_mu_tabulated(l0, table)
                } else {
                    let n = param_usize(doc, "n")?;
                    let mu = match doc.params.get("mu") {
                        None => SelfAdjoint::zeros(n),
                        Some(v) if v.is_number() => padded_mu::<E>(param_f64(doc, "mu")?, n, 0),
                        Some(v) => value_matrix(v)?,
                    };
                    Subequation::f_lambda_mu(l0, mu)
                };
                if let (Some(f), Subequation::FLambdaMu { flags, .. }) = (doc.flags, &mut spec) {
                    *flags = f;
                }
                spec
            }
            "ball" => Subequation::gradient_ball(param_usize(doc, "n")?, E::Real::of(param_f64(doc, "r")?))?,
            "perturbed" => {
                let inner: SpecDoc = serde_json::from_value(param(doc, "inner")?.clone())?;
                Subequation::from_doc(&inner)?.perturbed(E::Real::of(param_f64(doc, "delta")?))?
            }
            "product" => {
                let f: SpecDoc = serde_json::from_value(param(doc, "f")?.clone())?;
                let g: SpecDoc = serde_json::from_value(param(doc, "g")?.clone())?;
                Subequation::product(Subequation::from_doc(&f)?, Subequation::from_doc(&g)?)?
            }
            other => return Err(Error::descriptor(other, "unknown family")),
        };
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptor_examples() {
        let s = parse_descriptor("poscone:3").unwrap();
        assert_eq!((s.flavor(), s.dim()), (Flavor::Real, 3));
        let s = parse_descriptor("posconec:2").unwrap();
        assert_eq!((s.flavor(), s.dim()), (Flavor::Complex, 2));
        let s = parse_descriptor("flm:l0=1,mu=0.5,n=2,m=1").unwrap().into_real().unwrap();
        match &s {
            Subequation::FLambdaMu { n, mu: MuField::Constant(mu), .. } => {
                assert_eq!(*n, 3);
                assert_eq!(mu[(1, 1)], 0.5);
                assert_eq!(mu[(2, 2)], 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let s = parse_descriptor("ball:n=2,r=1.5,delta=0.1").unwrap().into_real().unwrap();
        assert!(matches!(s, Subequation::Perturbed { .. }));
    }

    #[test]
    fn descriptor_errors() {
        for bad in ["cone:3", "poscone", "poscone:n=x", "flm:n=2", "ball:n=2,r=-1", "poscone:2,q=1", "poscone:0"] {
            assert!(parse_descriptor(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn json_round_trip() {
        let specs = [
            parse_descriptor("poscone:2").unwrap(),
            parse_descriptor("flm:l0=0.5,mu=1,n=1,m=1").unwrap(),
            parse_descriptor("ball:n=2,r=2,delta=0.25").unwrap(),
            parse_descriptor("ballc:n=1,r=1").unwrap(),
        ];
        for s in specs {
            let doc = match &s {
                AnySubequation::Real(x) => x.to_doc().unwrap(),
                AnySubequation::Complex(x) => x.to_doc().unwrap(),
            };
            let text = serde_json::to_string(&doc).unwrap();
            let back = AnySubequation::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(back.name(), s.name());
        }
        let prod = Subequation::<f64>::product(Subequation::pos_cone(1), Subequation::pos_cone(2)).unwrap();
        let back = Subequation::<f64>::from_doc(&prod.to_doc().unwrap()).unwrap();
        assert_eq!(back.dim(), 3);
    }
}
