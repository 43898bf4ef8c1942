//! Second-order jets `(r, p, A)` and their pullbacks along the graph and
//! vertical inclusions of a product space.
//!
//! For complex jets the gradient slot stores `2 df/dz-bar` and the Hessian slot
//! the complex Hessian, so the same pullback formulas apply with `^*` in place
//! of transposes.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use num_traits::{Float, One, Zero};
use crate::error::{Error, Result};
use crate::linalg::{assemble_blocks, split_blocks, Matrix, SelfAdjoint, ToleranceConfig};
use crate::scalar::{all_finite, Entry, Flavor, Scalar};
use crate::C64;

/// A 2-jet: value, gradient and self-adjoint Hessian, with an optional base point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet<E: Entry> {
    pub base: Option<Vec<E>>,
    pub r: E::Real,
    pub p: Vec<E>,
    pub a: SelfAdjoint<E>,
}

impl<E: Entry> Jet<E> {
    pub fn new(r: E::Real, p: Vec<E>, a: SelfAdjoint<E>) -> Result<Self> {
        if p.len() != a.dim() {
            return Err(Error::dim("jet gradient", a.dim(), p.len()));
        }
        if !Float::is_finite(r) || !all_finite(&p) || !a.is_finite() {
            return Err(Error::NonFinite("jet"));
        }
        Ok(Self {
            base: None,
            r,
            p,
            a,
        })
    }

    /// The zero jet on `n` variables.
    pub fn zero(n: usize) -> Self {
        Self {
            base: None,
            r: E::Real::zero(),
            p: vec![E::zero(); n],
            a: SelfAdjoint::zeros(n),
        }
    }

    pub fn with_base(mut self, base: Vec<E>) -> Result<Self> {
        if base.len() != self.dim() {
            return Err(Error::dim("jet base point", self.dim(), base.len()));
        }
        self.base = Some(base);
        Ok(self)
    }

    /// Same jet at another base point.
    pub fn rebase(&self, base: Option<Vec<E>>) -> Self {
        Self {
            base,
            ..self.clone()
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn flavor(&self) -> Flavor {
        E::FLAVOR
    }

    /// Builds a jet on `n + m` variables from blocks `p = (p1, p2)` and
    /// `A = [[B, C], [C^*, D]]`.
    pub fn from_blocks(
        r: E::Real,
        p1: &[E],
        p2: &[E],
        b: &SelfAdjoint<E>,
        c: &Matrix<E>,
        d: &SelfAdjoint<E>,
    ) -> Result<Self> {
        let a = assemble_blocks(b, c, d)?;
        let p = p1.iter().chain(p2).copied().collect();
        Self::new(r, p, a)
    }

    /// Splits off the first `n` variables: `(p1, p2, B, C, D)`.
    pub fn split(&self, n: usize) -> Result<JetBlocks<E>> {
        if n > self.dim() {
            return Err(Error::dim("jet split", self.dim(), n));
        }
        let (b, c, d) = split_blocks(&self.a, n)?;
        Ok(JetBlocks {
            p1: self.p[..n].to_vec(),
            p2: self.p[n..].to_vec(),
            b,
            c,
            d,
        })
    }

    /// Pullback along `x -> (x, y0 + G x)` for an `m x n` map `G`:
    /// `(r, p1 + G^* p2, B + C G + G^* C^* + G^* D G)`.
    pub fn pullback_graph(&self, n: usize, gamma: &Matrix<E>) -> Result<Self> {
        let blocks = self.split(n)?;
        let m = self.dim() - n;
        if gamma.rows() != m {
            return Err(Error::dim("linear map rows", m, gamma.rows()));
        }
        if gamma.cols() != n {
            return Err(Error::dim("linear map columns", n, gamma.cols()));
        }
        let g_adj = gamma.adjoint();
        let shift = g_adj.mul_vec(&blocks.p2)?;
        let p = blocks.p1.iter().zip(&shift).map(|(&a, &b)| a + b).collect();
        let a = blocks.b.try_add(&crate::linalg::gamma_form(&blocks.c, &blocks.d, gamma)?)?;
        Ok(Self {
            base: self.base.as_ref().map(|x| x[..n].to_vec()),
            r: self.r,
            p,
            a,
        })
    }

    /// Pullback along the vertical inclusion `y -> (x0, y)`: `(r, p2, D)`.
    pub fn pullback_vertical(&self, n: usize) -> Result<Self> {
        let blocks = self.split(n)?;
        Ok(Self {
            base: self.base.as_ref().map(|x| x[n..].to_vec()),
            r: self.r,
            p: blocks.p2,
            a: blocks.d,
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if other.dim() != self.dim() {
            return Err(Error::dim("jet sum", self.dim(), other.dim()));
        }
        Ok(Self {
            base: self.base.clone(),
            r: self.r + other.r,
            p: self.p.iter().zip(&other.p).map(|(&a, &b)| a + b).collect(),
            a: self.a.try_add(&other.a)?,
        })
    }

    pub fn scale(&self, s: E::Real) -> Self {
        Self {
            base: self.base.clone(),
            r: self.r * s,
            p: self.p.iter().map(|x| x.mul_real(s)).collect(),
            a: self.a.scale(s),
        }
    }

    /// Adds `P` to the Hessian slot.
    pub fn add_hessian(&self, p: &SelfAdjoint<E>) -> Result<Self> {
        Ok(Self {
            a: self.a.try_add(p)?,
            ..self.clone()
        })
    }

    /// Convex combination `sum w_k J_k`; the result keeps the first base point.
    pub fn combine(jets: &[Self], weights: &[E::Real], tol: &ToleranceConfig) -> Result<Self> {
        if jets.is_empty() {
            return Err(Error::EmptyRegion("jet combination"));
        }
        if weights.len() != jets.len() {
            return Err(Error::dim("combination weights", jets.len(), weights.len()));
        }
        let sum: E::Real = weights.iter().copied().sum();
        let negative = weights.iter().any(|w| *w < E::Real::zero() || !Float::is_finite(*w));
        if negative || Float::abs(sum - E::Real::one()) > E::Real::of(tol.residual_tol) {
            return Err(Error::InvalidWeights { sum: sum.as_f64() });
        }
        let mut out = jets[0].scale(weights[0]);
        for (j, &w) in jets.iter().zip(weights).skip(1) {
            out = out.try_add(&j.scale(w))?;
        }
        out.base = jets[0].base.clone();
        Ok(out)
    }

    /// Reads a jet taken in real coordinates as a jet of this flavor. For real
    /// entries this is the identity. For complex entries the coordinates are
    /// `(Re z, Im z)`, the gradient becomes `f_x + i f_y = 2 df/dz-bar` and the
    /// Hessian is replaced by its complex-linear part.
    pub fn from_real_coords(real: &Jet<E::Real>) -> Result<Self> {
        let dim = real.dim();
        if dim % E::EMBED != 0 {
            return Err(Error::OddDimension(dim));
        }
        let a = if E::EMBED == 1 {
            E::unrealify(real.a.as_matrix())
        } else {
            let n = dim / 2;
            let m = real.a.as_matrix();
            let half = E::Real::of(0.5);
            // (A - JAJ)/2 written blockwise as [[h, -k], [k, h]].
            let mut out = Matrix::zeros(dim, dim);
            for i in 0..n {
                for j in 0..n {
                    let h = (m[(i, j)] + m[(i + n, j + n)]) * half;
                    let k = (m[(i + n, j)] - m[(i, j + n)]) * half;
                    out[(i, j)] = h;
                    out[(i + n, j + n)] = h;
                    out[(i + n, j)] = k;
                    out[(i, j + n)] = -k;
                }
            }
            E::unrealify(&out)
        };
        let jet = Jet::new(real.r, E::unrealify_vector(&real.p), SelfAdjoint::new(a)?)?;
        match &real.base {
            Some(b) => jet.with_base(E::unrealify_vector(b)),
            None => Ok(jet),
        }
    }

    /// Converts to another precision.
    pub fn cast<F: Entry>(&self) -> Jet<F> {
        let conv = |v: &[E]| -> Vec<F> {
            v.iter()
                .map(|x| {
                    let (re, im) = (F::Real::of(x.re().as_f64()), F::Real::of(x.im().as_f64()));
                    F::from_parts(re, im).unwrap_or_else(|| F::from_real(re))
                })
                .collect()
        };
        Jet {
            base: self.base.as_deref().map(conv),
            r: F::Real::of(self.r.as_f64()),
            p: conv(&self.p),
            a: self.a.cast(),
        }
    }
}

/// Block decomposition of a jet on a product space.
#[derive(Clone, Debug)]
pub struct JetBlocks<E: Entry> {
    pub p1: Vec<E>,
    pub p2: Vec<E>,
    pub b: SelfAdjoint<E>,
    pub c: Matrix<E>,
    pub d: SelfAdjoint<E>,
}

/// Serialized jet: `{flavor, base?, r, p, A}` with `A` row-major. Complex
/// entries are written as `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JetDoc {
    pub flavor: Flavor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<Value>>,
    pub r: f64,
    pub p: Vec<Value>,
    #[serde(rename = "A")]
    pub a: Vec<Value>,
}

fn entry_to_value<E: Entry>(x: E) -> Value {
    match E::FLAVOR {
        Flavor::Real => Value::from(x.re().as_f64()),
        Flavor::Complex => Value::from(vec![x.re().as_f64(), x.im().as_f64()]),
    }
}

fn number(v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or(Error::NonFinite("jet entry")),
        // serde_json writes non-finite floats as null
        Value::Null => Err(Error::NonFinite("jet entry")),
        other => Err(Error::descriptor(&other.to_string(), "expected a number")),
    }
}

fn entry_from_value<E: Entry>(v: &Value) -> Result<E> {
    let (re, im) = match v {
        Value::Array(parts) if parts.len() == 2 => (number(&parts[0])?, number(&parts[1])?),
        _ => (number(v)?, 0.0),
    };
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::NonFinite("jet entry"));
    }
    E::from_parts(E::Real::of(re), E::Real::of(im))
        .ok_or_else(|| Error::descriptor(&v.to_string(), "complex entry in a real jet"))
}

fn entries_from_values<E: Entry>(vs: &[Value]) -> Result<Vec<E>> {
    vs.iter().map(entry_from_value).collect()
}

impl<E: Entry> Jet<E> {
    pub fn to_doc(&self) -> JetDoc {
        JetDoc {
            flavor: E::FLAVOR,
            base: self
                .base
                .as_ref()
                .map(|b| b.iter().map(|&x| entry_to_value(x)).collect()),
            r: self.r.as_f64(),
            p: self.p.iter().map(|&x| entry_to_value(x)).collect(),
            a: self
                .a
                .as_matrix()
                .as_slice()
                .iter()
                .map(|&x| entry_to_value(x))
                .collect(),
        }
    }

    pub fn from_doc(doc: &JetDoc) -> Result<Self> {
        if doc.flavor != E::FLAVOR {
            return Err(Error::Unsupported(format!(
                "expected a {} jet, found {}",
                E::FLAVOR.as_str(),
                doc.flavor.as_str()
            )));
        }
        if !doc.r.is_finite() {
            return Err(Error::NonFinite("jet value"));
        }
        let p: Vec<E> = entries_from_values(&doc.p)?;
        let n = p.len();
        // Accept both a flat row-major list and nested rows. A nested row is an
        // array of entries, and a complex entry is itself an array.
        let is_row = |v: &Value| match (E::FLAVOR, v) {
            (Flavor::Real, Value::Array(_)) => true,
            (Flavor::Complex, Value::Array(r)) => r.iter().all(Value::is_array),
            _ => false,
        };
        let flat: Vec<Value> = if !doc.a.is_empty() && doc.a.iter().all(is_row) {
            doc.a
                .iter()
                .flat_map(|v| v.as_array().cloned().unwrap_or_default())
                .collect()
        } else {
            doc.a.clone()
        };
        if flat.len() != n * n {
            return Err(Error::dim("jet Hessian entries", n * n, flat.len()));
        }
        let a = Matrix::from_row_major(n, n, entries_from_values(&flat)?)?;
        let mut jet = Self::new(E::Real::of(doc.r), p, SelfAdjoint::new(a)?)?;
        if let Some(b) = &doc.base {
            jet = jet.with_base(entries_from_values(b)?)?;
        }
        Ok(jet)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_doc()).expect("jet documents serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(&serde_json::from_str(s)?)
    }
}

/// A double-precision jet of either flavour, as read from a file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyJet {
    Real(Jet<f64>),
    Complex(Jet<C64>),
}

impl AnyJet {
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: JetDoc = serde_json::from_str(s)?;
        match doc.flavor {
            Flavor::Real => Ok(AnyJet::Real(Jet::from_doc(&doc)?)),
            Flavor::Complex => Ok(AnyJet::Complex(Jet::from_doc(&doc)?)),
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            AnyJet::Real(j) => j.to_json(),
            AnyJet::Complex(j) => j.to_json(),
        }
    }

    pub fn flavor(&self) -> Flavor {
        match self {
            AnyJet::Real(_) => Flavor::Real,
            AnyJet::Complex(_) => Flavor::Complex,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyJet::Real(j) => j.dim(),
            AnyJet::Complex(j) => j.dim(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(rows: &[&[f64]]) -> SelfAdjoint<f64> {
        SelfAdjoint::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn graph_pullback_worked_example() {
        let j = Jet::new(0.0, vec![1.0, 2.0], sym(&[&[4.0, -2.0], &[-2.0, 2.0]])).unwrap();
        let g = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let q = j.pullback_graph(1, &g).unwrap();
        assert_eq!(q.r, 0.0);
        assert_eq!(q.p, vec![3.0]);
        assert_eq!(q.a[(0, 0)], 2.0);
    }

    #[test]
    fn zero_map_gives_first_block() {
        let j = Jet::new(1.5, vec![1.0, 2.0], sym(&[&[4.0, -2.0], &[-2.0, 2.0]])).unwrap();
        let q = j.pullback_graph(1, &Matrix::zeros(1, 1)).unwrap();
        assert_eq!((q.r, q.p[0], q.a[(0, 0)]), (1.5, 1.0, 4.0));
    }

    #[test]
    fn vertical_pullback_extracts_block() {
        let j = Jet::new(1.0, vec![2.0, 3.0], SelfAdjoint::diagonal(&[4.0, 5.0])).unwrap();
        let v = j.pullback_vertical(1).unwrap();
        assert_eq!((v.r, v.p[0], v.a[(0, 0)]), (1.0, 3.0, 5.0));
    }

    #[test]
    fn pullback_dimension_errors() {
        let j = Jet::<f64>::zero(3);
        assert!(j.pullback_graph(1, &Matrix::zeros(1, 1)).is_err());
        assert!(j.pullback_graph(4, &Matrix::zeros(0, 4)).is_err());
    }

    #[test]
    fn combine_checks_weights() {
        let j = Jet::new(1.0, vec![2.0], SelfAdjoint::diagonal(&[3.0])).unwrap();
        let tol = ToleranceConfig::default();
        assert_eq!(Jet::combine(&[j.clone()], &[1.0], &tol).unwrap(), j);
        let mid = Jet::combine(&[j.clone(), j.clone()], &[0.5, 0.5], &tol).unwrap();
        assert_eq!(mid, j);
        assert!(matches!(
            Jet::combine(&[j.clone(), j.clone()], &[0.5, 0.6], &tol),
            Err(Error::InvalidWeights { .. })
        ));
        assert!(Jet::combine(&[j.clone(), j], &[1.5, -0.5], &tol).is_err());
    }

    #[test]
    fn json_round_trip_both_flavours() {
        let j = Jet::new(0.25, vec![1.0, -2.0], sym(&[&[1.0, 0.5], &[0.5, 2.0]]))
            .unwrap()
            .with_base(vec![0.0, 1.0])
            .unwrap();
        assert_eq!(Jet::<f64>::from_json(&j.to_json()).unwrap(), j);

        let z = Jet::new(
            1.0,
            vec![C64::new(1.0, 2.0)],
            SelfAdjoint::diagonal(&[3.0]),
        )
        .unwrap();
        let any = AnyJet::from_json(&z.to_json()).unwrap();
        assert_eq!(any, AnyJet::Complex(z));
    }

    #[test]
    fn json_accepts_nested_rows_and_rejects_nan() {
        let s = r#"{"flavor":"real","r":0,"p":[1,2],"A":[[1,0],[0,1]]}"#;
        let j = Jet::<f64>::from_json(s).unwrap();
        assert_eq!(j.a, SelfAdjoint::identity(2));
        let bad = r#"{"flavor":"real","r":0,"p":[null],"A":[1]}"#;
        assert!(matches!(Jet::<f64>::from_json(bad), Err(Error::NonFinite(_))));
    }
}
