//! Describable subequation families with decidable fibre membership.
//!
//! A subequation is a closed set of jets stable under adding positive
//! semidefinite matrices to the Hessian slot. The built-in families are the
//! positive cone, the gradient-coupled family `A >= lambda0 p p^* + mu(x)`, the
//! gradient ball `||p|| <= bound`, the `delta`-perturbation of any of these,
//! products `F#G` and user predicates.

mod audit;
pub(crate) mod descriptor;
mod perturbed;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use audit::{audit_properties, sample_member};
pub use descriptor::{parse_descriptor, AnySubequation, SpecDoc};

use num_traits::{Float, Zero};
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::linalg::{is_psd, psd_margin, SelfAdjoint, ToleranceConfig};
use crate::product::{self, ProductSpec};
use crate::scalar::{norm, Entry, Flavor, Scalar};

/// Structural properties a family declares; audits check them by sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flags {
    /// Fibres do not depend on the base point.
    pub constant_coefficient: bool,
    /// Membership ignores the gradient slot.
    pub gradient_independent: bool,
    /// Every fibre is convex.
    pub convex: bool,
    /// Lowering the value slot preserves membership.
    pub has_negativity: bool,
}

impl Flags {
    pub const ALL: Flags = Flags {
        constant_coefficient: true,
        gradient_independent: true,
        convex: true,
        has_negativity: true,
    };

    pub fn and(self, other: Flags) -> Flags {
        Flags {
            constant_coefficient: self.constant_coefficient && other.constant_coefficient,
            gradient_independent: self.gradient_independent && other.gradient_independent,
            convex: self.convex && other.convex,
            has_negativity: self.has_negativity && other.has_negativity,
        }
    }
}

/// Nearest-node table of self-adjoint matrices over a rectangular grid of base points.
#[derive(Clone, Debug, PartialEq)]
pub struct MuTable<E: Entry> {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
    /// Row-major over `shape`.
    pub values: Vec<SelfAdjoint<E>>,
}

impl<E: Entry> MuTable<E> {
    pub fn new(
        origin: Vec<f64>,
        spacing: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<SelfAdjoint<E>>,
    ) -> Result<Self> {
        if spacing.len() != origin.len() || shape.len() != origin.len() {
            return Err(Error::dim("mu table axes", origin.len(), shape.len()));
        }
        let count: usize = shape.iter().product();
        if values.len() != count || count == 0 {
            return Err(Error::dim("mu table entries", count, values.len()));
        }
        if spacing.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::Precondition("mu table spacing must be positive".into()));
        }
        let n = values[0].dim();
        if let Some(bad) = values.iter().find(|v| v.dim() != n) {
            return Err(Error::dim("mu table matrix size", n, bad.dim()));
        }
        Ok(Self {
            origin,
            spacing,
            shape,
            values,
        })
    }

    /// Value at the node nearest to `x`, clamped to the table.
    pub fn at(&self, x: &[f64]) -> Result<&SelfAdjoint<E>> {
        if x.len() != self.origin.len() {
            return Err(Error::dim("mu table lookup point", self.origin.len(), x.len()));
        }
        let mut flat = 0;
        for (k, &xk) in x.iter().enumerate() {
            let t = ((xk - self.origin[k]) / self.spacing[k]).round();
            let i = t.clamp(0.0, (self.shape[k] - 1) as f64) as usize;
            flat = flat * self.shape[k] + i;
        }
        Ok(&self.values[flat])
    }
}

/// The matrix field `mu(x)` of the gradient-coupled family.
#[derive(Clone, Debug, PartialEq)]
pub enum MuField<E: Entry> {
    Constant(SelfAdjoint<E>),
    Tabulated(Arc<MuTable<E>>),
}

impl<E: Entry> MuField<E> {
    pub fn zero(n: usize) -> Self {
        MuField::Constant(SelfAdjoint::zeros(n))
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, MuField::Constant(_))
    }

    pub fn dim(&self) -> usize {
        match self {
            MuField::Constant(m) => m.dim(),
            MuField::Tabulated(t) => t.values[0].dim(),
        }
    }

    /// `mu` at the base point of a jet; a tabulated field needs a base point,
    /// read in real coordinates `(Re x, Im x)`.
    pub fn at(&self, base: Option<&[E]>) -> Result<SelfAdjoint<E>> {
        match self {
            MuField::Constant(m) => Ok(m.clone()),
            MuField::Tabulated(t) => {
                let base = base.ok_or_else(|| {
                    Error::Precondition("tabulated mu needs jets with a base point".into())
                })?;
                let x: Vec<f64> = E::realify_vector(base)
                    .into_iter()
                    .map(|v| v.as_f64())
                    .collect();
                Ok(t.at(&x)?.clone())
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MuField::Constant(m) => m.frobenius_norm() == E::Real::zero(),
            MuField::Tabulated(t) => t.values.iter().all(|m| m.frobenius_norm() == E::Real::zero()),
        }
    }
}

/// Membership callback of a user-defined family.
pub type Predicate<E> = Arc<dyn Fn(&Jet<E>, &ToleranceConfig) -> bool + Send + Sync>;

/// User-supplied family with declared flags.
#[derive(Clone)]
pub struct CustomPredicate<E: Entry> {
    pub name: String,
    pub n: usize,
    pub flags: Flags,
    pub predicate: Predicate<E>,
}

impl<E: Entry> fmt::Debug for CustomPredicate<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomPredicate")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("flags", &self.flags)
            .finish_non_exhaustive()
    }
}

/// A subequation over `n` real or complex variables.
#[derive(Clone, Debug)]
pub enum Subequation<E: Entry> {
    /// Jets with positive semidefinite (real or complex) Hessian.
    PosCone { n: usize },
    /// Jets with `A - lambda0 p p^* - mu(x) >= 0`.
    FLambdaMu {
        n: usize,
        lambda0: E::Real,
        mu: MuField<E>,
        flags: Flags,
    },
    /// Jets with `||p|| <= bound`.
    GradientBall { n: usize, bound: E::Real },
    /// Jets within `delta` of the inner family in the value and gradient slots.
    Perturbed {
        inner: Box<Subequation<E>>,
        delta: E::Real,
    },
    Product(Box<ProductSpec<E>>),
    Custom(CustomPredicate<E>),
}

impl<E: Entry> Subequation<E> {
    pub fn pos_cone(n: usize) -> Self {
        Subequation::PosCone { n }
    }

    /// Gradient-coupled family with constant `mu`. Flags follow from the
    /// parameters: convex exactly when `lambda0 >= 0`.
    pub fn f_lambda_mu(lambda0: E::Real, mu: SelfAdjoint<E>) -> Self {
        let flags = Flags {
            constant_coefficient: true,
            gradient_independent: lambda0 == E::Real::zero(),
            convex: lambda0 >= E::Real::zero(),
            has_negativity: true,
        };
        Subequation::FLambdaMu {
            n: mu.dim(),
            lambda0,
            mu: MuField::Constant(mu),
            flags,
        }
    }

    /// Gradient-coupled family with a tabulated `mu(x)`.
    pub fn f_lambda_mu_tabulated(lambda0: E::Real, table: MuTable<E>) -> Self {
        let flags = Flags {
            constant_coefficient: false,
            gradient_independent: lambda0 == E::Real::zero(),
            convex: lambda0 >= E::Real::zero(),
            has_negativity: true,
        };
        Subequation::FLambdaMu {
            n: table.values[0].dim(),
            lambda0,
            mu: MuField::Tabulated(Arc::new(table)),
            flags,
        }
    }

    pub fn gradient_ball(n: usize, bound: E::Real) -> Result<Self> {
        if !(bound > E::Real::zero()) || !Float::is_finite(bound) {
            return Err(Error::Precondition(format!(
                "gradient bound must be positive, got {}",
                bound.as_f64()
            )));
        }
        Ok(Subequation::GradientBall { n, bound })
    }

    pub fn product(f: Self, g: Self) -> Result<Self> {
        Ok(Subequation::Product(Box::new(ProductSpec::new(f, g)?)))
    }

    pub fn custom(
        name: impl Into<String>,
        n: usize,
        flags: Flags,
        predicate: impl Fn(&Jet<E>, &ToleranceConfig) -> bool + Send + Sync + 'static,
    ) -> Self {
        Subequation::Custom(CustomPredicate {
            name: name.into(),
            n,
            flags,
            predicate: Arc::new(predicate),
        })
    }

    /// The family `F^delta`: jets `(r, p, A)` for which some `(r', p', A)` in `F`
    /// has `|r - r'| <= delta` and `||p - p'|| <= delta`. Nested perturbations
    /// merge, since the sum of two balls is a ball.
    pub fn perturbed(&self, delta: E::Real) -> Result<Self> {
        if !(delta > E::Real::zero()) || !Float::is_finite(delta) {
            return Err(Error::NonPositiveDelta(delta.as_f64()));
        }
        Ok(match self {
            Subequation::Perturbed { inner, delta: d } => Subequation::Perturbed {
                inner: inner.clone(),
                delta: *d + delta,
            },
            other => Subequation::Perturbed {
                inner: Box::new(other.clone()),
                delta,
            },
        })
    }

    /// Number of (real or complex) variables.
    pub fn dim(&self) -> usize {
        match self {
            Subequation::PosCone { n }
            | Subequation::FLambdaMu { n, .. }
            | Subequation::GradientBall { n, .. } => *n,
            Subequation::Perturbed { inner, .. } => inner.dim(),
            Subequation::Product(p) => p.dim(),
            Subequation::Custom(c) => c.n,
        }
    }

    pub fn flavor(&self) -> Flavor {
        E::FLAVOR
    }

    pub fn flags(&self) -> Flags {
        match self {
            Subequation::PosCone { .. } => Flags::ALL,
            Subequation::FLambdaMu { flags, .. } => *flags,
            Subequation::GradientBall { .. } => Flags {
                gradient_independent: false,
                ..Flags::ALL
            },
            Subequation::Perturbed { inner, .. } => inner.flags(),
            Subequation::Product(p) => p.f.flags().and(p.g.flags()),
            Subequation::Custom(c) => c.flags,
        }
    }

    /// Short human-readable name.
    pub fn name(&self) -> String {
        let c = if E::FLAVOR == Flavor::Complex { "c" } else { "" };
        match self {
            Subequation::PosCone { n } => format!("poscone{c}:{n}"),
            Subequation::FLambdaMu { n, lambda0, .. } => {
                format!("flm{c}:l0={},n={n}", lambda0.as_f64())
            }
            Subequation::GradientBall { n, bound } => format!("ball{c}:n={n},r={}", bound.as_f64()),
            Subequation::Perturbed { inner, delta } => {
                format!("({})^{}", inner.name(), delta.as_f64())
            }
            Subequation::Product(p) => format!("({})#({})", p.f.name(), p.g.name()),
            Subequation::Custom(c) => c.name.clone(),
        }
    }

    fn check_jet(&self, jet: &Jet<E>) -> Result<()> {
        if jet.dim() != self.dim() {
            return Err(Error::dim("jet for subequation", self.dim(), jet.dim()));
        }
        Ok(())
    }

    /// Fibre membership at tolerance.
    pub fn contains(&self, jet: &Jet<E>, tol: &ToleranceConfig) -> Result<bool> {
        self.check_jet(jet)?;
        match self {
            Subequation::PosCone { .. } => Ok(is_psd(&jet.a, tol)),
            Subequation::FLambdaMu { lambda0, mu, .. } => {
                Ok(is_psd(&coupled_hessian(jet, *lambda0, mu)?, tol))
            }
            Subequation::GradientBall { bound, .. } => {
                Ok(norm(&jet.p) <= *bound + E::Real::of(tol.residual_tol))
            }
            Subequation::Perturbed { inner, delta } => {
                perturbed::contains_perturbed(inner, *delta, jet, tol)
            }
            Subequation::Product(p) => Ok(product::contains(p, jet, tol)?.is_member()),
            Subequation::Custom(c) => Ok((c.predicate)(jet, tol)),
        }
    }

    /// Signed distance-like margin: nonnegative for members. Families without a
    /// natural scalar margin return `None`.
    pub fn margin(&self, jet: &Jet<E>, tol: &ToleranceConfig) -> Result<Option<f64>> {
        self.check_jet(jet)?;
        Ok(match self {
            Subequation::PosCone { .. } => Some(psd_margin(&jet.a, tol).as_f64()),
            Subequation::FLambdaMu { lambda0, mu, .. } => {
                Some(psd_margin(&coupled_hessian(jet, *lambda0, mu)?, tol).as_f64())
            }
            Subequation::GradientBall { bound, .. } => {
                Some((*bound + E::Real::of(tol.residual_tol) - norm(&jet.p)).as_f64())
            }
            _ => None,
        })
    }
}

/// `A - lambda0 p p^* - mu(x)`.
pub(crate) fn coupled_hessian<E: Entry>(
    jet: &Jet<E>,
    lambda0: E::Real,
    mu: &MuField<E>,
) -> Result<SelfAdjoint<E>> {
    let mu = mu.at(jet.base.as_deref())?;
    if mu.dim() != jet.dim() {
        return Err(Error::dim("mu matrix", jet.dim(), mu.dim()));
    }
    jet.a
        .try_sub(&SelfAdjoint::outer(&jet.p).scale(lambda0))?
        .try_sub(&mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn jet1(r: f64, p: &[f64], a: &[f64]) -> Jet<f64> {
        Jet::new(r, p.to_vec(), SelfAdjoint::diagonal(a)).unwrap()
    }

    #[test]
    fn pos_cone_ignores_value_and_gradient() {
        let f = Subequation::<f64>::pos_cone(2);
        assert!(f.contains(&jet1(-5.0, &[3.0, 4.0], &[1.0, 1.0]), &tol()).unwrap());
        assert!(!f.contains(&jet1(0.0, &[0.0, 0.0], &[1.0, -1.0]), &tol()).unwrap());
    }

    #[test]
    fn complex_pos_cone_uses_hermitian_spectrum() {
        let f = Subequation::<C64>::pos_cone(2);
        let i = C64::i();
        let one = C64::new(1.0, 0.0);
        let a = SelfAdjoint::from_rows(&[vec![one, i], vec![-i, one]]).unwrap();
        let j = Jet::new(0.0, vec![C64::new(0.0, 0.0); 2], a).unwrap();
        assert!(f.contains(&j, &tol()).unwrap());
        let a = SelfAdjoint::from_rows(&[vec![one, 2.0 * i], vec![-2.0 * i, one]]).unwrap();
        let j = Jet::new(0.0, vec![C64::new(0.0, 0.0); 2], a).unwrap();
        assert!(!f.contains(&j, &tol()).unwrap());
    }

    #[test]
    fn gradient_ball_membership() {
        let f = Subequation::<f64>::gradient_ball(2, 1.0).unwrap();
        assert!(f.contains(&jet1(0.0, &[0.5, 0.0], &[0.0, 0.0]), &tol()).unwrap());
        assert!(!f.contains(&jet1(0.0, &[1.2, 0.0], &[0.0, 0.0]), &tol()).unwrap());
        assert!(Subequation::<f64>::gradient_ball(2, 0.0).is_err());
    }

    #[test]
    fn f_lambda_mu_scalar_examples() {
        let f = Subequation::f_lambda_mu(1.0, SelfAdjoint::zeros(1));
        assert!(f.contains(&jet1(0.0, &[1.0], &[1.0]), &tol()).unwrap());
        assert!(!f.contains(&jet1(0.0, &[1.0], &[0.5]), &tol()).unwrap());
    }

    #[test]
    fn tabulated_mu_needs_base() {
        let table = MuTable::new(
            vec![0.0],
            vec![1.0],
            vec![2],
            vec![SelfAdjoint::diagonal(&[0.0]), SelfAdjoint::diagonal(&[2.0])],
        )
        .unwrap();
        let f = Subequation::f_lambda_mu_tabulated(0.0, table);
        let j = jet1(0.0, &[0.0], &[1.0]);
        assert!(f.contains(&j, &tol()).is_err());
        assert!(f.contains(&j.clone().with_base(vec![0.1]).unwrap(), &tol()).unwrap());
        assert!(!f.contains(&j.with_base(vec![0.9]).unwrap(), &tol()).unwrap());
        assert!(!f.flags().constant_coefficient);
    }

    #[test]
    fn perturbation_rejects_nonpositive_delta_and_merges() {
        let f = Subequation::<f64>::pos_cone(1);
        assert!(matches!(f.perturbed(0.0), Err(Error::NonPositiveDelta(_))));
        let g = f.perturbed(0.1).unwrap().perturbed(0.2).unwrap();
        match g {
            Subequation::Perturbed { delta, .. } => assert!((delta - 0.3).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let f = Subequation::<f64>::pos_cone(2);
        assert!(f.contains(&Jet::zero(3), &tol()).is_err());
    }
}
