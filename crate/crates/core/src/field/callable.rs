//! Fields given by a closure.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::scalar::{Entry, Flavor, Scalar};

pub type EvalFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type JetFn<T> = Arc<dyn Fn(&[T]) -> Jet<T> + Send + Sync>;

/// A real-valued function on `R^d`, or on `C^n` read through real coordinates
/// `(Re z_1, .., Re z_n, Im z_1, .., Im z_n)`.
#[derive(Clone)]
pub struct CallableField<T: Scalar> {
    pub name: String,
    real_dim: usize,
    flavor: Flavor,
    eval: EvalFn<T>,
    jet: Option<JetFn<T>>,
    /// Declared invariance under `w -> e^{i theta} w` in the last complex variable.
    pub torus_invariant: bool,
}

impl<T: Scalar> fmt::Debug for CallableField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallableField")
            .field("name", &self.name)
            .field("real_dim", &self.real_dim)
            .field("flavor", &self.flavor)
            .field("analytic_jet", &self.jet.is_some())
            .field("torus_invariant", &self.torus_invariant)
            .finish()
    }
}

impl<T: Scalar> CallableField<T> {
    pub fn real(name: impl Into<String>, dim: usize, f: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            real_dim: dim,
            flavor: Flavor::Real,
            eval: Arc::new(f),
            jet: None,
            torus_invariant: false,
        }
    }

    /// A field on `C^n`; `f` receives the `2n` real coordinates.
    pub fn complex(
        name: impl Into<String>,
        complex_dim: usize,
        f: impl Fn(&[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            real_dim: 2 * complex_dim,
            flavor: Flavor::Complex,
            eval: Arc::new(f),
            jet: None,
            torus_invariant: false,
        }
    }

    /// Attaches an analytic jet in real coordinates.
    pub fn with_jet(mut self, jet: impl Fn(&[T]) -> Jet<T> + Send + Sync + 'static) -> Self {
        self.jet = Some(Arc::new(jet));
        self
    }

    pub fn with_torus_invariance(mut self, invariant: bool) -> Self {
        self.torus_invariant = invariant;
        self
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Number of real coordinates.
    pub fn real_dim(&self) -> usize {
        self.real_dim
    }

    /// Number of variables of the field's flavor.
    pub fn dim(&self) -> usize {
        match self.flavor {
            Flavor::Real => self.real_dim,
            Flavor::Complex => self.real_dim / 2,
        }
    }

    pub fn eval(&self, x: &[T]) -> Result<T> {
        if x.len() != self.real_dim {
            return Err(Error::dim("field argument", self.real_dim, x.len()));
        }
        let v = (self.eval)(x);
        if v.is_nan() {
            return Err(Error::NonFinite("field value"));
        }
        Ok(v)
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<T> {
        let xs: Vec<T> = x.iter().map(|&v| T::of(v)).collect();
        self.eval(&xs)
    }

    /// Evaluates at complex coordinates.
    pub fn eval_complex(&self, z: &[T::Cx]) -> Result<T> {
        self.eval(&T::Cx::realify_vector(z))
    }

    pub fn has_analytic_jet(&self) -> bool {
        self.jet.is_some()
    }

    /// Analytic jet in real coordinates, with the base point attached.
    pub fn analytic_jet(&self, x: &[T]) -> Result<Option<Jet<T>>> {
        let Some(j) = &self.jet else {
            return Ok(None);
        };
        if x.len() != self.real_dim {
            return Err(Error::dim("field argument", self.real_dim, x.len()));
        }
        let jet = j(x);
        if jet.dim() != self.real_dim {
            return Err(Error::dim("analytic jet", self.real_dim, jet.dim()));
        }
        Ok(Some(jet.with_base(x.to_vec())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn complex_coordinates_are_split() {
        // |z1|^2 + 2 Im z2
        let f = CallableField::<f64>::complex("t", 2, |x| x[0] * x[0] + x[2] * x[2] + 2.0 * x[3]);
        let v = f.eval_complex(&[C64::new(1.0, 2.0), C64::new(0.0, 0.5)]).unwrap();
        assert_eq!(v, 1.0 + 4.0 + 1.0);
        assert_eq!(f.dim(), 2);
        assert_eq!(f.real_dim(), 4);
    }

    #[test]
    fn wrong_arity_is_rejected() {
        let f = CallableField::<f64>::real("t", 2, |x| x[0]);
        assert!(f.eval(&[1.0]).is_err());
        let g = CallableField::<f64>::real("nan", 1, |_| f64::NAN);
        assert!(matches!(g.eval(&[0.0]), Err(Error::NonFinite(_))));
    }
}
