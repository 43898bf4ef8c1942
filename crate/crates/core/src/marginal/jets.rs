//! Jet of the marginal at a point from the jet of the field at the minimiser.
//!
//! At a fibre minimiser `y = gamma(x)` with positive definite fibre Hessian
//! `D`, the minimiser moves along the linear map `G = -D^{-1} C^*` and the jet
//! of `g` at `x` is the graph pullback of the jet of `f` along `G`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{fd_jet_callable, CallableField};
use crate::jets::Jet;
use crate::linalg::{pseudo_inverse, Matrix, ToleranceConfig};
use crate::scalar::{norm, Entry, Scalar};

use super::{total_point, FiberKind};

/// Finite-difference and acceptance settings for the marginal jet formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JetOptions {
    /// Step for the jet of `f` when no analytic jet is attached.
    pub step: f64,
    /// Largest accepted `|df/dy|` at the minimiser, relative to `max(1, |df|)`.
    pub stationarity_tol: f64,
    /// Smallest accepted eigenvalue of the fibre Hessian.
    pub min_fiber_curvature: f64,
    /// Largest accepted change of `f` under rotation of `w`, relative to `max(1, |f|)`.
    pub torus_tol: f64,
}

impl Default for JetOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            stationarity_tol: 1e-5,
            min_fiber_curvature: 1e-8,
            torus_tol: 1e-8,
        }
    }
}

fn field_jet<T: Scalar>(f: &CallableField<T>, x: &[T], opts: &JetOptions) -> Result<Jet<T>> {
    match f.analytic_jet(x)? {
        Some(j) => Ok(j),
        None => fd_jet_callable(f, x, T::of(opts.step)),
    }
}

/// Graph pullback along `-D^{-1} C^*` after checking the fibre is
/// nondegenerate and `y` is stationary.
fn reduce<E: Entry>(jet: &Jet<E>, n: usize, opts: &JetOptions) -> Result<Jet<E>> {
    let blocks = jet.split(n)?;
    let min_eig = blocks.d.min_eigenpair().0.as_f64();
    if !(min_eig > opts.min_fiber_curvature) {
        return Err(Error::SingularFiber { min_eig });
    }
    let residual = norm(&blocks.p2).as_f64();
    let scale = 1f64.max(norm(&jet.p).as_f64());
    if residual > opts.stationarity_tol * scale {
        return Err(Error::NotStationary { residual });
    }
    let d_inv = pseudo_inverse(&blocks.d, &ToleranceConfig::default());
    let gamma: Matrix<E> = -&(d_inv.as_matrix() * &blocks.c.adjoint());
    jet.pullback_graph(n, &gamma)
}

/// Jet of `g` at `x` for a real field on `R^n x R`, given the fibre minimiser
/// `y = gamma(x)`.
pub fn marginal_jet_smooth<T: Scalar>(
    f: &CallableField<T>,
    x: &[T],
    y: T,
    opts: &JetOptions,
) -> Result<Jet<T>> {
    if f.real_dim() != x.len() + 1 || f.flavor() != crate::Flavor::Real {
        return Err(Error::dim("real field on a fibred domain", x.len() + 1, f.real_dim()));
    }
    let jet = field_jet(f, &total_point(FiberKind::Interval, x, y), opts)?;
    reduce(&jet, x.len(), opts)
}

/// Complex jet of `g` at `z` for a field on `C^n x C` invariant under
/// `w -> e^{i theta} w`, given the minimising radius `rho = |w|`. The field is
/// audited for invariance on a circle of angles before the formula is used.
pub fn marginal_jet_complex<T: Scalar>(
    f: &CallableField<T>,
    z: &[T::Cx],
    rho: T,
    opts: &JetOptions,
) -> Result<Jet<T::Cx>> {
    let n = z.len();
    if f.flavor() != crate::Flavor::Complex || f.dim() != n + 1 {
        return Err(Error::dim("complex field on a fibred domain", n + 1, f.dim()));
    }
    if !(rho > T::zero()) {
        return Err(Error::Precondition("minimising radius must be positive".into()));
    }
    let x = T::Cx::realify_vector(z);
    let point = total_point(FiberKind::Annulus, &x, rho);
    let f0 = f.eval(&point)?;
    let mut deviation = 0.0f64;
    for k in 1..8 {
        let theta = std::f64::consts::TAU * k as f64 / 8.0;
        let mut q = point.clone();
        q[n] = rho * T::of(theta.cos());
        q[2 * n + 1] = rho * T::of(theta.sin());
        deviation = deviation.max((f.eval(&q)? - f0).abs().as_f64());
    }
    if deviation > opts.torus_tol * 1f64.max(f0.abs().as_f64()) {
        return Err(Error::NotTorusInvariant { deviation });
    }
    let real = field_jet(f, &point, opts)?;
    reduce(&Jet::<T::Cx>::from_real_coords(&real)?, n, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn coupled_quadratic_gives_curvature_two() {
        let f = CallableField::<f64>::real("q", 2, |p| p[0] * p[0] + (p[1] - p[0]).powi(2));
        let j = marginal_jet_smooth(&f, &[0.4], 0.4, &JetOptions::default()).unwrap();
        assert!((j.r - 0.16).abs() < 1e-12);
        assert!((j.p[0] - 0.8).abs() < 1e-7);
        assert!((j.a[(0, 0)] - 2.0).abs() < 1e-6);
        assert_eq!(j.base.as_deref(), Some(&[0.4][..]));
    }

    #[test]
    fn degenerate_and_nonstationary_points_are_rejected() {
        let flat = CallableField::<f64>::real("x2", 2, |p| p[0] * p[0]);
        assert!(matches!(
            marginal_jet_smooth(&flat, &[0.0], 0.0, &JetOptions::default()),
            Err(Error::SingularFiber { .. })
        ));
        let q = CallableField::<f64>::real("q", 2, |p| p[0] * p[0] + p[1] * p[1]);
        assert!(matches!(
            marginal_jet_smooth(&q, &[0.0], 0.5, &JetOptions::default()),
            Err(Error::NotStationary { .. })
        ));
    }

    #[test]
    fn ring_marginal_is_modulus_squared() {
        // |z|^2 + (|w|^2 - 1)^2 has g = |z|^2, whose complex Hessian slot is 2.
        let f = CallableField::<f64>::complex("ring", 2, |p| {
            let w2 = p[1] * p[1] + p[3] * p[3];
            p[0] * p[0] + p[2] * p[2] + (w2 - 1.0).powi(2)
        });
        let z = [C64::new(0.3, -0.2)];
        let j = marginal_jet_complex(&f, &z, 1.0, &JetOptions::default()).unwrap();
        assert!((j.r - 0.13).abs() < 1e-12);
        assert!((j.a[(0, 0)].re - 2.0).abs() < 1e-6);
        assert!((j.p[0] - C64::new(0.6, -0.4)).norm() < 1e-7);
    }

    #[test]
    fn non_invariant_field_is_rejected() {
        let f = CallableField::<f64>::complex("re w", 2, |p| p[1] * p[1] + p[0] * p[0] + p[1]);
        assert!(matches!(
            marginal_jet_complex(&f, &[C64::new(0.0, 0.0)], 0.5, &JetOptions::default()),
            Err(Error::NotTorusInvariant { .. })
        ));
    }
}
