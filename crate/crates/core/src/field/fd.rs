//! Second-order central finite differences.
//!
//! Gradients use `(f(x+h e_k) - f(x-h e_k)) / 2h`, pure second derivatives the
//! three-point stencil and mixed ones the four-corner stencil
//! `(f(++) - f(+-) - f(-+) + f(--)) / 4 h_k h_l`, which is symmetric in `k, l` by
//! construction. All three are exact on quadratics up to rounding.

use rayon::prelude::*;

use super::callable::CallableField;
use super::grid::GridFunction;
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::linalg::{Matrix, SelfAdjoint};
use crate::scalar::{Entry, Scalar};

/// Assembles a jet from a sampler of `f` at integer offsets.
fn stencil_jet<T: Scalar>(
    d: usize,
    spacing: &[T],
    mut at: impl FnMut(&[isize]) -> Result<T>,
) -> Result<Jet<T>> {
    let mut off = vec![0isize; d];
    let f0 = at(&off)?;
    let two = T::of(2.0);
    let mut p = vec![T::zero(); d];
    let mut h = Matrix::zeros(d, d);
    for k in 0..d {
        off[k] = 1;
        let fp = at(&off)?;
        off[k] = -1;
        let fm = at(&off)?;
        off[k] = 0;
        p[k] = (fp - fm) / (two * spacing[k]);
        h[(k, k)] = (fp - two * f0 + fm) / (spacing[k] * spacing[k]);
        for l in 0..k {
            let mut corner = |sk: isize, sl: isize| -> Result<T> {
                off[k] = sk;
                off[l] = sl;
                let v = at(&off);
                off[k] = 0;
                off[l] = 0;
                v
            };
            let v = (corner(1, 1)? - corner(1, -1)? - corner(-1, 1)? + corner(-1, -1)?)
                / (T::of(4.0) * spacing[k] * spacing[l]);
            h[(k, l)] = v;
            h[(l, k)] = v;
        }
    }
    Jet::new(f0, p, SelfAdjoint::new(h)?)
}

/// Finite-difference jet of a grid function at a sample. Every stencil point
/// must lie on the grid, in the domain and be finite.
pub fn fd_jet<T: Scalar>(f: &GridFunction<T>, index: usize) -> Result<Jet<T>> {
    let g = &f.geometry;
    if index >= f.len() {
        return Err(Error::OutOfStencil { index });
    }
    let spacing: Vec<T> = g.spacing.iter().map(|&h| T::of(h)).collect();
    let jet = stencil_jet(g.dims(), &spacing, |off| {
        let j = g.offset(index, off).ok_or(Error::OutOfStencil { index })?;
        if !f.is_finite_at(j) {
            return Err(Error::OutOfStencil { index });
        }
        Ok(f.values[j])
    })?;
    let base = g.point(index).into_iter().map(T::of).collect();
    jet.with_base(base)
}

/// Jets at every sample, `None` where the stencil does not fit. Computed in
/// parallel; the output order is the sample order.
pub fn fd_jets<T: Scalar>(f: &GridFunction<T>) -> Vec<Option<Jet<T>>> {
    (0..f.len())
        .into_par_iter()
        .map(|i| fd_jet(f, i).ok())
        .collect()
}

/// Finite-difference jet of a callable field at `x` with step `h` on every axis.
pub fn fd_jet_callable<T: Scalar>(f: &CallableField<T>, x: &[T], h: T) -> Result<Jet<T>> {
    if x.len() != f.real_dim() {
        return Err(Error::dim("field argument", f.real_dim(), x.len()));
    }
    if !(h > T::zero()) {
        return Err(Error::Precondition("finite-difference step must be positive".into()));
    }
    let d = x.len();
    let spacing = vec![h; d];
    let mut y = x.to_vec();
    let jet = stencil_jet(d, &spacing, |off| {
        for k in 0..d {
            y[k] = x[k] + h * T::of(off[k] as f64);
        }
        f.eval(&y)
    })?;
    jet.with_base(x.to_vec())
}

/// Complex jet of a field on `C^n`: the real finite-difference jet in
/// `(Re z, Im z)` coordinates, read through [`Jet::from_real_coords`]. The
/// gradient slot holds `2 df/dz-bar` and the Hessian slot the complex-linear
/// part of the real Hessian.
pub fn fd_jet_complex<T: Scalar>(f: &CallableField<T>, z: &[T::Cx], h: T) -> Result<Jet<T::Cx>> {
    let x = T::Cx::realify_vector(z);
    Jet::from_real_coords(&fd_jet_callable(f, &x, h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::GridGeometry;
    use crate::C64;

    #[test]
    fn constant_grid_gives_zero_jet() {
        let g = GridGeometry::spanning(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        let f = GridFunction::<f64>::from_fn(g, |_| 3.5).unwrap();
        let j = fd_jet(&f, 12).unwrap();
        assert_eq!(j.r, 3.5);
        assert!(j.p.iter().all(|v| *v == 0.0));
        assert_eq!(j.a.frobenius_norm(), 0.0);
    }

    #[test]
    fn boundary_and_masked_sites_are_out_of_stencil() {
        let g = GridGeometry::spanning(&[0.0, 0.0], &[1.0, 1.0], &[5, 5]).unwrap();
        let mut f = GridFunction::<f64>::from_fn(g, |x| x[0]).unwrap();
        assert!(matches!(fd_jet(&f, 0), Err(Error::OutOfStencil { index: 0 })));
        f.mask[6] = false;
        // Site 12 = (2, 2) uses the corner (1, 1) = 6.
        assert!(fd_jet(&f, 12).is_err());
        assert!(fd_jet(&f, 18).is_ok());
    }

    #[test]
    fn callable_matches_analytic_derivatives() {
        let f = CallableField::<f64>::real("t", 2, |x| x[0] * x[0] + x[1]);
        let j = fd_jet_callable(&f, &[0.3, -0.7], 1e-3).unwrap();
        assert!((j.p[0] - 0.6).abs() < 1e-6 && (j.p[1] - 1.0).abs() < 1e-6);
        assert!((j.a[(0, 0)] - 2.0).abs() < 1e-6 && j.a[(1, 1)].abs() < 1e-6);
    }

    #[test]
    fn complex_jet_conventions() {
        // |z|^2: gradient slot 2 df/dz-bar = 2z, Hessian slot 2.
        let f = CallableField::<f64>::complex("abs2", 1, |x| x[0] * x[0] + x[1] * x[1]);
        let z = C64::new(0.4, -0.2);
        let j = fd_jet_complex(&f, &[z], 1e-3).unwrap();
        assert!((j.p[0] - z * 2.0).norm() < 1e-8);
        assert!((j.a[(0, 0)].re - 2.0).abs() < 1e-6);
        // Re(z^2) is pluriharmonic.
        let h = CallableField::<f64>::complex("re z2", 1, |x| x[0] * x[0] - x[1] * x[1]);
        let j = fd_jet_complex(&h, &[z], 1e-3).unwrap();
        assert!(j.a[(0, 0)].norm() < 1e-6);
    }
}
