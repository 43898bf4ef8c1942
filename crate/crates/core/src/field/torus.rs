//! Torus actions on the second group of complex variables.
//!
//! Fields here live on `C^n x C^m` in real coordinates
//! `(Re z, Re w, Im z, Im w)`, and the torus acts by `w_j -> e^{i theta_j} w_j`.

use rand::Rng;

use super::callable::CallableField;
use crate::error::{Error, Result};
use crate::sampling;
use crate::scalar::{Flavor, Scalar};

fn check_complex<T: Scalar>(f: &CallableField<T>, n: usize) -> Result<usize> {
    if f.flavor() != Flavor::Complex {
        return Err(Error::Precondition(format!("{} is not a field on complex space", f.name)));
    }
    if n >= f.dim() {
        return Err(Error::dim("torus factor split", f.dim(), n));
    }
    Ok(f.dim() - n)
}

/// Rotates the `w` part of `x` by the given angles.
fn rotate<T: Scalar>(x: &[T], n: usize, angles: &[f64]) -> Vec<T> {
    let total = x.len() / 2;
    let mut y = x.to_vec();
    for (j, &theta) in angles.iter().enumerate() {
        let (re, im) = (x[n + j], x[total + n + j]);
        let (s, c) = (T::of(theta.sin()), T::of(theta.cos()));
        y[n + j] = c * re - s * im;
        y[total + n + j] = s * re + c * im;
    }
    y
}

/// `(z, w) -> max over the angle lattice of f(z, e^{i theta} w)`, with
/// `n_angles` equally spaced angles per torus factor.
pub fn torus_symmetrize<T: Scalar>(f: &CallableField<T>, n: usize, n_angles: usize) -> Result<CallableField<T>> {
    let m = check_complex(f, n)?;
    if n_angles == 0 {
        return Err(Error::Precondition("torus symmetrization needs at least one angle".into()));
    }
    let lattice: Vec<Vec<f64>> = (0..n_angles.pow(m as u32))
        .map(|mut code| {
            (0..m)
                .map(|_| {
                    let k = code % n_angles;
                    code /= n_angles;
                    std::f64::consts::TAU * k as f64 / n_angles as f64
                })
                .collect()
        })
        .collect();
    let inner = f.clone();
    let out = CallableField::complex(format!("sym({})", f.name), f.dim(), move |x: &[T]| {
        lattice
            .iter()
            .map(|angles| inner.eval(&rotate(x, n, angles)).unwrap_or(T::nan()))
            .fold(T::neg_infinity(), T::max)
    });
    Ok(out.with_torus_invariance(true))
}

/// `(z, w) -> f(z, e^w)`, mapping the strip onto the punctured plane in each
/// `w` variable.
pub fn substitute_exponential<T: Scalar>(f: &CallableField<T>, n: usize) -> Result<CallableField<T>> {
    let m = check_complex(f, n)?;
    let inner = f.clone();
    let total = f.dim();
    let out = CallableField::complex(format!("{}(z, exp w)", f.name), total, move |x: &[T]| {
        let mut y = x.to_vec();
        for j in 0..m {
            let (re, im) = (x[n + j], x[total + n + j]);
            let r = re.exp();
            y[n + j] = r * im.cos();
            y[total + n + j] = r * im.sin();
        }
        inner.eval(&y).unwrap_or(T::nan())
    });
    Ok(out)
}

/// Largest `|f(z, e^{i theta} w) - f(z, w)|` over `samples` random points in
/// the box `[-radius, radius]` (real coordinates) and random angles.
pub fn torus_deviation<T: Scalar>(
    f: &CallableField<T>,
    n: usize,
    samples: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    let m = check_complex(f, n)?;
    let mut rng = sampling::rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x: Vec<T> = (0..f.real_dim())
            .map(|_| T::of(radius * (2.0 * rng.random::<f64>() - 1.0)))
            .collect();
        let angles: Vec<f64> = (0..m).map(|_| std::f64::consts::TAU * rng.random::<f64>()).collect();
        let a = f.eval(&x)?;
        let b = f.eval(&rotate(&x, n, &angles))?;
        if a.is_finite() && b.is_finite() {
            worst = worst.max((a - b).abs().as_f64());
        } else if a != b {
            worst = f64::INFINITY;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_field_is_unchanged() {
        // |z|^2 + |w|^4 on C x C.
        let f = CallableField::<f64>::complex("inv", 2, |x| {
            let w2 = x[1] * x[1] + x[3] * x[3];
            x[0] * x[0] + x[2] * x[2] + w2 * w2
        });
        let s = torus_symmetrize(&f, 1, 12).unwrap();
        assert!(s.torus_invariant);
        for x in [[0.3, -0.4, 0.1, 0.7], [1.0, 0.0, -0.5, 0.2]] {
            assert!((s.eval(&x).unwrap() - f.eval(&x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn real_part_tends_to_modulus() {
        let f = CallableField::<f64>::complex("re w", 2, |x| x[1]);
        let s = torus_symmetrize(&f, 1, 360).unwrap();
        for (re, im) in [(0.3, 0.4), (-0.6, 0.1), (0.0, -1.0), (0.05, 0.02)] {
            let v = s.eval(&[0.0, re, 0.0, im]).unwrap();
            let modulus = f64::hypot(re, im);
            assert!(v <= modulus + 1e-15 && modulus - v < 2e-4);
        }
        assert!(torus_deviation(&s, 1, 100, 1.0, 7).unwrap() < 2e-4);
        assert!(torus_deviation(&f, 1, 100, 1.0, 7).unwrap() > 0.1);
    }

    #[test]
    fn log_modulus_becomes_real_part() {
        let f = CallableField::<f64>::complex("log|w|", 2, |x| 0.5 * (x[1] * x[1] + x[3] * x[3]).ln());
        let e = substitute_exponential(&f, 1).unwrap();
        for x in [[0.0, 0.3, 0.0, 2.0], [1.0, -1.2, 0.4, -7.0]] {
            assert!((e.eval(&x).unwrap() - x[1]).abs() < 1e-12);
        }
        assert!(torus_deviation(&e, 1, 10, 1.0, 3).is_ok());
    }

    #[test]
    fn real_fields_are_rejected() {
        let f = CallableField::<f64>::real("r", 2, |x| x[0]);
        assert!(torus_symmetrize(&f, 1, 4).is_err());
    }
}
