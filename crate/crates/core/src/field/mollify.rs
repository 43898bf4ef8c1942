//! Mollification by a discrete bump kernel.

use rayon::prelude::*;

use super::grid::{GridFunction, GridGeometry};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Offsets (in cells) and weights of the bump `exp(-1 / (1 - |t/eps|^2))` on
/// `|t| < eps`, normalised so the weights sum to one. The offsets come in
/// symmetric pairs.
pub fn kernel_weights(geometry: &GridGeometry, eps: f64) -> Result<Vec<(Vec<isize>, f64)>> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::KernelSupport {
            radius: eps,
            reason: "radius must be positive",
        });
    }
    if geometry.spacing.iter().any(|&h| eps < 2.0 * h) {
        return Err(Error::KernelSupport {
            radius: eps,
            reason: "radius must span at least two cells on every axis",
        });
    }
    let reach: Vec<isize> = geometry.spacing.iter().map(|&h| (eps / h).ceil() as isize).collect();
    let counts: Vec<usize> = reach.iter().map(|&r| (2 * r + 1) as usize).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut off = vec![0isize; counts.len()];
        for k in (0..counts.len()).rev() {
            off[k] = (c % counts[k]) as isize - reach[k];
            c /= counts[k];
        }
        let s: f64 = off
            .iter()
            .zip(&geometry.spacing)
            .map(|(&o, &h)| (o as f64 * h / eps).powi(2))
            .sum();
        if s < 1.0 {
            out.push((off, (-1.0 / (1.0 - s)).exp()));
        }
    }
    let sum: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in out.iter_mut() {
        *w /= sum;
    }
    Ok(out)
}

/// Convolution with the normalised bump of radius `eps`. Samples whose kernel
/// support leaves the grid, or touches a masked or `-inf` sample, are masked
/// out of the result.
pub fn mollify<T: Scalar>(f: &GridFunction<T>, eps: f64) -> Result<GridFunction<T>> {
    let kernel: Vec<(Vec<isize>, T)> = kernel_weights(&f.geometry, eps)?
        .into_iter()
        .map(|(o, w)| (o, T::of(w)))
        .collect();
    let g = &f.geometry;
    let results: Vec<Option<T>> = (0..f.len())
        .into_par_iter()
        .map(|i| {
            if !f.mask[i] {
                return None;
            }
            let mut acc = T::zero();
            for (off, w) in &kernel {
                let j = g.offset(i, off)?;
                if !f.is_finite_at(j) {
                    return None;
                }
                acc += *w * f.values[j];
            }
            Some(acc)
        })
        .collect();
    if results.iter().all(|r| r.is_none()) {
        return Err(Error::KernelSupport {
            radius: eps,
            reason: "kernel support exceeds the domain at every sample",
        });
    }
    let mask = results.iter().map(|r| r.is_some()).collect();
    let values = results
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.unwrap_or(f.values[i]))
        .collect();
    GridFunction::with_mask(g.clone(), values, mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> GridGeometry {
        GridGeometry::spanning(&[-1.0, -1.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn weights_sum_to_one_and_are_symmetric() {
        let k = kernel_weights(&square(41), 0.2).unwrap();
        let sum: f64 = k.iter().map(|(_, w)| w).sum();
        assert!((sum - 1.0).abs() < 1e-14);
        for (o, w) in &k {
            let neg: Vec<isize> = o.iter().map(|v| -v).collect();
            let (_, wn) = k.iter().find(|(p, _)| *p == neg).unwrap();
            assert_eq!(w, wn);
        }
    }

    #[test]
    fn narrow_kernel_is_rejected() {
        assert!(matches!(
            kernel_weights(&square(41), 0.07),
            Err(Error::KernelSupport { .. })
        ));
        assert!(matches!(
            mollify(&GridFunction::<f64>::from_fn(square(5), |_| 0.0).unwrap(), 2.5),
            Err(Error::KernelSupport { .. })
        ));
    }

    #[test]
    fn constants_and_affine_functions_are_reproduced() {
        let f = GridFunction::<f64>::from_fn(square(41), |x| 0.3 * x[0] - 1.7 * x[1] + 0.25).unwrap();
        let m = mollify(&f, 0.15).unwrap();
        for i in 0..f.len() {
            if m.mask[i] {
                assert!((m.values[i] - f.values[i]).abs() < 1e-14);
            }
        }
        assert!(m.active_count() > 0 && m.active_count() < f.len());
    }

    #[test]
    fn quadratic_gains_second_moment() {
        let g = square(41);
        let eps = 0.2;
        let f = GridFunction::<f64>::from_fn(g.clone(), |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let m = mollify(&f, eps).unwrap();
        // Oracle: direct sum of w |t|^2.
        let c: f64 = kernel_weights(&g, eps)
            .unwrap()
            .iter()
            .map(|(o, w)| w * o.iter().zip(&g.spacing).map(|(&k, h)| (k as f64 * h).powi(2)).sum::<f64>())
            .sum();
        for i in 0..f.len() {
            if m.mask[i] {
                assert!((m.values[i] - f.values[i] - c).abs() < 1e-12);
            }
        }
    }
}
