//! Sup-convolution `f^eps(x) = sup_z { f(z) - |x - z|^2 / (2 eps) }` over grid nodes.
//!
//! The penalty splits over axes, so the supremum is taken one axis at a time.
//! Each one-dimensional pass is a max-plus transform with a parabola, computed
//! from the upper envelope of the parabolas `u_j - (x - x_j)^2 / (2 eps)`. The
//! value at a node is always evaluated directly from the chosen parabola, and
//! its neighbours on the envelope are tried as well, so the result agrees with
//! the brute-force supremum bit for bit: rounding of `a - t` is monotone in
//! `a`, hence subtracting the per-axis penalties in axis order commutes with
//! the maximum.

use rayon::prelude::*;

use super::grid::GridFunction;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Output of [`sup_convolution`].
#[derive(Clone, Debug)]
pub struct SupConvolution<T: Scalar> {
    pub grid: GridFunction<T>,
    pub epsilon: f64,
    /// `sqrt(4 eps M)` with `M = sup |f|`.
    pub delta: f64,
    /// Samples at distance at least `delta` from the boundary of the domain,
    /// where `f^eps` only sees values of `f` from inside the domain.
    pub reliable: Vec<bool>,
}

#[inline]
fn penalty<T: Scalar>(h: T, steps: isize, two_eps: T) -> T {
    let d = h * T::of(steps as f64);
    d * d / two_eps
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::Precondition(format!("sup-convolution needs eps > 0, got {eps}")));
    }
    Ok(())
}

/// Input values with masked-out samples replaced by `-inf`.
fn active_values<T: Scalar>(f: &GridFunction<T>) -> Result<Vec<T>> {
    if !(0..f.len()).any(|i| f.is_finite_at(i)) {
        return Err(Error::AllMasked);
    }
    Ok((0..f.len())
        .map(|i| if f.mask[i] { f.values[i] } else { T::neg_infinity() })
        .collect())
}

/// One-dimensional pass `out_i = max_j u_j - (h (i - j))^2 / (2 eps)`.
fn transform_line<T: Scalar>(u: &[T], h: T, two_eps: T) -> Vec<T> {
    let n = u.len();
    let finite: Vec<usize> = (0..n).filter(|&j| u[j].is_finite()).collect();
    if finite.is_empty() {
        return vec![T::neg_infinity(); n];
    }
    // In index units, maximising u_j - c (x - j)^2 with c = h^2 / (2 eps) is
    // minimising (x - j)^2 - u_j / c, the classical lower envelope of
    // parabolas. Parabola q beats p to the right of `cross(p, q)`.
    let c = (h * h / two_eps).as_f64();
    let height = |j: usize| -> f64 { -u[j].as_f64() / c + (j * j) as f64 };
    let cross = |p: usize, q: usize| -> f64 { (height(q) - height(p)) / (2.0 * (q as f64 - p as f64)) };
    let mut hull: Vec<usize> = Vec::with_capacity(finite.len());
    let mut starts: Vec<f64> = Vec::with_capacity(finite.len());
    for &q in &finite {
        let mut s = f64::NEG_INFINITY;
        while let Some(&p) = hull.last() {
            s = cross(p, q);
            if s <= *starts.last().expect("aligned with hull") {
                hull.pop();
                starts.pop();
                s = f64::NEG_INFINITY;
            } else {
                break;
            }
        }
        if hull.is_empty() {
            s = f64::NEG_INFINITY;
        }
        hull.push(q);
        starts.push(s);
    }

    let value = |i: usize, j: usize| u[j] - penalty(h, i as isize - j as isize, two_eps);
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        while k + 1 < hull.len() && starts[k + 1] <= i as f64 {
            k += 1;
        }
        let mut best = value(i, hull[k]);
        if k > 0 {
            best = best.max(value(i, hull[k - 1]));
        }
        if k + 1 < hull.len() {
            best = best.max(value(i, hull[k + 1]));
        }
        out.push(best);
    }
    out
}

/// Applies `transform` to every line of `values` along `axis`, in parallel.
fn sweep_axis<T: Scalar>(
    f: &GridFunction<T>,
    values: &mut [T],
    axis: usize,
    transform: impl Fn(&[T]) -> Vec<T> + Sync,
) {
    let g = &f.geometry;
    let stride = g.strides()[axis];
    let n = g.shape[axis];
    let starts: Vec<usize> = (0..g.len()).filter(|&i| g.multi_index(i)[axis] == 0).collect();
    let snapshot: &[T] = values;
    let lines: Vec<(usize, Vec<T>)> = starts
        .par_iter()
        .map(|&s| {
            let line: Vec<T> = (0..n).map(|k| snapshot[s + k * stride]).collect();
            (s, transform(&line))
        })
        .collect();
    for (s, line) in lines {
        for (k, v) in line.into_iter().enumerate() {
            values[s + k * stride] = v;
        }
    }
}

/// Flags samples at distance at least `delta` from the box faces and from every
/// masked-out sample.
fn reliable_flags<T: Scalar>(f: &GridFunction<T>, delta: f64) -> Vec<bool> {
    let g = &f.geometry;
    let holes: Vec<Vec<f64>> = (0..f.len()).filter(|&i| !f.mask[i]).map(|i| g.point(i)).collect();
    (0..f.len())
        .into_par_iter()
        .map(|i| {
            if !f.mask[i] || g.distance_to_boundary(i) < delta {
                return false;
            }
            let x = g.point(i);
            holes.iter().all(|y| {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 >= delta * delta
            })
        })
        .collect()
}

/// Exact discrete sup-convolution by separable upper envelopes.
pub fn sup_convolution<T: Scalar>(f: &GridFunction<T>, eps: f64) -> Result<SupConvolution<T>> {
    check_eps(eps)?;
    let mut values = active_values(f)?;
    let two_eps = T::of(2.0 * eps);
    for axis in 0..f.geometry.dims() {
        let h = T::of(f.geometry.spacing[axis]);
        sweep_axis(f, &mut values, axis, |line| transform_line(line, h, two_eps));
    }
    finish(f, values, eps)
}

/// The same supremum by direct enumeration of all pairs of samples. Quadratic
/// in the number of samples; kept as a reference.
pub fn sup_convolution_brute<T: Scalar>(f: &GridFunction<T>, eps: f64) -> Result<SupConvolution<T>> {
    check_eps(eps)?;
    let u = active_values(f)?;
    let g = &f.geometry;
    let two_eps = T::of(2.0 * eps);
    let h: Vec<T> = g.spacing.iter().map(|&s| T::of(s)).collect();
    let idx: Vec<Vec<usize>> = (0..f.len()).map(|i| g.multi_index(i)).collect();
    let values: Vec<T> = (0..f.len())
        .into_par_iter()
        .map(|i| {
            let mut best = T::neg_infinity();
            for j in 0..f.len() {
                if !u[j].is_finite() {
                    continue;
                }
                let mut v = u[j];
                for k in 0..g.dims() {
                    v = v - penalty(h[k], idx[i][k] as isize - idx[j][k] as isize, two_eps);
                }
                best = best.max(v);
            }
            best
        })
        .collect();
    finish(f, values, eps)
}

fn finish<T: Scalar>(f: &GridFunction<T>, values: Vec<T>, eps: f64) -> Result<SupConvolution<T>> {
    let m = f.sup_abs()?.as_f64();
    let delta = (4.0 * eps * m).sqrt();
    let grid = GridFunction::with_mask(f.geometry.clone(), values, f.mask.clone())?;
    Ok(SupConvolution {
        reliable: reliable_flags(f, delta),
        grid,
        epsilon: eps,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::GridGeometry;

    fn line(n: usize) -> GridGeometry {
        GridGeometry::spanning(&[-1.0], &[1.0], &[n]).unwrap()
    }

    #[test]
    fn constant_is_fixed() {
        let f = GridFunction::<f64>::from_fn(line(31), |_| 2.5).unwrap();
        let s = sup_convolution(&f, 0.3).unwrap();
        assert!(s.grid.values.iter().all(|v| *v == 2.5));
    }

    #[test]
    fn affine_gains_eps_half_slope_squared() {
        let a = 0.7;
        let eps = 0.1;
        let f = GridFunction::<f64>::from_fn(line(2001), |x| a * x[0] + 0.2).unwrap();
        let s = sup_convolution(&f, eps).unwrap();
        for i in 0..f.len() {
            if s.reliable[i] {
                let x = f.geometry.point(i)[0];
                let want = a * x + 0.2 + eps * a * a / 2.0;
                assert!((s.grid.values[i] - want).abs() < 1e-6, "x = {x}");
            }
        }
        assert!(s.reliable.iter().any(|r| *r));
    }

    #[test]
    fn masked_samples_do_not_contribute() {
        let mut f = GridFunction::<f64>::from_fn(line(11), |x| -x[0].abs()).unwrap();
        f.mask[5] = false; // the peak
        f.values[5] = 100.0;
        let s = sup_convolution(&f, 0.5).unwrap();
        let b = sup_convolution_brute(&f, 0.5).unwrap();
        assert!(s.grid.values.iter().all(|v| *v < 1.0));
        assert_eq!(s.grid.values, b.grid.values);
        assert!(!s.reliable[5] && !s.reliable[4]);
    }

    #[test]
    fn all_masked_is_an_error() {
        let mut f = GridFunction::<f64>::from_fn(line(5), |_| 0.0).unwrap();
        f.mask = vec![false; 5];
        assert!(matches!(sup_convolution(&f, 0.1), Err(Error::AllMasked)));
    }

    #[test]
    fn neg_infinity_samples_are_skipped() {
        let mut f = GridFunction::<f64>::from_fn(line(9), |x| x[0]).unwrap();
        f.values[8] = f64::NEG_INFINITY;
        let s = sup_convolution(&f, 0.2).unwrap();
        let b = sup_convolution_brute(&f, 0.2).unwrap();
        assert_eq!(s.grid.values, b.grid.values);
        assert!(s.grid.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn two_dimensional_matches_brute_force() {
        let g = GridGeometry::new(vec![-1.0, 0.0], vec![0.13, 0.21], vec![9, 7]).unwrap();
        let f = GridFunction::<f64>::from_fn(g, |x| (3.0 * x[0]).sin() * x[1] - x[0] * x[0]).unwrap();
        for eps in [0.01, 0.1, 1.0] {
            let s = sup_convolution(&f, eps).unwrap();
            let b = sup_convolution_brute(&f, eps).unwrap();
            assert_eq!(s.grid.values, b.grid.values);
        }
    }
}
