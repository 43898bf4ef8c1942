//! Marginal functions `g(x) = inf_y f(x, y)` over one-dimensional fibres.
//!
//! A real field lives on `R^n x R` with fibre coordinate `y`. A complex field
//! lives on `C^n x C`, is invariant under rotations of the last variable `w`,
//! and is minimised over radii `rho = |w|` in an annulus; it is evaluated at
//! `w = rho`.

mod jets;
mod perturbed;
mod principle;

pub use jets::{marginal_jet_complex, marginal_jet_smooth, JetOptions};
pub use perturbed::{perturbed_marginal, perturbed_marginal_certificate, PerturbedMarginal, PHI_EXPONENT_CAP};
pub use principle::{pseudoconvexity_certificate, verify_minimum_principle, PrincipleOptions};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{CallableField, GridFunction, GridGeometry};
use crate::scalar::{Flavor, Scalar};

/// Shape of the fibres.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FiberKind {
    /// Intervals of the real fibre coordinate.
    Interval,
    /// Annuli `rho_lo < |w| < rho_hi` in the punctured plane, sampled by radius.
    Annulus,
}

/// `Omega` as a base grid with a fibre interval over every base sample.
///
/// For complex fields the base grid lives on `R^{2n}` in `(Re z, Im z)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberedDomain {
    pub base: GridGeometry,
    pub kind: FiberKind,
    /// Per base sample; a fibre with `lo >= hi` is empty.
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Samples per fibre, endpoints included.
    pub resolution: usize,
}

impl FiberedDomain {
    pub fn new(base: GridGeometry, kind: FiberKind, lo: Vec<f64>, hi: Vec<f64>, resolution: usize) -> Result<Self> {
        if lo.len() != base.len() || hi.len() != base.len() {
            return Err(Error::dim("fibre bounds", base.len(), lo.len().min(hi.len())));
        }
        if resolution < 3 {
            return Err(Error::Precondition("fibres need at least three samples".into()));
        }
        if kind == FiberKind::Annulus && lo.iter().zip(&hi).any(|(l, h)| l < h && !(*l > 0.0)) {
            return Err(Error::Precondition("annulus radii must be positive".into()));
        }
        Ok(Self {
            base,
            kind,
            lo,
            hi,
            resolution,
        })
    }

    /// The same fibre over every base sample.
    pub fn uniform(base: GridGeometry, kind: FiberKind, lo: f64, hi: f64, resolution: usize) -> Result<Self> {
        let n = base.len();
        Self::new(base, kind, vec![lo; n], vec![hi; n], resolution)
    }

    /// Fibres given by a function of the base point.
    pub fn from_bounds(
        base: GridGeometry,
        kind: FiberKind,
        resolution: usize,
        bounds: impl Fn(&[f64]) -> (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = (0..base.len()).map(|i| bounds(&base.point(i))).unzip();
        Self::new(base, kind, lo, hi, resolution)
    }

    pub fn is_empty_at(&self, site: usize) -> bool {
        !(self.lo[site] < self.hi[site]) || !self.lo[site].is_finite() || !self.hi[site].is_finite()
    }

    /// Fibre sample `k` over `site`.
    pub fn fiber_point(&self, site: usize, k: usize) -> f64 {
        let t = k as f64 / (self.resolution - 1) as f64;
        self.lo[site] + (self.hi[site] - self.lo[site]) * t
    }

    /// Flavor the fields on this domain must have.
    pub fn flavor(&self) -> Flavor {
        match self.kind {
            FiberKind::Interval => Flavor::Real,
            FiberKind::Annulus => Flavor::Complex,
        }
    }

    /// Real coordinates of the field's argument at base point `x`, fibre value `y`.
    pub fn total_point<T: Scalar>(&self, x: &[T], y: T) -> Vec<T> {
        total_point(self.kind, x, y)
    }

    /// Checks that `f` has the right flavor and dimension for this domain.
    pub fn check_field<T: Scalar>(&self, f: &CallableField<T>) -> Result<()> {
        if f.flavor() != self.flavor() {
            return Err(Error::Precondition(format!(
                "field {} is {} but the domain needs a {} field",
                f.name,
                f.flavor().as_str(),
                self.flavor().as_str()
            )));
        }
        let want = self.base.dims() + f.real_dim() / f.dim();
        if f.real_dim() != want {
            return Err(Error::dim("field on fibred domain", want, f.real_dim()));
        }
        Ok(())
    }
}

/// `(x, y)` for real fields, `(Re z, rho, Im z, 0)` for complex ones.
pub(crate) fn total_point<T: Scalar>(kind: FiberKind, x: &[T], y: T) -> Vec<T> {
    match kind {
        FiberKind::Interval => {
            let mut p = x.to_vec();
            p.push(y);
            p
        }
        FiberKind::Annulus => {
            let n = x.len() / 2;
            let mut p = Vec::with_capacity(x.len() + 2);
            p.extend_from_slice(&x[..n]);
            p.push(y);
            p.extend_from_slice(&x[n..]);
            p.push(T::zero());
            p
        }
    }
}

/// Serialized description of a fibred domain with a box base and constant fibres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainDoc {
    pub base: BoxDoc,
    pub fiber: FiberDoc,
    #[serde(default = "default_kind")]
    pub kind: FiberKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxDoc {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberDoc {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

fn default_kind() -> FiberKind {
    FiberKind::Interval
}

impl DomainDoc {
    pub fn build(&self) -> Result<FiberedDomain> {
        let base = GridGeometry::spanning(&self.base.lo, &self.base.hi, &self.base.counts)?;
        FiberedDomain::uniform(base, self.kind, self.fiber.lo, self.fiber.hi, self.fiber.samples)
    }
}

/// Tuning of the fibre minimisation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalOptions {
    /// Refinement steps after the discrete minimum: one parabolic step through
    /// the neighbouring samples, then Newton steps. Zero keeps the discrete value.
    pub refine_steps: usize,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self { refine_steps: 12 }
    }
}

/// Minimum over one fibre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberMin<T: Scalar> {
    /// `min(discrete, refined)`.
    pub value: T,
    pub argmin: T,
    /// Minimum over the samples alone, and where it is attained (first index).
    pub discrete_value: T,
    pub discrete_argmin: T,
    pub discrete_index: usize,
    /// The discrete minimiser is not an endpoint of the fibre.
    pub interior: bool,
}

/// Minimises `eval` over `resolution` equally spaced samples of `[lo, hi]`,
/// then refines around an interior discrete minimiser. Refinement steps that
/// leave the bracket of neighbouring samples, or do not decrease the value,
/// are rejected, so the result never exceeds the discrete minimum.
pub fn fiber_min<T: Scalar>(
    eval: impl Fn(T) -> Result<T>,
    lo: f64,
    hi: f64,
    resolution: usize,
    opts: &MarginalOptions,
) -> Result<FiberMin<T>> {
    if !(lo < hi) || resolution < 3 {
        return Err(Error::EmptyRegion("empty fibre"));
    }
    let ys: Vec<T> = (0..resolution)
        .map(|k| T::of(lo + (hi - lo) * (k as f64 / (resolution - 1) as f64)))
        .collect();
    let vs = ys.iter().map(|&y| eval(y)).collect::<Result<Vec<T>>>()?;
    let mut k = 0;
    for i in 1..resolution {
        if vs[i] < vs[k] {
            k = i;
        }
    }
    let interior = k > 0 && k + 1 < resolution;
    let (mut by, mut bv) = (ys[k], vs[k]);
    if interior && opts.refine_steps > 0 {
        let (left, right) = (ys[k - 1], ys[k + 1]);
        let inside = |y: T| y > left && y < right;
        let s = ys[k + 1] - ys[k];
        let two = T::of(2.0);
        let curv = vs[k + 1] - two * vs[k] + vs[k - 1];
        if curv > T::zero() {
            let y = ys[k] - s * (vs[k + 1] - vs[k - 1]) / (two * curv);
            if inside(y) {
                let v = eval(y)?;
                if v < bv {
                    by = y;
                    bv = v;
                }
            }
        }
        let eta = s * T::of(1e-3);
        for _ in 1..opts.refine_steps {
            let (fp, fm) = (eval(by + eta)?, eval(by - eta)?);
            let d1 = (fp - fm) / (two * eta);
            let d2 = (fp - two * bv + fm) / (eta * eta);
            if !(d2 > T::zero()) {
                break;
            }
            let y = by - d1 / d2;
            if !inside(y) || y == by {
                break;
            }
            let v = eval(y)?;
            if !(v < bv) {
                break;
            }
            by = y;
            bv = v;
        }
    }
    Ok(FiberMin {
        value: bv,
        argmin: by,
        discrete_value: vs[k],
        discrete_argmin: ys[k],
        discrete_index: k,
        interior,
    })
}

/// Minimum of `f(x, .)` over the fibre `[lo, hi]`.
pub fn marginal_point<T: Scalar>(
    f: &CallableField<T>,
    kind: FiberKind,
    x: &[T],
    lo: f64,
    hi: f64,
    resolution: usize,
    opts: &MarginalOptions,
) -> Result<FiberMin<T>> {
    fiber_min(|y| f.eval(&total_point(kind, x, y)), lo, hi, resolution, opts)
}

/// The marginal function on the base grid.
#[derive(Clone, Debug)]
pub struct MarginalResult<T: Scalar> {
    /// `g`, masked out over empty fibres.
    pub g: GridFunction<T>,
    /// Minimum over the fibre samples alone.
    pub g_discrete: Vec<T>,
    /// Refined minimiser `gamma(x)`.
    pub gamma: Vec<T>,
    pub gamma_discrete: Vec<T>,
    /// The discrete minimiser lies strictly inside the fibre.
    pub interior: Vec<bool>,
    /// Base samples with empty fibres.
    pub excluded: Vec<usize>,
}

/// Computes `g` and `gamma` at every base sample, in parallel and in sample order.
pub fn marginal<T: Scalar>(
    f: &CallableField<T>,
    domain: &FiberedDomain,
    opts: &MarginalOptions,
) -> Result<MarginalResult<T>> {
    domain.check_field(f)?;
    marginal_with(|x, y| f.eval(&total_point(domain.kind, x, y)), domain, opts)
}

pub(crate) fn marginal_with<T: Scalar>(
    eval: impl Fn(&[T], T) -> Result<T> + Sync,
    domain: &FiberedDomain,
    opts: &MarginalOptions,
) -> Result<MarginalResult<T>> {
    let sites: Vec<Option<FiberMin<T>>> = (0..domain.base.len())
        .into_par_iter()
        .map(|i| {
            if domain.is_empty_at(i) {
                return Ok(None);
            }
            let x: Vec<T> = domain.base.point(i).into_iter().map(T::of).collect();
            fiber_min(|y| eval(&x, y), domain.lo[i], domain.hi[i], domain.resolution, opts).map(Some)
        })
        .collect::<Result<_>>()?;
    collect_result(domain.base.clone(), sites)
}

fn collect_result<T: Scalar>(base: GridGeometry, sites: Vec<Option<FiberMin<T>>>) -> Result<MarginalResult<T>> {
    let excluded: Vec<usize> = (0..sites.len()).filter(|&i| sites[i].is_none()).collect();
    if excluded.len() == sites.len() {
        return Err(Error::AllMasked);
    }
    let pick = |f: fn(&FiberMin<T>) -> T, empty: T| -> Vec<T> {
        sites.iter().map(|s| s.as_ref().map(f).unwrap_or(empty)).collect()
    };
    let values = pick(|s| s.value, T::neg_infinity());
    let mask = sites.iter().map(|s| s.is_some()).collect();
    Ok(MarginalResult {
        g: GridFunction::with_mask(base, values, mask)?,
        g_discrete: pick(|s| s.discrete_value, T::neg_infinity()),
        gamma: pick(|s| s.argmin, T::nan()),
        gamma_discrete: pick(|s| s.discrete_argmin, T::nan()),
        interior: sites.iter().map(|s| s.is_some_and(|s| s.interior)).collect(),
        excluded,
    })
}

/// Marginal of a sampled field whose last axis is the fibre. Masked or `-inf`
/// samples are left out of each fibre; the minimum is over the remaining
/// samples, with the same parabolic refinement against the sample neighbours.
pub fn marginal_of_grid<T: Scalar>(f: &GridFunction<T>) -> Result<MarginalResult<T>> {
    let g = &f.geometry;
    let d = g.dims();
    if d < 2 {
        return Err(Error::Precondition("a fibred grid needs a base axis and a fibre axis".into()));
    }
    let base = GridGeometry::new(g.origin[..d - 1].to_vec(), g.spacing[..d - 1].to_vec(), g.shape[..d - 1].to_vec())?;
    let nf = g.shape[d - 1];
    let (y0, hy) = (g.origin[d - 1], g.spacing[d - 1]);
    let sites: Vec<Option<FiberMin<T>>> = (0..base.len())
        .map(|b| {
            let start = b * nf;
            let mut k: Option<usize> = None;
            for i in 0..nf {
                if f.is_finite_at(start + i) && k.is_none_or(|k| f.values[start + i] < f.values[start + k]) {
                    k = Some(i);
                }
            }
            let k = k?;
            let v = f.values[start + k];
            let y = T::of(y0 + hy * k as f64);
            let ok = |i: usize| f.is_finite_at(start + i);
            let interior = k > 0 && k + 1 < nf && ok(k - 1) && ok(k + 1);
            let (mut value, mut argmin) = (v, y);
            if interior {
                let (vm, vp) = (f.values[start + k - 1], f.values[start + k + 1]);
                let two = T::of(2.0);
                let curv = vp - two * v + vm;
                if curv > T::zero() {
                    let t = (vm - vp) / (two * curv);
                    let refined = v - curv * t * t / two;
                    if t.abs() < T::one() && refined < value {
                        value = refined;
                        argmin = y + T::of(hy) * t;
                    }
                }
            }
            Some(FiberMin {
                value,
                argmin,
                discrete_value: v,
                discrete_argmin: y,
                discrete_index: k,
                interior,
            })
        })
        .collect();
    collect_result(base, sites)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_domain(lo: f64, hi: f64, n: usize) -> FiberedDomain {
        let base = GridGeometry::spanning(&[-1.0], &[1.0], &[21]).unwrap();
        FiberedDomain::uniform(base, FiberKind::Interval, lo, hi, n).unwrap()
    }

    #[test]
    fn coupled_quadratic_marginal() {
        let f = CallableField::<f64>::real("q", 2, |p| p[0] * p[0] + (p[1] - p[0]).powi(2));
        let r = marginal(&f, &line_domain(-3.0, 3.0, 61), &MarginalOptions::default()).unwrap();
        for i in 0..21 {
            let x = r.g.geometry.point(i)[0];
            assert!((r.g.values[i] - x * x).abs() < 1e-12);
            assert!((r.gamma[i] - x).abs() < 1e-6);
            assert!(r.interior[i]);
        }
    }

    #[test]
    fn separable_marginal_and_boundary_minimum() {
        let f = CallableField::<f64>::real("s", 2, |p| p[0] * p[0] + p[1] * p[1]);
        let r = marginal(&f, &line_domain(-1.0, 1.0, 21), &MarginalOptions::default()).unwrap();
        assert!(r.gamma.iter().all(|g| *g == 0.0));
        let h = CallableField::<f64>::real("m", 2, |p| p[0] * p[0] - p[1]);
        let r = marginal(&h, &line_domain(0.0, 1.0, 11), &MarginalOptions::default()).unwrap();
        assert!(r.interior.iter().all(|i| !i));
        assert!(r.gamma.iter().all(|g| *g == 1.0));
    }

    #[test]
    fn discrete_minimum_bounds_every_sample() {
        let f = CallableField::<f64>::real("w", 2, |p| (3.0 * p[1]).sin() + p[0] * p[1]);
        let d = line_domain(-2.0, 2.0, 17);
        let r = marginal(&f, &d, &MarginalOptions::default()).unwrap();
        for i in 0..d.base.len() {
            let x = d.base.point(i)[0];
            for k in 0..17 {
                let y = d.fiber_point(i, k);
                assert!(r.g_discrete[i] <= f.eval(&[x, y]).unwrap());
            }
            assert!(r.g.values[i] <= r.g_discrete[i]);
        }
    }

    #[test]
    fn empty_fibres_are_excluded() {
        let base = GridGeometry::spanning(&[-1.0], &[1.0], &[5]).unwrap();
        let d = FiberedDomain::from_bounds(base, FiberKind::Interval, 9, |x| (x[0], 0.5)).unwrap();
        let f = CallableField::<f64>::real("q", 2, |p| p[1] * p[1]);
        let r = marginal(&f, &d, &MarginalOptions::default()).unwrap();
        assert_eq!(r.excluded, vec![3, 4]);
        assert!(!r.g.mask[3]);
    }

    #[test]
    fn grid_marginal_matches_callable() {
        let geometry = GridGeometry::spanning(&[-1.0, -3.0], &[1.0, 3.0], &[11, 61]).unwrap();
        let grid = GridFunction::<f64>::from_fn(geometry, |p| p[0] * p[0] + (p[1] - p[0]).powi(2)).unwrap();
        let r = marginal_of_grid(&grid).unwrap();
        for i in 0..11 {
            let x = r.g.geometry.point(i)[0];
            assert!((r.g.values[i] - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn annulus_points_use_the_radius() {
        let p = total_point(FiberKind::Annulus, &[1.0, 2.0], 0.5);
        assert_eq!(p, vec![1.0, 0.5, 2.0, 0.0]);
    }
}
