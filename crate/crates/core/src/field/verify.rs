//! Checking `J^2_x f in F_x` over the samples of a field.

use num_traits::Float;
use rayon::prelude::*;

use super::callable::CallableField;
use super::fd::{fd_jet, fd_jet_callable};
use super::grid::GridFunction;
use crate::error::{Error, Result};
use crate::jets::Jet;
use crate::linalg::ToleranceConfig;
use crate::report::{Violation, VerificationReport};
use crate::scalar::{Entry, Scalar};
use crate::subequation::Subequation;

/// Which samples of a grid take part in a check. Samples whose stencil does
/// not fit, and `-inf` samples, are always skipped.
#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    /// Every sample with a complete stencil.
    Interior,
    /// Samples at least this far from the faces of the bounding box.
    Shrunk(f64),
    /// Samples flagged `true`.
    Flags(Vec<bool>),
}

impl Region {
    pub fn selects<T: Scalar>(&self, f: &GridFunction<T>, index: usize) -> bool {
        match self {
            Region::Interior => true,
            Region::Shrunk(d) => f.geometry.distance_to_boundary(index) >= *d,
            Region::Flags(flags) => flags.get(index).copied().unwrap_or(false),
        }
    }
}

/// Selected samples with their finite-difference jets, in sample order.
/// Returns the jets and the number of selected samples that were skipped.
pub fn region_jets<T: Scalar>(f: &GridFunction<T>, region: &Region) -> (Vec<(usize, Jet<T>)>, usize) {
    let found: Vec<(usize, Option<Jet<T>>)> = (0..f.len())
        .into_par_iter()
        .filter(|&i| f.mask[i] && region.selects(f, i))
        .map(|i| (i, fd_jet(f, i).ok()))
        .collect();
    let skipped = found.iter().filter(|(_, j)| j.is_none()).count();
    let jets = found.into_iter().filter_map(|(i, j)| j.map(|j| (i, j))).collect();
    (jets, skipped)
}

fn site_of<T: Scalar>(jet: &Jet<T>) -> Vec<f64> {
    jet.base
        .as_deref()
        .map(|b| b.iter().map(|v| v.as_f64()).collect())
        .unwrap_or_default()
}

fn check_jets<E: Entry>(
    name: String,
    jets: Vec<Jet<E::Real>>,
    spec: &Subequation<E>,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    if jets.is_empty() {
        return Err(Error::EmptyRegion("no sample in the region has a complete stencil"));
    }
    let outcomes: Vec<Result<Option<Violation>>> = jets
        .par_iter()
        .map(|real| {
            let jet = Jet::<E>::from_real_coords(real)?;
            if spec.contains(&jet, tol)? {
                return Ok(None);
            }
            Ok(Some(
                Violation::new(site_of(real), "not_subharmonic")
                    .margin_opt(spec.margin(&jet, tol)?)
                    .jet_doc(jet.to_doc()),
            ))
        })
        .collect();
    let mut report = VerificationReport::new(name);
    report.checked_sites = jets.len();
    for o in outcomes {
        if let Some(v) = o? {
            report.push(v);
        }
    }
    report.meta("subequation", spec.name());
    report.meta("tolerances", tol);
    Ok(report)
}

fn check_dims<E: Entry>(spec: &Subequation<E>, real_dim: usize) -> Result<()> {
    let want = spec.dim() * E::EMBED;
    if want != real_dim {
        return Err(Error::dim("field dimension for subequation", want, real_dim));
    }
    Ok(())
}

/// Checks the finite-difference jet against `spec` at every selected sample.
/// For a complex `spec` the grid lives on `R^{2n}` in `(Re z, Im z)` order.
pub fn verify_subharmonic<E: Entry>(
    f: &GridFunction<E::Real>,
    spec: &Subequation<E>,
    region: &Region,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    check_dims(spec, f.geometry.dims())?;
    let (jets, skipped) = region_jets(f, region);
    let neg_inf = (0..f.len())
        .filter(|&i| f.mask[i] && region.selects(f, i) && f.values[i] == <E::Real as Float>::neg_infinity())
        .count();
    let mut report = check_jets(
        format!("subharmonic {}", spec.name()),
        jets.into_iter().map(|(_, j)| j).collect(),
        spec,
        tol,
    )?;
    report.meta("skipped_sites", skipped);
    report.meta("neg_inf_sites", neg_inf);
    Ok(report)
}

/// Same check for a callable field at the given points (real coordinates),
/// using the analytic jet when available and finite differences with step `h`
/// otherwise.
pub fn verify_subharmonic_callable<E: Entry>(
    f: &CallableField<E::Real>,
    spec: &Subequation<E>,
    points: &[Vec<E::Real>],
    h: E::Real,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    check_dims(spec, f.real_dim())?;
    let jets = points
        .par_iter()
        .map(|x| match f.analytic_jet(x)? {
            Some(j) => Ok(j),
            None => fd_jet_callable(f, x, h),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut report = check_jets(format!("subharmonic {} on {}", spec.name(), f.name), jets, spec, tol)?;
    report.meta("step", h.as_f64());
    Ok(report)
}

/// Smallest eigenvalue of the finite-difference Hessian over the region.
pub fn hessian_floor<T: Scalar>(f: &GridFunction<T>, region: &Region) -> Result<T> {
    let (jets, _) = region_jets(f, region);
    if jets.is_empty() {
        return Err(Error::EmptyRegion("no sample in the region has a complete stencil"));
    }
    let mins: Vec<T> = jets.par_iter().map(|(_, j)| j.a.min_eigenpair().0).collect();
    Ok(mins.into_iter().fold(T::infinity(), T::min))
}

/// `max(0, -min lambda_min(Hess f))` over interior samples: the smallest
/// `kappa` for which `f + (kappa/2)|x|^2` has a PSD finite-difference Hessian.
pub fn semiconvexity_constant<T: Scalar>(f: &GridFunction<T>) -> Result<T> {
    semiconvexity_constant_in(f, &Region::Interior)
}

pub fn semiconvexity_constant_in<T: Scalar>(f: &GridFunction<T>, region: &Region) -> Result<T> {
    Ok((-hessian_floor(f, region)?).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::grid::GridGeometry;
    use crate::C64;

    fn square(n: usize) -> GridGeometry {
        GridGeometry::spanning(&[-1.0, -1.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn convex_passes_concave_fails_everywhere() {
        let tol = ToleranceConfig::default();
        let spec = Subequation::<f64>::pos_cone(2);
        let f = GridFunction::from_fn(square(11), |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        let r = verify_subharmonic(&f, &spec, &Region::Interior, &tol).unwrap();
        assert!(r.passed);
        assert_eq!(r.checked_sites, 81);
        let g = f.map(|v| -v);
        let r = verify_subharmonic(&g, &spec, &Region::Interior, &tol).unwrap();
        assert_eq!(r.violations.len(), 81);
        assert!(r.violations.iter().all(|v| v.margin.unwrap() < 0.0));
    }

    #[test]
    fn coupled_quadratic_passes_product_cone() {
        let tol = ToleranceConfig::default();
        let spec = Subequation::<f64>::product(Subequation::pos_cone(1), Subequation::pos_cone(1)).unwrap();
        let f = GridFunction::from_fn(square(21), |x| x[0] * x[0] + (x[1] - x[0]).powi(2)).unwrap();
        let r = verify_subharmonic(&f, &spec, &Region::Interior, &tol).unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
    }

    #[test]
    fn complex_grid_uses_complex_hessian() {
        // Re(z^2) = x^2 - y^2 is pluriharmonic but not convex.
        let tol = ToleranceConfig::loose();
        let f = GridFunction::from_fn(square(11), |x| x[0] * x[0] - x[1] * x[1]).unwrap();
        let complex = Subequation::<C64>::pos_cone(1);
        assert!(verify_subharmonic(&f, &complex, &Region::Interior, &tol).unwrap().passed);
        let real = Subequation::<f64>::pos_cone(2);
        assert!(!verify_subharmonic(&f, &real, &Region::Interior, &tol).unwrap().passed);
    }

    #[test]
    fn semiconvexity_examples() {
        let g = GridGeometry::spanning(&[-1.0], &[1.0], &[41]).unwrap();
        let convex = GridFunction::<f64>::from_fn(g.clone(), |x| x[0].powi(4) + x[0]).unwrap();
        assert_eq!(semiconvexity_constant(&convex).unwrap(), 0.0);
        let concave = GridFunction::<f64>::from_fn(g, |x| -x[0] * x[0]).unwrap();
        assert!((semiconvexity_constant(&concave).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn empty_region_is_an_error() {
        let g = GridGeometry::spanning(&[-1.0], &[1.0], &[2]).unwrap();
        let f = GridFunction::<f64>::from_fn(g, |x| x[0]).unwrap();
        assert!(matches!(
            verify_subharmonic(&f, &Subequation::<f64>::pos_cone(1), &Region::Interior, &ToleranceConfig::default()),
            Err(Error::EmptyRegion(_))
        ));
    }
}
