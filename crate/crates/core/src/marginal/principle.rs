//! The minimum principle harness: if `f` is `F#P`-subharmonic on a fibred
//! domain, its marginal should be `F`-subharmonic at interior minimisers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{fd_jet, fd_jet_callable, CallableField};
use crate::jets::Jet;
use crate::linalg::ToleranceConfig;
use crate::product::{self, ProductSpec, SamplingConfig};
use crate::report::{Outcome, Violation, VerificationReport};
use crate::scalar::{Entry, Scalar};
use crate::subequation::Subequation;

use super::{marginal, FiberedDomain, MarginalOptions};

/// Settings of the minimum principle and pseudoconvexity checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipleOptions {
    pub tol: ToleranceConfig,
    /// Step for jets of the field when no analytic jet is attached.
    pub step: f64,
    /// Fibre samples visited per base sample in the hypothesis check.
    pub hypothesis_fiber_samples: usize,
    pub marginal: MarginalOptions,
    pub sampling: SamplingConfig,
}

impl Default for PrincipleOptions {
    fn default() -> Self {
        Self {
            tol: ToleranceConfig::loose(),
            step: 1e-4,
            hypothesis_fiber_samples: 9,
            marginal: MarginalOptions::default(),
            sampling: SamplingConfig::default(),
        }
    }
}

fn check_setup<E: Entry>(spec: &Subequation<E>, f: &CallableField<E::Real>, domain: &FiberedDomain) -> Result<()> {
    domain.check_field(f)?;
    if domain.flavor() != E::FLAVOR {
        return Err(Error::Precondition(format!(
            "{} subequation on a {} domain",
            E::FLAVOR.as_str(),
            domain.flavor().as_str()
        )));
    }
    let n = domain.base.dims() / E::EMBED;
    if spec.dim() != n {
        return Err(Error::dim("subequation on the base", n, spec.dim()));
    }
    Ok(())
}

/// Checks that `f` is `F#P`-subharmonic at a lattice of points of the domain.
/// Each jet is tested by the default product decision (exact when available)
/// and by the sampled slice tester; either refutation is a violation.
fn hypothesis<E: Entry>(
    spec: &Subequation<E>,
    f: &CallableField<E::Real>,
    domain: &FiberedDomain,
    opts: &PrincipleOptions,
) -> Result<VerificationReport> {
    let pspec = ProductSpec::new(spec.clone(), Subequation::pos_cone(1))?.with_sampling(opts.sampling.clone());
    let exact = product::is_exactly_decidable(&ProductSpec {
        f: product::simplify(&pspec.f),
        g: product::simplify(&pspec.g),
        sampling: pspec.sampling.clone(),
    });
    let res = domain.resolution;
    let per_fiber = opts.hypothesis_fiber_samples.clamp(1, res - 2);
    let points: Vec<Vec<E::Real>> = (0..domain.base.len())
        .filter(|&i| !domain.is_empty_at(i))
        .flat_map(|i| {
            let x: Vec<E::Real> = domain.base.point(i).into_iter().map(E::Real::of).collect();
            (0..per_fiber).map(move |s| {
                let k = 1 + s * (res - 3) / per_fiber.saturating_sub(1).max(1);
                (x.clone(), k.min(res - 2), i)
            })
        })
        .map(|(x, k, i)| domain.total_point(&x, E::Real::of(domain.fiber_point(i, k))))
        .collect();
    let step = E::Real::of(opts.step);
    let outcomes: Vec<Result<Option<Violation>>> = points
        .par_iter()
        .map(|pt| {
            let real = match f.analytic_jet(pt)? {
                Some(j) => j,
                None => fd_jet_callable(f, pt, step)?,
            };
            let jet = Jet::<E>::from_real_coords(&real)?;
            let site = pt.iter().map(|v| v.as_f64()).collect::<Vec<_>>();
            if !product::contains(&pspec, &jet, &opts.tol)?.is_member() {
                return Ok(Some(Violation::new(site, "not_product_subharmonic").jet_doc(jet.to_doc())));
            }
            if exact && !product::contains_sampled(&pspec, &jet, &pspec.sampling, &opts.tol)?.is_member() {
                return Ok(Some(Violation::new(site, "slice_refutes").jet_doc(jet.to_doc())));
            }
            Ok(None)
        })
        .collect();
    let mut report = VerificationReport::new("hypothesis");
    report.checked_sites = points.len();
    for o in outcomes {
        if let Some(v) = o? {
            report.push(v);
        }
    }
    Ok(report)
}

/// Runs the minimum principle for `spec` on `f`.
///
/// The hypothesis needs `spec` to have constant coefficients and negativity
/// and `f` to be `spec#P`-subharmonic; if it fails the outcome is
/// `HYPOTHESIS_FAIL` and the conclusion is not examined. Otherwise the
/// marginal is computed and its finite-difference jet checked against `spec`
/// at every base sample whose minimiser is interior; failures there give
/// `CONCLUSION_FAIL`.
pub fn verify_minimum_principle<E: Entry>(
    spec: &Subequation<E>,
    f: &CallableField<E::Real>,
    domain: &FiberedDomain,
    opts: &PrincipleOptions,
) -> Result<VerificationReport> {
    check_setup(spec, f, domain)?;
    let mut report = VerificationReport::new(format!("minimum principle for {} on {}", spec.name(), f.name));
    report.meta("subequation", spec.name());
    report.meta("tolerances", opts.tol);
    let flags = spec.flags();
    if !flags.constant_coefficient || !flags.has_negativity {
        report.push(Violation::new(vec![], "hypothesis_flags").detail("subequation needs constant coefficients and negativity"));
        report.set_outcome(Outcome::HypothesisFail);
        return Ok(report);
    }
    let hyp = hypothesis(spec, f, domain, opts)?;
    report.meta("hypothesis_sites", hyp.checked_sites);
    if !hyp.passed {
        report.meta("hypothesis_violations", hyp.violations.len());
        report.absorb(hyp);
        report.set_outcome(Outcome::HypothesisFail);
        return Ok(report);
    }

    let m = marginal(f, domain, &opts.marginal)?;
    let sites: Vec<usize> = (0..m.g.len()).filter(|&i| m.interior[i]).collect();
    let outcomes: Vec<Result<Option<Option<Violation>>>> = sites
        .par_iter()
        .map(|&i| {
            let Ok(real) = fd_jet(&m.g, i) else {
                return Ok(None);
            };
            let jet = Jet::<E>::from_real_coords(&real)?;
            if spec.contains(&jet, &opts.tol)? {
                return Ok(Some(None));
            }
            Ok(Some(Some(
                Violation::new(m.g.geometry.point(i), "marginal_not_subharmonic")
                    .margin_opt(spec.margin(&jet, &opts.tol)?)
                    .jet_doc(jet.to_doc()),
            )))
        })
        .collect();
    let mut skipped = 0;
    for o in outcomes {
        match o? {
            None => skipped += 1,
            Some(v) => {
                report.checked_sites += 1;
                if let Some(v) = v {
                    report.push(v);
                }
            }
        }
    }
    report.meta("interior_sites", sites.len());
    report.meta("skipped_sites", skipped);
    report.meta("excluded_sites", m.excluded.len());
    report.set_outcome(Outcome::ConclusionFail);
    Ok(report)
}

/// Evidence that `u` is a subharmonic exhaustion of the domain whose marginal
/// is again an exhaustion of the base: `u` is `spec#P`-subharmonic, and for
/// every level the sublevel sets of `u` and of the discrete marginal stay at
/// least two cells away from the edges of the discretised domain.
pub fn pseudoconvexity_certificate<E: Entry>(
    spec: &Subequation<E>,
    u: &CallableField<E::Real>,
    domain: &FiberedDomain,
    levels: &[f64],
    opts: &PrincipleOptions,
) -> Result<VerificationReport> {
    check_setup(spec, u, domain)?;
    let mut report = VerificationReport::new(format!("pseudoconvexity certificate for {}", u.name));
    report.absorb(hypothesis(spec, u, domain, opts)?);
    let m = marginal(u, domain, &opts.marginal)?;
    let geom = &domain.base;
    let res = domain.resolution;
    let base_depth = |i: usize| -> usize {
        geom.multi_index(i)
            .iter()
            .zip(&geom.shape)
            .map(|(&k, &s)| k.min(s - 1 - k))
            .min()
            .unwrap_or(0)
    };
    let values: Vec<Vec<E::Real>> = (0..geom.len())
        .into_par_iter()
        .map(|i| {
            if domain.is_empty_at(i) {
                return Ok(vec![]);
            }
            let x: Vec<E::Real> = geom.point(i).into_iter().map(E::Real::of).collect();
            (0..res)
                .map(|k| u.eval(&domain.total_point(&x, E::Real::of(domain.fiber_point(i, k)))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut counts = Vec::new();
    for &level in levels {
        let a = E::Real::of(level);
        let (mut total, mut touching, mut first) = (0usize, 0usize, None);
        for (i, vs) in values.iter().enumerate() {
            for (k, v) in vs.iter().enumerate() {
                if *v < a {
                    total += 1;
                    if base_depth(i) < 2 || k.min(res - 1 - k) < 2 {
                        touching += 1;
                        first.get_or_insert_with(|| domain.total_point(&geom.point(i), domain.fiber_point(i, k)));
                    }
                }
            }
        }
        if let Some(site) = first {
            report.push(
                Violation::new(site, "sublevel_reaches_boundary")
                    .detail(format!("level {level}: {touching} of {total} cells")),
            );
        }
        let below: Vec<usize> = (0..geom.len()).filter(|&i| m.g.mask[i] && m.g_discrete[i] < a).collect();
        if let Some(&i) = below.iter().find(|&&i| base_depth(i) < 2) {
            report.push(Violation::new(geom.point(i), "marginal_sublevel_reaches_boundary").detail(format!("level {level}")));
        }
        report.checked_sites += 1;
        counts.push((level, total, below.len()));
    }
    report.meta("levels", counts);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridGeometry;
    use crate::marginal::FiberKind;
    use crate::C64;

    fn domain() -> FiberedDomain {
        let base = GridGeometry::spanning(&[-1.0], &[1.0], &[21]).unwrap();
        FiberedDomain::uniform(base, FiberKind::Interval, -3.0, 3.0, 121).unwrap()
    }

    #[test]
    fn convex_field_passes() {
        let f = CallableField::<f64>::real("q", 2, |p| p[0] * p[0] + (p[1] - p[0]).powi(2));
        let r = verify_minimum_principle(&Subequation::<f64>::pos_cone(1), &f, &domain(), &PrincipleOptions::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{:?}", r.violations.first());
        assert!(r.checked_sites > 0);
    }

    #[test]
    fn saddle_fails_the_hypothesis() {
        let f = CallableField::<f64>::real("saddle", 2, |p| p[0] * p[0] - 2.0 * p[1] * p[1]);
        let r = verify_minimum_principle(&Subequation::<f64>::pos_cone(1), &f, &domain(), &PrincipleOptions::default()).unwrap();
        assert_eq!(r.outcome, Outcome::HypothesisFail);
    }

    #[test]
    fn non_negative_subequation_fails_the_hypothesis() {
        let spec = Subequation::<f64>::custom("r<=0", 1, crate::Flags { has_negativity: false, ..crate::Flags::ALL }, |j, _| j.r <= 0.0);
        let f = CallableField::<f64>::real("q", 2, |p| p[0] * p[0] + p[1] * p[1]);
        let r = verify_minimum_principle(&spec, &f, &domain(), &PrincipleOptions::default()).unwrap();
        assert_eq!(r.outcome, Outcome::HypothesisFail);
    }

    #[test]
    fn complex_ring_passes() {
        let base = GridGeometry::spanning(&[-1.0, -1.0], &[1.0, 1.0], &[7, 7]).unwrap();
        let d = FiberedDomain::uniform(base, FiberKind::Annulus, 0.75, 1.5, 81).unwrap();
        let f = CallableField::<f64>::complex("ring", 2, |p| {
            let w2 = p[1] * p[1] + p[3] * p[3];
            p[0] * p[0] + p[2] * p[2] + (w2 - 1.0).powi(2)
        });
        let r = verify_minimum_principle(&Subequation::<C64>::pos_cone(1), &f, &d, &PrincipleOptions::default()).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{:?}", r.violations.first());
    }

    #[test]
    fn exhaustion_levels() {
        let u = CallableField::<f64>::real("bowl", 2, |p| p[0] * p[0] + p[1] * p[1] / 9.0);
        let r = pseudoconvexity_certificate(&Subequation::<f64>::pos_cone(1), &u, &domain(), &[0.5], &PrincipleOptions::default())
            .unwrap();
        assert!(r.passed, "{:?}", r.violations);
        let r = pseudoconvexity_certificate(&Subequation::<f64>::pos_cone(1), &u, &domain(), &[2.0], &PrincipleOptions::default())
            .unwrap();
        assert!(!r.passed);
    }
}
