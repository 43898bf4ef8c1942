//! Marginals of `f_j = f + phi / j` with a strictly subharmonic `phi`.
//!
//! On real fibres `phi(y) = exp(-alpha y)`; on annuli `phi(w) = exp(alpha |w|^2)`.
//! Since `phi > 0`, the discrete marginals satisfy
//! `g <= g_j <= g + phi(gamma) / j` and decrease in `j`, and these hold exactly
//! in floating point because every step is monotone under rounding.

use crate::error::{Error, Result};
use crate::field::CallableField;
use crate::report::{Violation, VerificationReport};
use crate::scalar::Scalar;

use super::{marginal, marginal_with, total_point, FiberKind, FiberedDomain, MarginalOptions, MarginalResult};

/// Largest allowed exponent of `phi` on the domain.
pub const PHI_EXPONENT_CAP: f64 = 500.0;

/// Marginal of `f + phi / j`.
#[derive(Clone, Debug)]
pub struct PerturbedMarginal<T: Scalar> {
    pub alpha: f64,
    pub j: f64,
    pub result: MarginalResult<T>,
}

fn phi<T: Scalar>(kind: FiberKind, alpha: T, y: T) -> T {
    match kind {
        FiberKind::Interval => (-alpha * y).exp(),
        FiberKind::Annulus => (alpha * y * y).exp(),
    }
}

fn check_exponent(domain: &FiberedDomain, alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::Precondition(format!("perturbation rate must be nonnegative, got {alpha}")));
    }
    let worst = (0..domain.base.len())
        .filter(|&i| !domain.is_empty_at(i))
        .map(|i| match domain.kind {
            FiberKind::Interval => (-alpha * domain.lo[i]).max(-alpha * domain.hi[i]),
            FiberKind::Annulus => alpha * domain.hi[i] * domain.hi[i],
        })
        .fold(f64::NEG_INFINITY, f64::max);
    if worst > PHI_EXPONENT_CAP {
        return Err(Error::Overflow {
            value: worst,
            limit: PHI_EXPONENT_CAP,
        });
    }
    Ok(())
}

/// Marginal of `f + phi / j` on `domain`.
pub fn perturbed_marginal<T: Scalar>(
    f: &CallableField<T>,
    domain: &FiberedDomain,
    alpha: f64,
    j: f64,
    opts: &MarginalOptions,
) -> Result<PerturbedMarginal<T>> {
    domain.check_field(f)?;
    check_exponent(domain, alpha)?;
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::Precondition(format!("perturbation index must be positive, got {j}")));
    }
    let (a, inv_j, kind) = (T::of(alpha), T::of(1.0 / j), domain.kind);
    let result = marginal_with(
        |x, y| Ok(f.eval(&total_point(kind, x, y))? + phi(kind, a, y) * inv_j),
        domain,
        opts,
    )?;
    Ok(PerturbedMarginal { alpha, j, result })
}

/// Checks the sandwich `g <= g_j <= g + phi(gamma)/j` and monotonicity in `j`
/// on the discrete marginals, for every `j` in `js`.
pub fn perturbed_marginal_certificate<T: Scalar>(
    f: &CallableField<T>,
    domain: &FiberedDomain,
    alpha: f64,
    js: &[f64],
    opts: &MarginalOptions,
) -> Result<VerificationReport> {
    if js.is_empty() {
        return Err(Error::Precondition("no perturbation indices given".into()));
    }
    let mut js = js.to_vec();
    js.sort_by(f64::total_cmp);
    let base = marginal(f, domain, opts)?;
    let mut report = VerificationReport::new(format!("perturbed marginal of {}", f.name));
    let a = T::of(alpha);
    let mut previous: Option<(f64, Vec<T>)> = None;
    let mut gaps = Vec::new();
    for &j in &js {
        let pert = perturbed_marginal(f, domain, alpha, j, opts)?;
        let inv_j = T::of(1.0 / j);
        let mut gap = 0.0f64;
        for i in 0..domain.base.len() {
            if !base.g.mask[i] {
                continue;
            }
            report.checked_sites += 1;
            let site = domain.base.point(i);
            let (g, gj) = (base.g_discrete[i], pert.result.g_discrete[i]);
            let bound = g + phi(domain.kind, a, base.gamma_discrete[i]) * inv_j;
            gap = gap.max((gj - g).as_f64());
            if !(g <= gj) {
                report.push(
                    Violation::new(site.clone(), "below_marginal")
                        .margin((gj - g).as_f64())
                        .detail(format!("j = {j}")),
                );
            }
            if !(gj <= bound) {
                report.push(
                    Violation::new(site.clone(), "above_bound")
                        .margin((bound - gj).as_f64())
                        .detail(format!("j = {j}")),
                );
            }
            if let Some((pj, prev)) = &previous {
                if !(gj <= prev[i]) {
                    report.push(
                        Violation::new(site, "not_monotone")
                            .margin((prev[i] - gj).as_f64())
                            .detail(format!("j = {pj} to j = {j}")),
                    );
                }
            }
        }
        gaps.push(gap);
        previous = Some((j, pert.result.g_discrete));
    }
    report.meta("alpha", alpha);
    report.meta("js", &js);
    report.meta("max_gap", gaps);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridGeometry;

    fn domain() -> FiberedDomain {
        let base = GridGeometry::spanning(&[-1.0], &[1.0], &[11]).unwrap();
        FiberedDomain::uniform(base, FiberKind::Interval, -2.0, 2.0, 41).unwrap()
    }

    #[test]
    fn unit_perturbation_shifts_by_one_over_j() {
        let f = CallableField::<f64>::real("q", 2, |p| p[0] * p[0] + (p[1] - p[0]).powi(2));
        let g = marginal(&f, &domain(), &MarginalOptions::default()).unwrap();
        for j in [1.0, 10.0, 1000.0] {
            let p = perturbed_marginal(&f, &domain(), 0.0, j, &MarginalOptions::default()).unwrap();
            for i in 0..11 {
                assert_eq!(p.result.g_discrete[i], g.g_discrete[i] + 1.0 / j);
            }
        }
    }

    #[test]
    fn flat_minimum_certificate_passes() {
        let f = CallableField::<f64>::real("flat", 2, |p| p[0] * p[0] + (p[1].abs() - 1.0).max(0.0).powi(3));
        let r = perturbed_marginal_certificate(&f, &domain(), 1.0, &[1.0, 10.0, 100.0, 1000.0], &MarginalOptions::default())
            .unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
        assert_eq!(r.checked_sites, 44);
    }

    #[test]
    fn exponent_guard() {
        let f = CallableField::<f64>::real("q", 2, |p| p[1] * p[1]);
        assert!(matches!(
            perturbed_marginal(&f, &domain(), 300.0, 1.0, &MarginalOptions::default()),
            Err(Error::Overflow { .. })
        ));
    }
}
