//! Sampled audits of the structural axioms a family declares.

use rand::Rng;

use super::{Flags, MuField, Subequation};
use num_traits::{Float, One};
use crate::error::Result;
use crate::jets::Jet;
use crate::linalg::{SelfAdjoint, ToleranceConfig};
use crate::report::{Violation, VerificationReport};
use crate::sampling::{self, SeededRng};
use crate::scalar::{Entry, Scalar};

/// Attempts per sample when members can only be found by rejection.
const REJECTION_TRIES: usize = 64;

fn random_base<E: Entry>(spec: &Subequation<E>, rng: &mut SeededRng) -> Vec<E> {
    if let Subequation::FLambdaMu {
        mu: MuField::Tabulated(t),
        n,
        ..
    } = spec
    {
        // Stay inside the table so lookups are meaningful.
        let x: Vec<E::Real> = (0..t.origin.len())
            .map(|k| {
                let span = t.spacing[k] * (t.shape[k] - 1) as f64;
                E::Real::of(t.origin[k] + span * rng.random::<f64>())
            })
            .collect();
        let mut z = E::unrealify_vector(&x);
        z.resize(*n, E::zero());
        return z;
    }
    sampling::vector(rng, spec.dim())
}

/// A random member of `spec` at `base`, biased towards the boundary: PSD parts
/// are built with random (often deficient) rank and ball gradients often sit
/// on the sphere. Returns `None` when rejection sampling finds nothing.
pub fn sample_member<E: Entry>(
    spec: &Subequation<E>,
    base: &[E],
    rng: &mut SeededRng,
    tol: &ToleranceConfig,
) -> Result<Option<Jet<E>>> {
    let n = spec.dim();
    let r = E::Real::of(sampling::normal(rng));
    let jet = match spec {
        Subequation::PosCone { .. } => {
            let rank = rng.random_range(0..=n);
            Jet::new(r, sampling::vector(rng, n), sampling::psd(rng, n, rank))?
        }
        Subequation::FLambdaMu { lambda0, mu, .. } => {
            let p: Vec<E> = sampling::vector(rng, n);
            let rank = rng.random_range(0..=n);
            let mu = mu.at(Some(base))?;
            let a = SelfAdjoint::outer(&p)
                .scale(*lambda0)
                .try_add(&mu)?
                .try_add(&sampling::psd(rng, n, rank))?;
            Jet::new(r, p, a)?
        }
        Subequation::GradientBall { bound, .. } => {
            let u: Vec<E> = sampling::unit_vector(rng, n);
            let radius = if rng.random::<bool>() {
                *bound
            } else {
                *bound * E::Real::of(rng.random::<f64>())
            };
            let p = u.into_iter().map(|x| x.mul_real(radius)).collect();
            Jet::new(r, p, sampling::self_adjoint(rng, n))?
        }
        Subequation::Perturbed { inner, delta } => {
            let Some(j) = sample_member(inner, base, rng, tol)? else {
                return Ok(None);
            };
            let dr = *delta * E::Real::of(2.0 * rng.random::<f64>() - 1.0);
            let dp: Vec<E> = sampling::unit_vector(rng, n);
            let s = *delta * E::Real::of(rng.random::<f64>());
            let p = j.p.iter().zip(&dp).map(|(&a, &b)| a + b.mul_real(s)).collect();
            Jet::new(j.r + dr, p, j.a)?
        }
        Subequation::Product(_) | Subequation::Custom(_) => {
            for _ in 0..REJECTION_TRIES {
                let a = sampling::psd(rng, n, n).try_add(&sampling::self_adjoint(rng, n).scale(E::Real::of(0.1)))?;
                let p = sampling::vector::<E, _>(rng, n)
                    .into_iter()
                    .map(|x| x.mul_real(E::Real::of(0.1)))
                    .collect();
                let cand = Jet::new(r, p, a)?.with_base(base.to_vec())?;
                if spec.contains(&cand, tol)? {
                    return Ok(Some(cand));
                }
            }
            return Ok(None);
        }
    };
    Ok(Some(jet.with_base(base.to_vec())?))
}

fn violation<E: Entry>(index: usize, kind: &str, jet: &Jet<E>, detail: String) -> Violation {
    Violation::new(vec![index as f64], kind)
        .jet_doc(jet.to_doc())
        .detail(detail)
}

/// Samples members and checks Positivity (adding PSD matrices), Negativity
/// (lowering the value), convexity of fibres and base-point independence, each
/// only when the family declares it. Positivity is always checked.
pub fn audit_properties<E: Entry>(
    spec: &Subequation<E>,
    samples: usize,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    let flags: Flags = spec.flags();
    let n = spec.dim();
    let mut report = VerificationReport::new(format!("audit {}", spec.name()));
    report.meta("family", spec.name());
    report.meta("flags", flags);
    report.meta("samples", samples);
    report.meta("seed", seed);
    report.meta("tolerances", tol);
    let mut skipped = 0usize;

    for i in 0..samples {
        let mut rng = sampling::substream(seed, i as u64);
        let base = random_base(spec, &mut rng);
        let Some(jet) = sample_member(spec, &base, &mut rng, tol)? else {
            skipped += 1;
            continue;
        };
        report.checked_sites += 1;
        if !spec.contains(&jet, tol)? {
            report.push(violation(i, "sampler", &jet, "sampled member rejected".into()));
            continue;
        }

        let rank = rng.random_range(1..=n.max(1)).min(n);
        let scale = E::Real::of(10f64.powf(rng.random_range(-2.0..2.0)));
        let p = sampling::psd::<E, _>(&mut rng, n, rank).scale(scale);
        let lifted = jet.add_hessian(&p)?;
        if !spec.contains(&lifted, tol)? {
            report.push(violation(i, "positivity", &lifted, "adding a PSD matrix left the family".into()));
        }

        if flags.has_negativity {
            let drop = E::Real::of(sampling::normal(&mut rng).abs()) * (E::Real::one() + Float::abs(jet.r));
            let lowered = Jet {
                r: jet.r - drop,
                ..jet.clone()
            };
            if !spec.contains(&lowered, tol)? {
                report.push(violation(i, "negativity", &lowered, "lowering r left the family".into()));
            }
        }

        if flags.convex {
            if let Some(other) = sample_member(spec, &base, &mut rng, tol)? {
                let t = E::Real::of(rng.random::<f64>());
                let mix = Jet::combine(&[jet.clone(), other], &[t, E::Real::one() - t], tol)?;
                if !spec.contains(&mix, tol)? {
                    report.push(violation(
                        i,
                        "convexity",
                        &mix,
                        format!("combination with weight {} left the family", t.as_f64()),
                    ));
                }
            }
        }

        if flags.constant_coefficient {
            let moved = jet.rebase(Some(sampling::vector(&mut rng, n)));
            if !spec.contains(&moved, tol)? {
                report.push(violation(i, "constant_coefficient", &moved, "rebasing left the family".into()));
            }
        }
    }
    report.meta("skipped_samples", skipped);
    report.meta("topological_property", "not audited");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pos_cone_passes() {
        let r = audit_properties(&Subequation::<f64>::pos_cone(3), 300, 1, &ToleranceConfig::default()).unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
        assert_eq!(r.checked_sites, 300);
    }

    #[test]
    fn gradient_ball_is_convex() {
        let f = Subequation::<f64>::gradient_ball(2, 1.0).unwrap();
        let r = audit_properties(&f, 300, 2, &ToleranceConfig::default()).unwrap();
        assert!(r.passed, "{:?}", r.violations.first());
    }

    #[test]
    fn negative_lambda_declared_convex_fails() {
        let Subequation::FLambdaMu { n, lambda0, mu, mut flags } =
            Subequation::<f64>::f_lambda_mu(-1.0, SelfAdjoint::zeros(2))
        else {
            unreachable!()
        };
        flags.convex = true;
        let f = Subequation::FLambdaMu { n, lambda0, mu, flags };
        let r = audit_properties(&f, 200, 3, &ToleranceConfig::default()).unwrap();
        assert!(!r.passed);
        assert!(r.violations.iter().all(|v| v.kind == "convexity"));
    }
}
