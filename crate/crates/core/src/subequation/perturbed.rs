//! Membership in `F^delta`.
//!
//! The built-in families have closed forms. The positive cone ignores `(r, p)`,
//! the gradient ball grows by `delta`, and for `A - lambda0 p p^* - mu >= 0`
//! with `lambda0 >= 0` the best gradient is found by an exact trust-region
//! minimisation of `p'^* M^+ p'` over the ball around `p`. Anything else is
//! decided by a deterministic lattice search over the `(r', p')` ball.

use super::{MuField, Subequation};
use num_traits::{Float, One, Zero};
use crate::error::Result;
use crate::jets::Jet;
use crate::linalg::{is_psd, SelfAdjoint, ToleranceConfig};
use crate::scalar::{dot, norm, Entry, Scalar};

/// Largest lattice, `3^6`, enumerated in full before falling back to axis points.
const FULL_LATTICE_LIMIT: usize = 729;

pub(super) fn contains_perturbed<E: Entry>(
    inner: &Subequation<E>,
    delta: E::Real,
    jet: &Jet<E>,
    tol: &ToleranceConfig,
) -> Result<bool> {
    match inner {
        Subequation::PosCone { .. } => inner.contains(jet, tol),
        Subequation::GradientBall { bound, .. } => {
            Ok(norm(&jet.p) <= *bound + delta + E::Real::of(tol.residual_tol))
        }
        Subequation::Perturbed { inner: deeper, delta: d } => {
            contains_perturbed(deeper, delta + *d, jet, tol)
        }
        Subequation::FLambdaMu { lambda0, mu, .. } if *lambda0 >= E::Real::zero() => {
            coupled_trust_region(inner, mu, delta, jet, tol)
        }
        _ => lattice_search(inner, delta, jet, tol),
    }
}

fn with_gradient<E: Entry>(jet: &Jet<E>, p: Vec<E>) -> Jet<E> {
    Jet { p, ..jet.clone() }
}

/// `p (1 - delta/||p||)^+`, the nearest point of the ball to the origin.
fn radial_shrink<E: Entry>(p: &[E], delta: E::Real) -> Vec<E> {
    let np = norm(p);
    let s = if np > delta {
        E::Real::one() - delta / np
    } else {
        E::Real::zero()
    };
    p.iter().map(|x| x.mul_real(s)).collect()
}

/// With `M = A - mu`, the jet `(r, p', A)` is a member iff `M >= 0`, `p'` lies in
/// the range of `M` and `lambda0 p'^* M^+ p' <= 1`. Minimising `p'^* M^+ p'` over
/// the ball `||p' - p|| <= delta` is a trust-region problem solved in the
/// eigenbasis of `M`: null-space components must be removed entirely, and the
/// range components shrink as `q_i = c_i nu l_i / (1 + nu l_i)` with the
/// multiplier `nu` fixed by the radius.
fn coupled_trust_region<E: Entry>(
    inner: &Subequation<E>,
    mu: &MuField<E>,
    delta: E::Real,
    jet: &Jet<E>,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let m: SelfAdjoint<E> = jet.a.try_sub(&mu.at(jet.base.as_deref())?)?;
    if !is_psd(&m, tol) {
        return Ok(false);
    }
    let e = m.eigen();
    let scale = e.max_abs_value().max(E::Real::one());
    let null_cut = E::Real::of(tol.psd_tol) * scale;
    let n = jet.dim();

    let mut null_sq = E::Real::zero();
    let mut range: Vec<(E::Real, E, Vec<E>)> = Vec::with_capacity(n);
    for k in 0..n {
        let v = e.vector(k);
        let c = dot(&v, &jet.p);
        if e.values[k] <= null_cut {
            null_sq += c.abs_sqr();
        } else {
            range.push((e.values[k], c, v));
        }
    }

    let mut candidates = Vec::with_capacity(3);
    let rho_sq = delta * delta - null_sq;
    if rho_sq >= E::Real::zero() {
        let c_sq: E::Real = range.iter().map(|(_, c, _)| c.abs_sqr()).sum();
        let mut q = vec![E::zero(); n];
        if c_sq > rho_sq {
            let nu = solve_multiplier(&range, rho_sq);
            for (l, c, v) in &range {
                let w = match nu {
                    Some(nu) => (nu * *l) / (E::Real::one() + nu * *l),
                    None => E::Real::one(),
                };
                let coef = c.mul_real(w);
                for (qi, vi) in q.iter_mut().zip(v) {
                    *qi += *vi * coef;
                }
            }
        }
        candidates.push(q);
    }
    candidates.push(jet.p.clone());
    candidates.push(radial_shrink(&jet.p, delta));

    for p in candidates {
        if inner.contains(&with_gradient(jet, p), tol)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Multiplier `nu` with `sum |c_i|^2 / (1 + nu l_i)^2 = rho^2`, taken on the
/// feasible side so the candidate stays inside the ball. `None` means the
/// radius is zero and the only admissible range part is `c` itself.
fn solve_multiplier<E: Entry>(range: &[(E::Real, E, Vec<E>)], rho_sq: E::Real) -> Option<E::Real> {
    if rho_sq <= E::Real::zero() {
        return None;
    }
    let excess = |nu: E::Real| -> E::Real {
        range
            .iter()
            .map(|(l, c, _)| {
                let d = E::Real::one() + nu * *l;
                c.abs_sqr() / (d * d)
            })
            .sum::<E::Real>()
            - rho_sq
    };
    let mut lo = E::Real::zero();
    let mut hi = E::Real::one();
    let mut guard = 0;
    while excess(hi) > E::Real::zero() {
        lo = hi;
        hi = hi * E::Real::of(2.0);
        guard += 1;
        if guard > 2000 || !Float::is_finite(hi) {
            return Some(lo);
        }
    }
    for _ in 0..200 {
        let mid = (lo + hi) * E::Real::of(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > E::Real::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(hi)
}

/// Lattice of candidates: nine value offsets in `[-delta, delta]` times the
/// gradient lattice `p + (delta/sqrt(d)) {-1, 0, 1}^d` in real coordinates
/// (axis points `p +- delta e_i` when the full lattice exceeds 729 points),
/// plus the radial shrink.
fn lattice_search<E: Entry>(
    inner: &Subequation<E>,
    delta: E::Real,
    jet: &Jet<E>,
    tol: &ToleranceConfig,
) -> Result<bool> {
    let p_real = E::realify_vector(&jet.p);
    let d = p_real.len();

    let mut gradients: Vec<Vec<E>> = vec![jet.p.clone(), radial_shrink(&jet.p, delta)];
    let full = d <= 6 && 3usize.pow(d as u32) <= FULL_LATTICE_LIMIT;
    if d > 0 && full {
        let step = delta / E::Real::of_usize(d).sqrt();
        for code in 0..3usize.pow(d as u32) {
            let mut c = code;
            let mut q = p_real.clone();
            for qk in q.iter_mut() {
                let digit = (c % 3) as f64 - 1.0;
                c /= 3;
                *qk += step * E::Real::of(digit);
            }
            gradients.push(E::unrealify_vector(&q));
        }
    } else {
        for k in 0..d {
            for sign in [-1.0, 1.0] {
                let mut q = p_real.clone();
                q[k] += delta * E::Real::of(sign);
                gradients.push(E::unrealify_vector(&q));
            }
        }
    }

    for i in 0..9 {
        let r = jet.r + delta * E::Real::of(i as f64 / 4.0 - 1.0);
        for p in &gradients {
            let cand = Jet {
                r,
                p: p.clone(),
                ..jet.clone()
            };
            if inner.contains(&cand, tol)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subequation::Flags;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn pos_cone_is_unchanged() {
        let f = Subequation::<f64>::pos_cone(1).perturbed(0.5).unwrap();
        let j = Jet::new(3.0, vec![7.0], SelfAdjoint::diagonal(&[-1e-3])).unwrap();
        assert!(!f.contains(&j, &tol()).unwrap());
    }

    #[test]
    fn gradient_ball_grows_by_delta() {
        let f = Subequation::<f64>::gradient_ball(2, 1.0)
            .unwrap()
            .perturbed(0.25)
            .unwrap();
        let j = |x: f64| Jet::new(0.0, vec![x, 0.0], SelfAdjoint::zeros(2)).unwrap();
        assert!(f.contains(&j(1.25), &tol()).unwrap());
        assert!(!f.contains(&j(1.26), &tol()).unwrap());
    }

    #[test]
    fn coupled_family_accepts_shrunk_gradient() {
        let delta = 0.2;
        let f = Subequation::f_lambda_mu(1.0, SelfAdjoint::zeros(2))
            .perturbed(delta)
            .unwrap();
        let p = vec![0.6, 0.8];
        let a = SelfAdjoint::<f64>::identity(2).scale((1.0 - delta) * (1.0 - delta) + 1e-6);
        let j = Jet::new(0.0, p.clone(), a).unwrap();
        assert!(f.contains(&j, &tol()).unwrap());
        let a = SelfAdjoint::<f64>::identity(2).scale((1.0 - delta) * (1.0 - delta) - 1e-3);
        assert!(!f.contains(&Jet::new(0.0, p, a).unwrap(), &tol()).unwrap());
    }

    #[test]
    fn coupled_family_removes_null_components() {
        // M = diag(1, 0): the second gradient component must be zeroed.
        let f = Subequation::f_lambda_mu(1.0, SelfAdjoint::zeros(2));
        let a = SelfAdjoint::<f64>::diagonal(&[1.0, 0.0]);
        let j = Jet::new(0.0, vec![0.0, 0.3], a).unwrap();
        assert!(!f.contains(&j, &tol()).unwrap());
        assert!(f.perturbed(0.3).unwrap().contains(&j, &tol()).unwrap());
        assert!(!f.perturbed(0.29).unwrap().contains(&j, &tol()).unwrap());
    }

    #[test]
    fn lattice_handles_custom_predicates() {
        // Members: r <= 0 and A >= 0.
        let f = Subequation::<f64>::custom("neg-value", 1, Flags::ALL, |j, t| {
            j.r <= 0.0 && is_psd(&j.a, t)
        });
        let g = f.perturbed(0.5).unwrap();
        let j = |r: f64| Jet::new(r, vec![0.0], SelfAdjoint::identity(1)).unwrap();
        assert!(g.contains(&j(0.5), &tol()).unwrap());
        assert!(!g.contains(&j(0.6), &tol()).unwrap());
    }
}
