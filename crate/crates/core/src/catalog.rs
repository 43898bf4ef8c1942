//! Named example fields on fibred domains, addressed by descriptors such as
//! `quad:n=1,coupling=1` or `softplus:seed=3`.
//!
//! | name | field | marginal |
//! |---|---|---|
//! | `quad` | `|x|^2 + (y - c sum x)^2` | `|x|^2` |
//! | `sep` | `|x|^2 + y^2` | `|x|^2` |
//! | `logsumexp` | `log(e^{x-y} + e^{x+y}) + y^2` | `x + log 2` |
//! | `cosh-coupled` | `e^{x/2} + cosh y + x y / 2` | closed form |
//! | `softplus` | random convex quadratic plus softplus terms | |
//! | `flat` | `x^2 + max(0, |y| - 1)^3` | `x^2` |
//! | `saddle` | `x^2 - 2 y^2` | boundary minimum |
//! | `logbarrier` | `-log(4 - x^2) - log(4 - y^2)` | `-log(4 - x^2) - log 4` |
//! | `kiselman-ring` | `|z|^2 + (|w|^2 - 1)^2` | `|z|^2` |
//! | `kiselman-sum` | `|z|^2 + |w|^2` | `|z|^2 + 1/4` |
//! | `kiselman-shift` | `|z - |w|^2 / 2|^2 + (|w|^2 - 1)^2` | |

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::field::CallableField;
use crate::jets::Jet;
use crate::linalg::SelfAdjoint;
use crate::marginal::{BoxDoc, DomainDoc, FiberDoc, FiberKind};
use crate::sampling;
use crate::scalar::Scalar;
use crate::subequation::descriptor::{parse_kv, take_f64, take_usize};

/// Closed-form marginal on the default domain, in base coordinates.
pub type MarginalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A catalog field with its default domain and the family it is meant to be
/// checked against.
#[derive(Clone)]
pub struct CatalogEntry<T: Scalar> {
    pub descriptor: String,
    pub field: CallableField<T>,
    pub domain: DomainDoc,
    /// Descriptor of the family on the base.
    pub subequation: String,
    pub marginal: Option<MarginalFn>,
}

impl<T: Scalar> fmt::Debug for CatalogEntry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CatalogEntry")
            .field("descriptor", &self.descriptor)
            .field("field", &self.field)
            .field("domain", &self.domain)
            .field("subequation", &self.subequation)
            .field("closed_form_marginal", &self.marginal.is_some())
            .finish()
    }
}

/// Names understood by [`lookup`].
pub const NAMES: &[&str] = &[
    "quad",
    "sep",
    "logsumexp",
    "cosh-coupled",
    "softplus",
    "flat",
    "saddle",
    "logbarrier",
    "kiselman-ring",
    "kiselman-sum",
    "kiselman-shift",
];

/// Fields whose fibres are strictly convex with interior minimisers on the
/// default domain, so the marginal jet formula applies everywhere.
pub const SMOOTH_REAL: &[&str] = &["quad", "sep", "logsumexp", "cosh-coupled", "logbarrier"];

fn line_domain(lo: f64, hi: f64, counts: usize, n: usize, fiber: (f64, f64)) -> DomainDoc {
    DomainDoc {
        base: BoxDoc {
            lo: vec![lo; n],
            hi: vec![hi; n],
            counts: vec![counts; n],
        },
        fiber: FiberDoc {
            lo: fiber.0,
            hi: fiber.1,
            samples: 121,
        },
        kind: FiberKind::Interval,
    }
}

fn plane_domain(fiber: (f64, f64)) -> DomainDoc {
    DomainDoc {
        base: BoxDoc {
            lo: vec![-1.0; 2],
            hi: vec![1.0; 2],
            counts: vec![9; 2],
        },
        fiber: FiberDoc {
            lo: fiber.0,
            hi: fiber.1,
            samples: 61,
        },
        kind: FiberKind::Annulus,
    }
}

fn softplus<T: Scalar>(t: T) -> T {
    t.max(T::zero()) + (-t.abs()).exp().ln_1p()
}

fn modulus_sq<T: Scalar>(p: &[T], k: usize) -> T {
    let half = p.len() / 2;
    p[k] * p[k] + p[half + k] * p[half + k]
}

/// `|x|^2 + (y - c sum x)^2` with its analytic jet.
fn quad<T: Scalar>(n: usize, c: f64) -> CallableField<T> {
    let ct = T::of(c);
    let two = T::of(2.0);
    CallableField::real(format!("quad:n={n},coupling={c}"), n + 1, move |p: &[T]| {
        let s: T = p[..n].iter().copied().sum();
        let e = p[n] - ct * s;
        p[..n].iter().map(|&v| v * v).sum::<T>() + e * e
    })
    .with_jet(move |p: &[T]| {
        let s: T = p[..n].iter().copied().sum();
        let e = p[n] - ct * s;
        let r = p[..n].iter().map(|&v| v * v).sum::<T>() + e * e;
        let mut grad: Vec<T> = p[..n].iter().map(|&v| two * v - two * ct * e).collect();
        grad.push(two * e);
        let a = SelfAdjoint::from_fn(n + 1, |i, j| match (i < n, j < n) {
            (true, true) => two * ct * ct + if i == j { two } else { T::zero() },
            (true, false) | (false, true) => -two * ct,
            (false, false) => two,
        });
        Jet::new(r, grad, a).expect("consistent jet sizes")
    })
}

/// Convex quadratic plus three softplus ridges with coefficients drawn from `seed`.
fn softplus_field<T: Scalar>(seed: u64) -> CallableField<T> {
    let mut rng = sampling::rng(seed);
    let l: Vec<f64> = (0..4).map(|_| 0.8 * sampling::normal(&mut rng)).collect();
    // Q = L L^t + I/2 with L lower triangular.
    let q = [
        l[0] * l[0] + 0.5,
        l[0] * l[1],
        l[1] * l[1] + l[2] * l[2] + 0.5,
    ];
    let b: Vec<f64> = (0..2).map(|_| 0.5 * sampling::normal(&mut rng)).collect();
    let ridges: Vec<[f64; 4]> = (0..3)
        .map(|_| {
            [
                sampling::normal(&mut rng),
                sampling::normal(&mut rng),
                sampling::normal(&mut rng),
                rng.random_range(0.5..1.5),
            ]
        })
        .collect();
    CallableField::real(format!("softplus:seed={seed}"), 2, move |p: &[T]| {
        let (x, y) = (p[0], p[1]);
        let half = T::of(0.5);
        let quadratic = half * (T::of(q[0]) * x * x + T::of(2.0 * q[1]) * x * y + T::of(q[2]) * y * y);
        let linear = T::of(b[0]) * x + T::of(b[1]) * y;
        let ridge: T = ridges
            .iter()
            .map(|r| T::of(r[3]) * softplus(T::of(r[0]) * x + T::of(r[1]) * y + T::of(r[2])))
            .sum();
        quadratic + linear + ridge
    })
}

/// Looks up a catalog field by descriptor.
pub fn lookup<T: Scalar>(descriptor: &str) -> Result<CatalogEntry<T>> {
    let input = descriptor.trim();
    let (name, body) = input.split_once(':').unwrap_or((input, ""));
    let mut kv = parse_kv(input, body)?;
    let std_domain = line_domain(-1.0, 1.0, 21, 1, (-3.0, 3.0));
    let entry = |field: CallableField<T>, domain: DomainDoc, subequation: &str, marginal: Option<MarginalFn>| {
        CatalogEntry {
            descriptor: input.to_string(),
            field,
            domain,
            subequation: subequation.to_string(),
            marginal,
        }
    };
    let out = match name {
        "quad" | "sep" => {
            let n = take_usize(input, &mut kv, "n", Some(1))?;
            if n == 0 {
                return Err(Error::descriptor(input, "`n` must be positive"));
            }
            let c = if name == "quad" {
                take_f64(input, &mut kv, "coupling", Some(1.0))?
            } else {
                0.0
            };
            let mut field = quad::<T>(n, c);
            if name == "sep" {
                field.name = format!("sep:n={n}");
            }
            let counts = if n == 1 { 21 } else { 9 };
            let reach = 3.0 * (1.0 + c.abs() * n as f64);
            entry(
                field,
                line_domain(-1.0, 1.0, counts, n, (-reach, reach)),
                &format!("poscone:{n}"),
                Some(Arc::new(|x: &[f64]| x.iter().map(|v| v * v).sum())),
            )
        }
        "logsumexp" => entry(
            CallableField::real("logsumexp", 2, |p: &[T]| {
                let (x, y) = (p[0], p[1]);
                // log(e^{x-y} + e^{x+y}) = x + |y| + log(1 + e^{-2|y|}).
                x + y.abs() + (T::of(-2.0) * y.abs()).exp().ln_1p() + y * y
            }),
            std_domain,
            "poscone:1",
            Some(Arc::new(|x: &[f64]| x[0] + std::f64::consts::LN_2)),
        ),
        "cosh-coupled" => entry(
            CallableField::real("cosh-coupled", 2, |p: &[T]| {
                let (x, y) = (p[0], p[1]);
                let half = T::of(0.5);
                (half * x).exp() + y.cosh() + half * x * y
            }),
            std_domain,
            "poscone:1",
            Some(Arc::new(|x: &[f64]| {
                let s = x[0] / 2.0;
                s.exp() + (1.0 + s * s).sqrt() - s * s.asinh()
            })),
        ),
        "softplus" => {
            let seed = take_usize(input, &mut kv, "seed", Some(0))? as u64;
            entry(softplus_field(seed), std_domain, "poscone:1", None)
        }
        "flat" => entry(
            CallableField::real("flat", 2, |p: &[T]| {
                let t = (p[1].abs() - T::one()).max(T::zero());
                p[0] * p[0] + t * t * t
            }),
            std_domain,
            "poscone:1",
            Some(Arc::new(|x: &[f64]| x[0] * x[0])),
        ),
        "saddle" => entry(
            CallableField::real("saddle", 2, |p: &[T]| p[0] * p[0] - T::of(2.0) * p[1] * p[1]),
            std_domain,
            "poscone:1",
            Some(Arc::new(|x: &[f64]| x[0] * x[0] - 18.0)),
        ),
        "logbarrier" => entry(
            CallableField::real("logbarrier", 2, |p: &[T]| {
                let four = T::of(4.0);
                -(four - p[0] * p[0]).ln() - (four - p[1] * p[1]).ln()
            }),
            line_domain(-1.5, 1.5, 31, 1, (-1.9, 1.9)),
            "flm:l0=1,n=1",
            Some(Arc::new(|x: &[f64]| -(4.0 - x[0] * x[0]).ln() - 4f64.ln())),
        ),
        "kiselman-ring" => entry(
            CallableField::complex("kiselman-ring", 2, |p: &[T]| {
                let w2 = modulus_sq(p, 1) - T::one();
                modulus_sq(p, 0) + w2 * w2
            })
            .with_torus_invariance(true),
            plane_domain((0.75, 1.5)),
            "posconec:1",
            Some(Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1])),
        ),
        "kiselman-sum" => entry(
            CallableField::complex("kiselman-sum", 2, |p: &[T]| modulus_sq(p, 0) + modulus_sq(p, 1))
                .with_torus_invariance(true),
            plane_domain((0.5, 1.5)),
            "posconec:1",
            Some(Arc::new(|x: &[f64]| x[0] * x[0] + x[1] * x[1] + 0.25)),
        ),
        "kiselman-shift" => entry(
            CallableField::complex("kiselman-shift", 2, |p: &[T]| {
                let w2 = modulus_sq(p, 1);
                let re = p[0] - T::of(0.5) * w2;
                let e = w2 - T::one();
                re * re + p[2] * p[2] + e * e
            })
            .with_torus_invariance(true),
            plane_domain((0.75, 1.5)),
            "posconec:1",
            None,
        ),
        other => {
            return Err(Error::descriptor(
                input,
                format!("unknown field `{other}` (known: {})", NAMES.join(", ")),
            ))
        }
    };
    if let Some(k) = kv.keys().next() {
        return Err(Error::descriptor(input, format!("unknown key `{k}`")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::fd_jet_callable;
    use crate::marginal::{marginal, MarginalOptions};

    #[test]
    fn every_name_resolves() {
        for name in NAMES {
            let e = lookup::<f64>(name).unwrap();
            let d = e.domain.build().unwrap();
            d.check_field(&e.field).unwrap();
        }
        assert!(lookup::<f64>("nope").is_err());
        assert!(lookup::<f64>("quad:bogus=1").is_err());
    }

    #[test]
    fn closed_form_marginals_match() {
        for name in NAMES {
            let e = lookup::<f64>(name).unwrap();
            let Some(g) = &e.marginal else { continue };
            let d = e.domain.build().unwrap();
            let m = marginal(&e.field, &d, &MarginalOptions::default()).unwrap();
            for i in 0..d.base.len() {
                let want = g(&d.base.point(i));
                assert!((m.g.values[i] - want).abs() < 1e-9, "{name} at {i}: {} vs {want}", m.g.values[i]);
            }
        }
    }

    #[test]
    fn analytic_quad_jet_matches_differences() {
        let e = lookup::<f64>("quad:n=2,coupling=0.5").unwrap();
        let x = [0.3, -0.2, 0.7];
        let a = e.field.analytic_jet(&x).unwrap().unwrap();
        let f = fd_jet_callable(&e.field, &x, 1e-4).unwrap();
        assert!((a.r - f.r).abs() < 1e-14);
        for i in 0..3 {
            assert!((a.p[i] - f.p[i]).abs() < 1e-7);
            for j in 0..3 {
                assert!((a.a[(i, j)] - f.a[(i, j)]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn softplus_fields_are_seeded() {
        let a = lookup::<f64>("softplus:seed=4").unwrap();
        let b = lookup::<f64>("softplus:seed=4").unwrap();
        let c = lookup::<f64>("softplus:seed=5").unwrap();
        let x = [0.2, 0.9];
        assert_eq!(a.field.eval(&x).unwrap(), b.field.eval(&x).unwrap());
        assert_ne!(a.field.eval(&x).unwrap(), c.field.eval(&x).unwrap());
    }
}
