//! Membership in product subequations `F#G`.
//!
//! A jet on `R^n x R^m` (or `C^n x C^m`) belongs to `F#G` when its vertical
//! pullback `(r, p2, D)` lies in `G` and its graph pullback along every linear
//! map `G: R^n -> R^m` lies in `F`. For the built-in pairs the quantifier over
//! maps is eliminated exactly with the block criterion; otherwise maps are
//! sampled, which refutes soundly but only suggests membership.

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use num_traits::{Float, One, Zero};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetBlocks};
use crate::linalg::{
    assemble_blocks, pseudo_inverse, quadratic_min, schur_conditions, schur_parts, Matrix,
    QuadMinResult, SelfAdjoint, ToleranceConfig,
};
use crate::report::{Violation, VerificationReport};
use crate::sampling;
use crate::scalar::{norm, Entry, Scalar};
use crate::subequation::{MuField, Subequation};

/// Map sampling schedule for the sampled tester.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    /// Total maps tried, including the zero map and the stationary map.
    pub n_samples: usize,
    /// Magnitudes cycled through; the largest is scaled by `1 + ||jet||`.
    pub magnitudes: Vec<f64>,
    pub seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            n_samples: 64,
            magnitudes: vec![0.1, 1.0, 10.0, 100.0],
            seed: 0,
        }
    }
}

/// The pair `(F, G)` with `F` on the first `n` variables and `G` on the last `m`.
#[derive(Clone, Debug)]
pub struct ProductSpec<E: Entry> {
    pub f: Subequation<E>,
    pub g: Subequation<E>,
    pub sampling: SamplingConfig,
}

impl<E: Entry> ProductSpec<E> {
    pub fn new(f: Subequation<E>, g: Subequation<E>) -> Result<Self> {
        if f.dim() == 0 || g.dim() == 0 {
            return Err(Error::Precondition("product factors need positive dimension".into()));
        }
        Ok(Self {
            f,
            g,
            sampling: SamplingConfig::default(),
        })
    }

    pub fn with_sampling(mut self, cfg: SamplingConfig) -> Self {
        self.sampling = cfg;
        self
    }

    /// `n + m`.
    pub fn dim(&self) -> usize {
        self.f.dim() + self.g.dim()
    }
}

/// Evidence that a jet is not in `F#G`.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness<E: Entry> {
    /// The vertical pullback, rejected by `G`.
    Vertical { pulled: Jet<E> },
    /// A map whose graph pullback is rejected by `F`. `verified` records that
    /// the rejection was re-checked.
    Graph {
        gamma: Matrix<E>,
        pulled: Jet<E>,
        verified: bool,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProductDecision<E: Entry> {
    Member,
    NonMember { witness: Witness<E> },
    /// No sampled map refuted membership; approximate.
    SampledMember { samples_tested: usize },
}

impl<E: Entry> ProductDecision<E> {
    /// Member, exactly or by sampling.
    pub fn is_member(&self) -> bool {
        !matches!(self, ProductDecision::NonMember { .. })
    }

    pub fn is_exact_member(&self) -> bool {
        matches!(self, ProductDecision::Member)
    }

    pub fn witness(&self) -> Option<&Witness<E>> {
        match self {
            ProductDecision::NonMember { witness } => Some(witness),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            ProductDecision::Member => json!({ "decision": "Member", "approximate": false }),
            ProductDecision::SampledMember { samples_tested } => json!({
                "decision": "SampledMember",
                "approximate": true,
                "samples_tested": samples_tested,
            }),
            ProductDecision::NonMember { witness } => {
                let w = match witness {
                    Witness::Vertical { pulled } => json!({
                        "kind": "vertical",
                        "pulled": pulled.to_doc(),
                    }),
                    Witness::Graph {
                        gamma,
                        pulled,
                        verified,
                    } => json!({
                        "kind": "graph",
                        "gamma": matrix_json(gamma),
                        "pulled": pulled.to_doc(),
                        "verified": verified,
                    }),
                };
                json!({ "decision": "NonMember", "approximate": false, "witness": w })
            }
        }
    }
}

fn matrix_json<E: Entry>(m: &Matrix<E>) -> Value {
    let entry = |x: E| -> Value {
        if E::EMBED == 1 {
            json!(x.re().as_f64())
        } else {
            json!([x.re().as_f64(), x.im().as_f64()])
        }
    };
    Value::Array(
        (0..m.rows())
            .map(|i| Value::Array(m.row(i).iter().map(|&x| entry(x)).collect()))
            .collect(),
    )
}

/// Rewrites nested products using the identities `P#P = P` and
/// `F(l, mu)#F(l, 0) = F(l, diag(mu, 0))` for constant `mu`.
pub fn simplify<E: Entry>(spec: &Subequation<E>) -> Subequation<E> {
    let Subequation::Product(p) = spec else {
        return spec.clone();
    };
    let f = simplify(&p.f);
    let g = simplify(&p.g);
    match (&f, &g) {
        (Subequation::PosCone { n }, Subequation::PosCone { n: m }) => Subequation::pos_cone(n + m),
        (
            Subequation::FLambdaMu {
                lambda0: l1,
                mu: MuField::Constant(mu1),
                ..
            },
            Subequation::FLambdaMu {
                n: m,
                lambda0: l2,
                mu: mu2,
                ..
            },
        ) if l1 == l2 && mu2.is_zero() && *l1 >= E::Real::zero() => {
            let n = mu1.dim();
            let c = Matrix::zeros(n, *m);
            let mu = assemble_blocks(mu1, &c, &SelfAdjoint::zeros(*m)).expect("block shapes agree");
            Subequation::f_lambda_mu(*l1, mu)
        }
        _ => Subequation::Product(Box::new(ProductSpec {
            f,
            g,
            sampling: p.sampling.clone(),
        })),
    }
}

/// How the map quantifier is eliminated for a supported pair.
enum ExactPair<'a, E: Entry> {
    /// `F = {A - l p p^* - mu >= 0}` (the cone when `l = 0`, `mu = 0`) paired with
    /// `G = {D - lg p2 p2^* >= 0}`, where `lg` is `l` or `0`.
    Coupled {
        lambda0: E::Real,
        mu: Option<&'a MuField<E>>,
    },
    Ball {
        bound: E::Real,
    },
}

/// `(lambda, mu)` when the family is the cone or a gradient-coupled family.
fn coupled_params<E: Entry>(s: &Subequation<E>) -> Option<(E::Real, Option<&MuField<E>>)> {
    match s {
        Subequation::PosCone { .. } => Some((E::Real::zero(), None)),
        Subequation::FLambdaMu { lambda0, mu, .. } => Some((*lambda0, Some(mu))),
        _ => None,
    }
}

fn exact_pair<'a, E: Entry>(f: &'a Subequation<E>, g: &'a Subequation<E>) -> Option<ExactPair<'a, E>> {
    let (lg, mug) = coupled_params(g)?;
    if mug.is_some_and(|m| !m.is_zero()) {
        return None;
    }
    match f {
        Subequation::GradientBall { bound, .. } if lg == E::Real::zero() => Some(ExactPair::Ball { bound: *bound }),
        _ => {
            let (lf, muf) = coupled_params(f)?;
            (lg == E::Real::zero() || lg == lf).then_some(ExactPair::Coupled { lambda0: lf, mu: muf })
        }
    }
}

/// Whether [`contains_exact`] decides this pair.
pub fn is_exactly_decidable<E: Entry>(spec: &ProductSpec<E>) -> bool {
    exact_pair(&spec.f, &spec.g).is_some()
}

fn check_dim<E: Entry>(spec: &ProductSpec<E>, jet: &Jet<E>) -> Result<()> {
    if jet.dim() != spec.dim() {
        return Err(Error::dim("jet for product", spec.dim(), jet.dim()));
    }
    Ok(())
}

/// Hat matrices `B - l p1 p1^* - mu`, `C - l p1 p2^*`, `D - l p2 p2^*`.
fn hats<E: Entry>(
    blocks: &JetBlocks<E>,
    lambda0: E::Real,
    mu: Option<&MuField<E>>,
    base: Option<&[E]>,
) -> Result<(SelfAdjoint<E>, Matrix<E>, SelfAdjoint<E>)> {
    let mut b = blocks.b.try_sub(&SelfAdjoint::outer(&blocks.p1).scale(lambda0))?;
    if let Some(mu) = mu {
        let n = blocks.p1.len();
        b = b.try_sub(&mu.at(base.map(|x| &x[..n]))?)?;
    }
    let c = blocks.c.try_sub(&Matrix::outer(&blocks.p1, &blocks.p2).scale(lambda0))?;
    let d = blocks.d.try_sub(&SelfAdjoint::outer(&blocks.p2).scale(lambda0))?;
    Ok((b, c, d))
}

/// Exact decision for the supported pairs: cone with cone, a gradient-coupled
/// family with the cone or with the same coupling and `mu = 0`, and the
/// gradient ball with the cone.
pub fn contains_exact<E: Entry>(
    spec: &ProductSpec<E>,
    jet: &Jet<E>,
    tol: &ToleranceConfig,
) -> Result<ProductDecision<E>> {
    check_dim(spec, jet)?;
    let pair = exact_pair(&spec.f, &spec.g).ok_or_else(|| {
        Error::Unsupported(format!(
            "no exact test for {}#{}; use the sampled tester",
            spec.f.name(),
            spec.g.name()
        ))
    })?;
    let n = spec.f.dim();
    let vertical = jet.pullback_vertical(n)?;
    if !spec.g.contains(&vertical, tol)? {
        return Ok(ProductDecision::NonMember {
            witness: Witness::Vertical { pulled: vertical },
        });
    }
    let blocks = jet.split(n)?;
    match pair {
        ExactPair::Coupled { lambda0, mu } => {
            let (b, c, d) = hats(&blocks, lambda0, mu, jet.base.as_deref())?;
            if schur_conditions(&b, &c, &d, tol)?.holds() {
                return Ok(ProductDecision::Member);
            }
            graph_witness(spec, jet, &b, &c, &d, tol)
        }
        ExactPair::Ball { bound } => {
            let res = E::Real::of(tol.residual_tol);
            let (n1, n2) = (norm(&blocks.p1), norm(&blocks.p2));
            if n2 <= res && n1 <= bound + res {
                return Ok(ProductDecision::Member);
            }
            let gamma = if n2 > res {
                // x -> (x, t <x, u> p2) pushes the gradient to p1 + (bound + 1 + tol) u.
                let u: Vec<E> = if n1 > E::Real::zero() {
                    blocks.p1.iter().map(|x| x.mul_real(E::Real::one() / n1)).collect()
                } else {
                    (0..n).map(|i| if i == 0 { E::one() } else { E::zero() }).collect()
                };
                let t = (bound + E::Real::one() + res) / (n2 * n2);
                Matrix::outer(&blocks.p2, &u).scale(t)
            } else {
                Matrix::zeros(spec.g.dim(), n)
            };
            let pulled = jet.pullback_graph(n, &gamma)?;
            let verified = !spec.f.contains(&pulled, tol)?;
            Ok(ProductDecision::NonMember {
                witness: Witness::Graph {
                    gamma,
                    pulled,
                    verified,
                },
            })
        }
    }
}

/// Builds a map `G = x w^*` refuting membership after the block test failed.
///
/// For a unit `w` and `b = C^* w`, the pulled Hessian (hat form) satisfies
/// `w^* H(x w^*) w = w^* B w + 2 Re(x^* b) + x^* D x`, so a negative value comes
/// from minimising that quadratic in `x`. Candidate directions `w` are the
/// bottom eigenvector of the Schur complement, the top eigenvector of the range
/// defect and the first axis; unbounded minimisations are followed outward by
/// doubling until the pullback is rejected.
fn graph_witness<E: Entry>(
    spec: &ProductSpec<E>,
    jet: &Jet<E>,
    b: &SelfAdjoint<E>,
    c: &Matrix<E>,
    d: &SelfAdjoint<E>,
    tol: &ToleranceConfig,
) -> Result<ProductDecision<E>> {
    let n = b.dim();
    let parts = schur_parts(b, c, d, tol)?;
    let mut directions: Vec<Vec<E>> = vec![parts.schur.min_eigenpair().1];
    let defect = SelfAdjoint::new(parts.range_defect.adjoint().matmul(&parts.range_defect)?)?;
    if defect.frobenius_norm() > E::Real::zero() {
        directions.push(defect.max_eigenpair().1);
    }
    directions.push((0..n).map(|i| if i == 0 { E::one() } else { E::zero() }).collect());

    let mut last = None;
    for w in directions {
        let bw = c.adjoint().mul_vec(&w)?;
        match quadratic_min(d, &bw, tol)? {
            QuadMinResult::BoundedBelow { argmin, .. } => {
                let gamma = Matrix::outer(&argmin, &w);
                let pulled = jet.pullback_graph(n, &gamma)?;
                if !spec.f.contains(&pulled, tol)? {
                    return Ok(graph(gamma, pulled, true));
                }
                last = Some((gamma, pulled));
            }
            QuadMinResult::Unbounded { direction } => {
                let mut t = E::Real::one();
                for _ in 0..80 {
                    let x: Vec<E> = direction.iter().map(|v| v.mul_real(t)).collect();
                    let gamma = Matrix::outer(&x, &w);
                    let pulled = jet.pullback_graph(n, &gamma)?;
                    if !spec.f.contains(&pulled, tol)? {
                        return Ok(graph(gamma, pulled, true));
                    }
                    last = Some((gamma, pulled));
                    t = t * E::Real::of(2.0);
                }
            }
        }
    }
    let (gamma, pulled) = last.expect("at least one candidate direction");
    Ok(graph(gamma, pulled, false))
}

fn graph<E: Entry>(gamma: Matrix<E>, pulled: Jet<E>, verified: bool) -> ProductDecision<E> {
    ProductDecision::NonMember {
        witness: Witness::Graph {
            gamma,
            pulled,
            verified,
        },
    }
}

fn jet_norm<E: Entry>(jet: &Jet<E>) -> f64 {
    let s = jet.r * jet.r + norm(&jet.p).powi(2) + jet.a.frobenius_norm().powi(2);
    s.sqrt().as_f64()
}

/// Sampled test: checks the vertical pullback, then graph pullbacks along the
/// zero map, the stationary map `-D^+ C^*`, and maps cycling through the
/// magnitude schedule, alternating Gaussian and signed elementary matrices.
/// Stops at the first rejection.
pub fn contains_sampled<E: Entry>(
    spec: &ProductSpec<E>,
    jet: &Jet<E>,
    cfg: &SamplingConfig,
    tol: &ToleranceConfig,
) -> Result<ProductDecision<E>> {
    check_dim(spec, jet)?;
    let (n, m) = (spec.f.dim(), spec.g.dim());
    let vertical = jet.pullback_vertical(n)?;
    if !spec.g.contains(&vertical, tol)? {
        return Ok(ProductDecision::NonMember {
            witness: Witness::Vertical { pulled: vertical },
        });
    }
    let blocks = jet.split(n)?;
    let mut magnitudes = cfg.magnitudes.clone();
    if magnitudes.is_empty() {
        magnitudes.push(1.0);
    }
    let top = magnitudes.iter().cloned().fold(f64::MIN, f64::max);
    let jn = jet_norm(jet);
    for v in magnitudes.iter_mut() {
        if *v == top {
            *v *= 1.0 + jn;
        }
    }

    let mut rng = sampling::rng(cfg.seed);
    for k in 0..cfg.n_samples {
        let gamma = match k {
            0 => Matrix::zeros(m, n),
            1 => {
                let dp = pseudo_inverse(&blocks.d, tol);
                -&(dp.as_matrix() * &blocks.c.adjoint())
            }
            _ => {
                let idx = k - 2;
                let mag = E::Real::of(magnitudes[idx % magnitudes.len()]);
                if idx % 2 == 0 {
                    sampling::matrix::<E, _>(&mut rng, m, n).scale(mag)
                } else {
                    let cell = rng.random_range(0..m * n);
                    let sign = if rng.random::<bool>() { E::Real::one() } else { -E::Real::one() };
                    let mut g = Matrix::zeros(m, n);
                    g[(cell / n, cell % n)] = E::from_real(mag * sign);
                    g
                }
            }
        };
        let pulled = jet.pullback_graph(n, &gamma)?;
        if !spec.f.contains(&pulled, tol)? {
            return Ok(graph(gamma, pulled, true));
        }
    }
    Ok(ProductDecision::SampledMember {
        samples_tested: cfg.n_samples,
    })
}

/// Exact decision when available after simplification, sampled otherwise.
pub fn contains<E: Entry>(
    spec: &ProductSpec<E>,
    jet: &Jet<E>,
    tol: &ToleranceConfig,
) -> Result<ProductDecision<E>> {
    check_dim(spec, jet)?;
    let simple = ProductSpec {
        f: simplify(&spec.f),
        g: simplify(&spec.g),
        sampling: spec.sampling.clone(),
    };
    if is_exactly_decidable(&simple) {
        contains_exact(&simple, jet, tol)
    } else {
        contains_sampled(&simple, jet, &simple.sampling, tol)
    }
}

/// Compares `(F1#F2)#F3` with `F1#(F2#F3)` on random jets, both through the
/// default decision and through the sampled tester. A disagreement between the
/// default decisions, or a sampled refutation of an exact member, is a violation.
pub fn check_associativity<E: Entry>(
    f1: &Subequation<E>,
    f2: &Subequation<E>,
    f3: &Subequation<E>,
    n_jets: usize,
    sampling_cfg: &SamplingConfig,
    seed: u64,
    tol: &ToleranceConfig,
) -> Result<VerificationReport> {
    let left = ProductSpec::new(Subequation::product(f1.clone(), f2.clone())?, f3.clone())?;
    let right = ProductSpec::new(f1.clone(), Subequation::product(f2.clone(), f3.clone())?)?;
    let dim = left.dim();
    let mut report = VerificationReport::new("associativity");
    report.meta("left", format!("({})#{}", left.f.name(), left.g.name()));
    report.meta("right", format!("{}#({})", right.f.name(), right.g.name()));
    report.meta("seed", seed);
    let mut members = 0usize;
    let mut sampled_agree = 0usize;
    for i in 0..n_jets {
        let mut rng = sampling::substream(seed, i as u64);
        let shift = E::Real::of(0.3 * sampling::normal(&mut rng).abs());
        let a = sampling::psd::<E, _>(&mut rng, dim, dim).shift(-shift);
        let jet = Jet::new(E::Real::of(sampling::normal(&mut rng)), sampling::vector(&mut rng, dim), a)?;
        report.checked_sites += 1;
        let l = contains(&left, &jet, tol)?;
        let r = contains(&right, &jet, tol)?;
        if l.is_member() != r.is_member() {
            report.push(
                Violation::new(vec![i as f64], "grouping_disagreement")
                    .jet_doc(jet.to_doc())
                    .detail(format!("left member {}, right member {}", l.is_member(), r.is_member())),
            );
            continue;
        }
        members += usize::from(l.is_member());
        let cfg = SamplingConfig {
            seed: sampling_cfg.seed.wrapping_add(i as u64),
            ..sampling_cfg.clone()
        };
        let ls = contains_sampled(&left, &jet, &cfg, tol)?;
        let rs = contains_sampled(&right, &jet, &cfg, tol)?;
        if l.is_exact_member() && (!ls.is_member() || !rs.is_member()) {
            report.push(
                Violation::new(vec![i as f64], "sampled_refutes_member").jet_doc(jet.to_doc()),
            );
            continue;
        }
        sampled_agree += usize::from(ls.is_member() == rs.is_member());
    }
    report.meta("members", members);
    report.meta("sampled_agreements", sampled_agree);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    fn sym(rows: &[&[f64]]) -> SelfAdjoint<f64> {
        SelfAdjoint::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn cone_pair(n: usize, m: usize) -> ProductSpec<f64> {
        ProductSpec::new(Subequation::pos_cone(n), Subequation::pos_cone(m)).unwrap()
    }

    #[test]
    fn cone_pair_rejects_indefinite_block() {
        let j = Jet::new(0.0, vec![0.0, 0.0], sym(&[&[1.0, 1.0], &[1.0, 0.0]])).unwrap();
        let d = contains_exact(&cone_pair(1, 1), &j, &tol()).unwrap();
        match d.witness() {
            Some(Witness::Graph { verified, pulled, .. }) => {
                assert!(*verified);
                assert!(pulled.a[(0, 0)] < 0.0);
            }
            other => panic!("expected graph witness, got {other:?}"),
        }
    }

    #[test]
    fn coupled_pair_example() {
        let f = Subequation::f_lambda_mu(1.0, SelfAdjoint::zeros(1));
        let g = Subequation::f_lambda_mu(1.0, SelfAdjoint::zeros(1));
        let spec = ProductSpec::new(f, g).unwrap();
        let j = Jet::new(0.0, vec![1.0, 0.0], SelfAdjoint::diagonal(&[2.0, 1.0])).unwrap();
        assert_eq!(contains_exact(&spec, &j, &tol()).unwrap(), ProductDecision::Member);
    }

    #[test]
    fn ball_pair_examples() {
        let spec = ProductSpec::new(
            Subequation::gradient_ball(1, 1.0).unwrap(),
            Subequation::pos_cone(1),
        )
        .unwrap();
        let j = Jet::new(0.0, vec![0.5, 0.2], SelfAdjoint::diagonal(&[0.0, 1.0])).unwrap();
        match contains_exact(&spec, &j, &tol()).unwrap() {
            ProductDecision::NonMember {
                witness: Witness::Graph { verified, .. },
            } => assert!(verified),
            other => panic!("unexpected {other:?}"),
        }
        let j = Jet::new(0.0, vec![0.5, 0.0], SelfAdjoint::diagonal(&[0.0, 1.0])).unwrap();
        assert_eq!(contains_exact(&spec, &j, &tol()).unwrap(), ProductDecision::Member);
    }

    #[test]
    fn vertical_witness_comes_first() {
        let j = Jet::new(0.0, vec![0.0, 0.0], SelfAdjoint::diagonal(&[1.0, -1.0])).unwrap();
        let cfg = SamplingConfig::default();
        let d = contains_sampled(&cone_pair(1, 1), &j, &cfg, &tol()).unwrap();
        assert!(matches!(d.witness(), Some(Witness::Vertical { .. })));
    }

    #[test]
    fn unsupported_pair_is_reported() {
        let spec = ProductSpec::new(Subequation::<f64>::pos_cone(1), Subequation::gradient_ball(1, 1.0).unwrap()).unwrap();
        assert!(matches!(
            contains_exact(&spec, &Jet::zero(2), &tol()),
            Err(Error::Unsupported(_))
        ));
        // The general entry point falls back to sampling.
        let d = contains(&spec, &Jet::zero(2), &tol()).unwrap();
        assert!(matches!(d, ProductDecision::SampledMember { .. }));
    }

    #[test]
    fn simplification_identities() {
        let p = Subequation::<f64>::product(Subequation::pos_cone(2), Subequation::pos_cone(1)).unwrap();
        assert!(matches!(simplify(&p), Subequation::PosCone { n: 3 }));
        let f = Subequation::<f64>::f_lambda_mu(0.5, SelfAdjoint::diagonal(&[2.0]));
        let g = Subequation::f_lambda_mu(0.5, SelfAdjoint::zeros(2));
        match simplify(&Subequation::product(f, g).unwrap()) {
            Subequation::FLambdaMu { n, mu: MuField::Constant(mu), .. } => {
                assert_eq!(n, 3);
                assert_eq!(mu[(0, 0)], 2.0);
                assert_eq!(mu[(2, 2)], 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complex_cone_pair_matches_full_cone() {
        let mut rng = sampling::rng(5);
        let spec = ProductSpec::new(Subequation::<C64>::pos_cone(1), Subequation::pos_cone(1)).unwrap();
        for _ in 0..50 {
            let j: Jet<C64> = sampling::jet(&mut rng, 2);
            let whole = crate::linalg::is_psd(&j.a, &tol());
            assert_eq!(contains_exact(&spec, &j, &tol()).unwrap().is_member(), whole);
        }
    }
}
