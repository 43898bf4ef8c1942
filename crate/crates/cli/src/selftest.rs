//! Built-in acceptance suite. Every check draws its data from one seed and
//! compares the library against an independent oracle: dense eigenvalues
//! from nalgebra, closed-form values, or brute force.

use std::time::Instant;

use anyhow::{anyhow, ensure, Context, Result};
use nalgebra::{Complex, DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Map, Value};

use subeq::catalog::{self, SMOOTH_REAL};
use subeq::field::{
    fd_jet, fd_jet_callable, hessian_floor, mollify, sup_convolution, sup_convolution_brute, CallableField,
    GridFunction, GridGeometry, Region,
};
use subeq::marginal::{
    marginal, marginal_jet_smooth, marginal_point, perturbed_marginal, perturbed_marginal_certificate,
    verify_minimum_principle, FiberKind, JetOptions, MarginalOptions, PrincipleOptions,
};
use subeq::product::{self, contains_exact, contains_sampled, ProductSpec, SamplingConfig};
use subeq::sampling::{self, substream, SeededRng};
use subeq::linalg::split_blocks;
use subeq::{block_psd, Entry, Scalar, Jet, Matrix, Outcome, SelfAdjoint, Subequation, ToleranceConfig, Witness, C64};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub summary: String,
    pub metrics: Map<String, Value>,
}

/// Outcome of the whole suite. The JSON form contains no timings, so two runs
/// with the same seed serialize identically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl SelftestReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Names of the checks, by id.
pub const CRITERIA: [&str; 12] = [
    "block-PSD criterion matches eigenvalues",
    "cone product equals the cone",
    "coupled-gradient product characterization",
    "gradient-ball product",
    "marginal jet formula",
    "real minimum principle",
    "complex minimum principle",
    "sup-convolution",
    "mollification keeps convexity",
    "associativity of products",
    "perturbed marginal",
    "determinism across thread counts",
];

struct Check {
    passed: bool,
    summary: String,
    metrics: Map<String, Value>,
}

fn outcome(passed: bool, summary: impl Into<String>, metrics: Value) -> Result<Check> {
    let metrics = match metrics {
        Value::Object(m) => m,
        other => {
            let mut m = Map::new();
            m.insert("value".into(), other);
            m
        }
    };
    Ok(Check {
        passed,
        summary: summary.into(),
        metrics,
    })
}

/// Runs one check by id (1 to 12).
pub fn run_criterion(id: u32, seed: u64) -> CriterionResult {
    let seed_for = |k: u64| seed.wrapping_mul(1_000_003).wrapping_add(k);
    let res = match id {
        1 => block_psd_check(seed_for(1)),
        2 => cone_product_check(seed_for(2)),
        3 => coupled_product_check(seed_for(3)),
        4 => ball_product_check(seed_for(4)),
        5 => marginal_jet_check(),
        6 => real_principle_check(seed_for(6)),
        7 => complex_principle_check(),
        8 => supconv_check(seed_for(8)),
        9 => mollify_check(seed_for(9)),
        10 => associativity_check(seed_for(10)),
        11 => perturbed_check(),
        12 => determinism_check(seed),
        _ => Err(anyhow!("no check with id {id}")),
    };
    let name = CRITERIA
        .get((id as usize).wrapping_sub(1))
        .copied()
        .unwrap_or("unknown")
        .to_string();
    match res {
        Ok(o) => CriterionResult {
            id,
            name,
            passed: o.passed,
            summary: o.summary,
            metrics: o.metrics,
        },
        Err(e) => CriterionResult {
            id,
            name,
            passed: false,
            summary: format!("error: {e:#}"),
            metrics: Map::new(),
        },
    }
}

/// Runs checks 1 to 11 in the ambient thread pool.
pub fn run_core(seed: u64) -> Vec<CriterionResult> {
    (1..=11).map(|id| run_criterion(id, seed)).collect()
}

/// Runs the whole suite. With `determinism` off, check 12 is left out.
pub fn run(seed: u64, determinism: bool) -> SelftestReport {
    let mut criteria = run_core(seed);
    if determinism {
        criteria.push(run_criterion(12, seed));
    }
    SelftestReport {
        seed,
        passed: criteria.iter().all(|c| c.passed),
        criteria,
    }
}

fn core_json(seed: u64) -> String {
    serde_json::to_string(&run_core(seed)).expect("reports serialize")
}

fn determinism_check(seed: u64) -> Result<Check> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build()?;
    // At least four workers, so work is really split even on a one-core machine.
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).max(4);
    let auto = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let a = single.install(|| core_json(seed));
    let b = single.install(|| core_json(seed));
    let c = auto.install(|| core_json(seed));
    let d = auto.install(|| core_json(seed));
    let same = a == b && a == c && a == d;
    outcome(
        same,
        format!(
            "two runs at 1 thread and two at {} threads {}",
            auto.current_num_threads(),
            if same { "are byte-identical" } else { "differ" }
        ),
        json!({ "auto_threads": auto.current_num_threads(), "report_bytes": a.len() }),
    )
}

// ---------------------------------------------------------------------------
// Oracles

/// Smallest eigenvalue and spectral radius from nalgebra's Hermitian solver.
fn oracle_eig<E: Entry>(a: &SelfAdjoint<E>) -> (f64, f64) {
    let n = a.dim();
    let m = DMatrix::from_fn(n, n, |i, j| {
        let v = a[(i, j)];
        Complex::new(v.re().as_f64(), v.im().as_f64())
    });
    let eig = SymmetricEigen::new(m).eigenvalues;
    let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let rad = eig.iter().fold(0.0f64, |r, v| r.max(v.abs()));
    (min, rad)
}

/// `Some(psd)` away from the boundary, `None` when `|lambda_min| < 1e-8 ||A||`.
fn oracle_psd<E: Entry>(a: &SelfAdjoint<E>) -> Option<bool> {
    let (min, rad) = oracle_eig(a);
    if min.abs() < 1e-8 * rad {
        None
    } else {
        Some(min >= 0.0)
    }
}

/// Gaussian self-adjoint matrix shifted so roughly half the draws are PSD.
fn random_hessian<E: Entry>(rng: &mut SeededRng, d: usize) -> SelfAdjoint<E> {
    let shift = rng.random_range(-0.5..2.5) * (d as f64).sqrt();
    sampling::self_adjoint::<E, _>(rng, d).shift(E::Real::of(shift))
}

fn random_jet<E: Entry>(rng: &mut SeededRng, d: usize, grad_scale: f64) -> Result<Jet<E>> {
    let a = random_hessian::<E>(rng, d);
    let p: Vec<E> = sampling::vector::<E, _>(rng, d)
        .into_iter()
        .map(|v| v.mul_real(E::Real::of(grad_scale)))
        .collect();
    Ok(Jet::new(E::Real::of(sampling::normal(rng)), p, a)?)
}

#[derive(Default, Serialize)]
struct Tally {
    cases: usize,
    excluded: usize,
    members: usize,
    agree: usize,
}

// ---------------------------------------------------------------------------
// 1

fn block_psd_check(seed: u64) -> Result<Check> {
    let tol = ToleranceConfig::default();
    let start = Instant::now();
    let mut t = Tally::default();
    let mut complex = 0usize;
    for i in 0..1000u64 {
        let mut rng = substream(seed, i);
        let (n, m) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let ok = if i % 4 == 3 {
            complex += 1;
            block_case::<C64>(&mut rng, n, m, &tol, &mut t)?
        } else {
            block_case::<f64>(&mut rng, n, m, &tol, &mut t)?
        };
        t.agree += usize::from(ok);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let checked = t.cases - t.excluded;
    let in_time = elapsed < 5.0;
    outcome(
        t.agree == checked && in_time && checked > 900,
        format!("{}/{checked} agree ({} boundary cases excluded, {} PSD), {}", t.agree, t.excluded, t.members, if in_time { "under 5 s" } else { "over 5 s" }),
        json!({ "cases": t.cases, "excluded": t.excluded, "psd": t.members, "agree": t.agree, "complex_cases": complex, "within_time_budget": in_time }),
    )
}

fn block_case<E: Entry>(rng: &mut SeededRng, n: usize, m: usize, tol: &ToleranceConfig, t: &mut Tally) -> Result<bool> {
    let a = random_hessian::<E>(rng, n + m);
    t.cases += 1;
    let Some(truth) = oracle_psd(&a) else {
        t.excluded += 1;
        return Ok(false);
    };
    t.members += usize::from(truth);
    let (b, c, d) = split_blocks(&a, n)?;
    Ok(block_psd(&b, &c, &d, tol)? == truth)
}

// ---------------------------------------------------------------------------
// 2

fn cone_product_check(seed: u64) -> Result<Check> {
    let tol = ToleranceConfig::default();
    let (mut t, mut s) = (Tally::default(), SampledTally::default());
    for i in 0..500u64 {
        let mut rng = substream(seed, i);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let cfg = SamplingConfig { seed: seed ^ i, ..SamplingConfig::default() };
        if i % 2 == 1 {
            cone_case::<C64>(&mut rng, n, m, &cfg, &tol, &mut t, &mut s)?;
        } else {
            cone_case::<f64>(&mut rng, n, m, &cfg, &tol, &mut t, &mut s)?;
        }
    }
    let checked = t.cases - t.excluded;
    let rate = s.refuted as f64 / s.non_members.max(1) as f64;
    outcome(
        t.agree == checked && s.members_refuted == 0 && rate >= 0.95 && s.non_members > 0,
        format!(
            "exact {}/{checked} agree; sampled refutes {}/{} non-members ({:.1}%), {} members wrongly refuted",
            t.agree,
            s.refuted,
            s.non_members,
            100.0 * rate,
            s.members_refuted
        ),
        json!({ "exact": t, "sampled": s, "refutation_rate": rate }),
    )
}

#[derive(Default, Serialize)]
struct SampledTally {
    members_refuted: usize,
    non_members: usize,
    refuted: usize,
}

fn cone_case<E: Entry>(
    rng: &mut SeededRng,
    n: usize,
    m: usize,
    cfg: &SamplingConfig,
    tol: &ToleranceConfig,
    t: &mut Tally,
    s: &mut SampledTally,
) -> Result<()> {
    let jet = random_jet::<E>(rng, n + m, 1.0)?;
    t.cases += 1;
    let Some(truth) = oracle_psd(&jet.a) else {
        t.excluded += 1;
        return Ok(());
    };
    t.members += usize::from(truth);
    let spec = ProductSpec::new(Subequation::pos_cone(n), Subequation::pos_cone(m))?;
    t.agree += usize::from(contains_exact(&spec, &jet, tol)?.is_member() == truth);
    let sampled = contains_sampled(&spec, &jet, cfg, tol)?.is_member();
    if truth {
        s.members_refuted += usize::from(!sampled);
    } else {
        s.non_members += 1;
        s.refuted += usize::from(!sampled);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 3

fn coupled_product_check(seed: u64) -> Result<Check> {
    let tol = ToleranceConfig::default();
    let mut t = Tally::default();
    for i in 0..500u64 {
        let mut rng = substream(seed, i);
        let lambda0 = [0.0, 0.5, 1.0][(i % 3) as usize];
        let mu1 = rng.random_range(-1.0..1.0);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=3));
        if i % 2 == 1 {
            coupled_case::<C64>(&mut rng, n, m, lambda0, mu1, &tol, &mut t)?;
        } else {
            coupled_case::<f64>(&mut rng, n, m, lambda0, mu1, &tol, &mut t)?;
        }
    }
    let checked = t.cases - t.excluded;
    outcome(
        t.agree == checked && checked > 450,
        format!("{}/{checked} agree ({} boundary cases excluded, {} members)", t.agree, t.excluded, t.members),
        json!({ "tally": t }),
    )
}

fn coupled_case<E: Entry>(
    rng: &mut SeededRng,
    n: usize,
    m: usize,
    lambda0: f64,
    mu1: f64,
    tol: &ToleranceConfig,
    t: &mut Tally,
) -> Result<()> {
    let d = n + m;
    let jet = random_jet::<E>(rng, d, 0.7)?;
    t.cases += 1;
    // Oracle matrix A - l0 p p^* - diag(mu1 I, 0), assembled entrywise.
    let direct = SelfAdjoint::new(Matrix::from_fn(d, d, |i, j| {
        let mut v = jet.a[(i, j)] - (jet.p[i] * jet.p[j].conj()).mul_real(E::Real::of(lambda0));
        if i == j && i < n {
            v -= E::from_real(E::Real::of(mu1));
        }
        v
    }))?;
    let Some(truth) = oracle_psd(&direct) else {
        t.excluded += 1;
        return Ok(());
    };
    t.members += usize::from(truth);
    let mu = SelfAdjoint::diagonal(&vec![E::Real::of(mu1); n]);
    let spec = ProductSpec::new(
        Subequation::f_lambda_mu(E::Real::of(lambda0), mu),
        Subequation::f_lambda_mu(E::Real::of(lambda0), SelfAdjoint::zeros(m)),
    )?;
    t.agree += usize::from(contains_exact(&spec, &jet, tol)?.is_member() == truth);
    Ok(())
}

// ---------------------------------------------------------------------------
// 4

fn ball_product_check(seed: u64) -> Result<Check> {
    let tol = ToleranceConfig::default();
    let (mut witnessed, mut accepted) = (0usize, 0usize);
    for i in 0..200u64 {
        let mut rng = substream(seed, i);
        let (n, m) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let spec = ProductSpec::new(Subequation::gradient_ball(n, 1.0)?, Subequation::pos_cone(m))?;
        let a = sampling::psd::<f64, _>(&mut rng, n + m, n + m);
        let mut p = sampling::vector::<f64, _>(&mut rng, n);
        let u = sampling::unit_vector::<f64, _>(&mut rng, m);
        let len = rng.random_range(0.1..2.0);
        p.extend(u.iter().map(|v| v * len));
        let jet = Jet::new(sampling::normal(&mut rng), p.clone(), a.clone())?;
        let cfg = SamplingConfig { seed: seed ^ i, ..SamplingConfig::default() };
        if let Some(Witness::Graph { gamma, .. }) = contains_sampled(&spec, &jet, &cfg, &tol)?.witness() {
            // Oracle: |p1 + G^t p2| computed by hand must leave the unit ball.
            let pulled: Vec<f64> = (0..n)
                .map(|k| p[k] + (0..m).map(|r| gamma[(r, k)] * p[n + r]).sum::<f64>())
                .collect();
            let len = pulled.iter().map(|v| v * v).sum::<f64>().sqrt();
            witnessed += usize::from(len > 1.0 + tol.residual_tol);
        }
        // Companion jet with p2 = 0 and |p1| <= 1.
        let v = sampling::unit_vector::<f64, _>(&mut rng, n);
        let r = rng.random_range(0.0..1.0);
        let mut q: Vec<f64> = v.iter().map(|x| x * r).collect();
        q.extend(std::iter::repeat_n(0.0, m));
        let inside = Jet::new(0.0, q, a)?;
        accepted += usize::from(contains_exact(&spec, &inside, &tol)?.is_exact_member());
    }
    let rate = witnessed as f64 / 200.0;
    outcome(
        rate >= 0.99 && accepted == 200,
        format!("{witnessed}/200 refuted with a checked map; {accepted}/200 inside jets accepted exactly"),
        json!({ "witnessed": witnessed, "accepted": accepted, "rate": rate }),
    )
}

// ---------------------------------------------------------------------------
// 5

fn max_jet_gap(a: &Jet<f64>, b: &Jet<f64>) -> f64 {
    let mut gap = (a.r - b.r).abs();
    for i in 0..a.dim() {
        gap = gap.max((a.p[i] - b.p[i]).abs());
        for j in 0..a.dim() {
            gap = gap.max((a.a[(i, j)] - b.a[(i, j)]).abs());
        }
    }
    gap
}

fn marginal_jet_check() -> Result<Check> {
    let opts = MarginalOptions::default();
    let mut names: Vec<String> = SMOOTH_REAL.iter().map(|s| s.to_string()).collect();
    names.push("quad:n=2,coupling=0.5".into());
    let mut per_field = Map::new();
    let mut worst = 0.0f64;
    for name in &names {
        let e = catalog::lookup::<f64>(name)?;
        let (lo, hi, res) = (e.domain.fiber.lo, e.domain.fiber.hi, e.domain.fiber.samples);
        let n = e.domain.base.lo.len();
        let field = e.field.clone();
        let g = CallableField::real(format!("g[{name}]"), n, move |x: &[f64]| {
            marginal_point(&field, FiberKind::Interval, x, lo, hi, res, &opts)
                .map(|m| m.value)
                .unwrap_or(f64::NAN)
        });
        let mut field_worst = 0.0f64;
        for t in [0.2, 0.35, 0.5, 0.65, 0.8] {
            let x: Vec<f64> = (0..n)
                .map(|k| {
                    let s = if k == 0 { t } else { 1.0 - t };
                    e.domain.base.lo[k] + s * (e.domain.base.hi[k] - e.domain.base.lo[k])
                })
                .collect();
            let fm = marginal_point(&e.field, FiberKind::Interval, &x, lo, hi, res, &opts)?;
            ensure!(fm.interior, "{name}: minimiser on the fibre boundary at {x:?}");
            let formula = marginal_jet_smooth(&e.field, &x, fm.argmin, &JetOptions::default())?;
            let fd = fd_jet_callable(&g, &x, 1e-3)?;
            field_worst = field_worst.max(max_jet_gap(&formula, &fd));
        }
        worst = worst.max(field_worst);
        per_field.insert(name.clone(), json!(field_worst));
    }
    let q = catalog::lookup::<f64>("quad:n=1,coupling=1")?;
    let fm = marginal_point(&q.field, FiberKind::Interval, &[0.3], -3.0, 3.0, 121, &opts)?;
    let hess = marginal_jet_smooth(&q.field, &[0.3], fm.argmin, &JetOptions::default())?.a[(0, 0)];
    let worked = (hess - 2.0).abs();
    outcome(
        worst <= 1e-4 && worked <= 1e-6 && names.len() >= 5,
        format!("largest jet gap {worst:.2e} over {} fields; worked example Hess g = {hess:.9}", names.len()),
        json!({ "per_field": per_field, "worst": worst, "worked_example_error": worked }),
    )
}

// ---------------------------------------------------------------------------
// 6

fn real_principle_check(seed: u64) -> Result<Check> {
    let opts = PrincipleOptions::default();
    let cone = Subequation::<f64>::pos_cone(1);
    let (mut floor, mut sites, mut passes) = (f64::INFINITY, 0usize, 0usize);
    for i in 0..20u64 {
        let e = catalog::lookup::<f64>(&format!("softplus:seed={}", seed.wrapping_add(i) % 1_000_000))?;
        let domain = e.domain.build()?;
        let m = marginal(&e.field, &domain, &opts.marginal)?;
        sites += m.interior.iter().filter(|b| **b).count();
        if m.interior.iter().any(|b| *b) {
            match hessian_floor(&m.g, &Region::Flags(m.interior.clone())) {
                Ok(v) => floor = floor.min(v),
                Err(subeq::Error::EmptyRegion(_)) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let r = verify_minimum_principle(&cone, &e.field, &domain, &opts)?;
        passes += usize::from(r.outcome == Outcome::Pass);
    }
    let saddle = catalog::lookup::<f64>("saddle")?;
    let broken = verify_minimum_principle(&cone, &saddle.field, &saddle.domain.build()?, &opts)?;
    let broken_ok = broken.outcome == Outcome::HypothesisFail;
    outcome(
        floor >= -1e-6 && passes == 20 && broken_ok && sites > 0,
        format!(
            "Hessian floor {floor:.2e} over {sites} interior sites, {passes}/20 harness passes; broken field gives {:?}",
            broken.outcome
        ),
        json!({ "hessian_floor": floor, "interior_sites": sites, "harness_passes": passes, "broken_outcome": broken.outcome }),
    )
}

// ---------------------------------------------------------------------------
// 7

fn complex_principle_check() -> Result<Check> {
    let e = catalog::lookup::<f64>("kiselman-ring")?;
    let mut doc = e.domain.clone();
    doc.base.counts = vec![11, 11];
    let domain = doc.build()?;
    let opts = PrincipleOptions::default();
    let m = marginal(&e.field, &domain, &opts.marginal)?;
    let mut err = 0.0f64;
    for i in 0..m.g.len() {
        let x = domain.base.point(i);
        err = err.max((m.g.values[i] - (x[0] * x[0] + x[1] * x[1])).abs());
    }
    let mut floor = f64::INFINITY;
    let mut checked = 0;
    for i in 0..m.g.len() {
        if let Ok(real) = fd_jet(&m.g, i) {
            let cj = Jet::<C64>::from_real_coords(&real)?;
            floor = floor.min(oracle_eig(&cj.a).0);
            checked += 1;
        }
    }
    let report = verify_minimum_principle(&Subequation::<C64>::pos_cone(1), &e.field, &domain, &opts)?;
    outcome(
        err <= 1e-4 && floor >= -1e-6 && checked > 0 && report.outcome == Outcome::Pass,
        format!(
            "|g - |z|^2| <= {err:.2e}; complex Hessian floor {floor:.2e} at {checked} sites; harness {:?}",
            report.outcome
        ),
        json!({ "max_error": err, "hessian_floor": floor, "sites": checked, "harness": report.outcome }),
    )
}

// ---------------------------------------------------------------------------
// 8

fn supconv_check(seed: u64) -> Result<Check> {
    let h = 1e-3;
    let line = GridGeometry::spanning(&[-1.0], &[1.0], &[2001])?;
    let f = GridFunction::<f64>::from_fn(line.clone(), |x| x[0] * x[0])?;
    let base = sup_convolution(&f, 0.1)?;
    let mut err = 0.0f64;
    let mut reliable = 0;
    for i in 0..f.len() {
        if base.reliable[i] {
            reliable += 1;
            let x = line.point(i)[0];
            err = err.max((base.grid.values[i] - x * x / 0.8).abs());
        }
    }
    let closed_ok = err <= 1e-6 + h && reliable > 0;

    let wavy = GridFunction::<f64>::from_fn(line, |x| (5.0 * x[0]).sin())?;
    let plane = GridGeometry::spanning(&[-1.0, -1.0], &[1.0, 1.0], &[81, 81])?;
    let bowl = GridFunction::<f64>::from_fn(plane, |x| x[0] * x[0] + x[1] * x[1])?;
    let mut monotone = true;
    let mut semiconvex = true;
    let mut floors = Vec::new();
    for input in [&f, &wavy, &bowl] {
        let mut prev: Option<Vec<f64>> = None;
        for eps in [0.05, 0.1, 0.2] {
            let s = sup_convolution(input, eps)?;
            if let Some(p) = &prev {
                monotone &= p.iter().zip(&s.grid.values).all(|(a, b)| a <= b);
            }
            let floor = hessian_floor(&s.grid, &Region::Interior)?;
            semiconvex &= floor >= -(1.0 / eps + 1e-6);
            floors.push(floor);
            prev = Some(s.grid.values);
        }
    }

    let mut identical = 0;
    for k in 0..20u64 {
        let mut rng = substream(seed, k);
        let geometry = if k % 2 == 0 {
            GridGeometry::new(vec![rng.random_range(-1.0..1.0)], vec![rng.random_range(0.01..0.2)], vec![rng.random_range(5..80)])?
        } else {
            GridGeometry::new(
                vec![0.0, 0.0],
                vec![rng.random_range(0.01..0.2), rng.random_range(0.01..0.2)],
                vec![rng.random_range(3..20), rng.random_range(3..20)],
            )?
        };
        let values: Vec<f64> = (0..geometry.len()).map(|_| 3.0 * sampling::normal(&mut rng)).collect();
        let mut mask: Vec<bool> = (0..geometry.len()).map(|_| rng.random_bool(0.9)).collect();
        mask[0] = true;
        let g = GridFunction::with_mask(geometry, values, mask)?;
        let eps = rng.random_range(0.01..0.5);
        let fast = sup_convolution(&g, eps)?;
        let brute = sup_convolution_brute(&g, eps)?;
        let same = fast.grid.mask == brute.grid.mask
            && fast.grid.values.iter().zip(&brute.grid.values).all(|(a, b)| a == b);
        identical += usize::from(same);
    }
    outcome(
        closed_ok && monotone && semiconvex && identical == 20,
        format!(
            "closed form error {err:.2e} on {reliable} reliable samples; monotone {monotone}; semiconvex {semiconvex}; {identical}/20 grids match brute force"
        ),
        json!({ "closed_form_error": err, "reliable": reliable, "monotone": monotone, "semiconvex": semiconvex, "hessian_floors": floors, "brute_force_matches": identical }),
    )
}

// ---------------------------------------------------------------------------
// 9

fn mollify_check(seed: u64) -> Result<Check> {
    let plane = GridGeometry::spanning(&[-1.0, -1.0], &[1.0, 1.0], &[41, 41])?;
    let eps = 0.15;
    let mut floor = f64::INFINITY;
    for k in 0..50u64 {
        let mut rng = substream(seed, k);
        let groups: Vec<(f64, Vec<[f64; 3]>)> = (0..2)
            .map(|_| {
                let tau = rng.random_range(0.3..0.6);
                let planes = (0..rng.random_range(3..=5))
                    .map(|_| [sampling::normal(&mut rng), sampling::normal(&mut rng), sampling::normal(&mut rng)])
                    .collect();
                (tau, planes)
            })
            .collect();
        let f = GridFunction::<f64>::from_fn(plane.clone(), |x| {
            let smooth_max: f64 = groups
                .iter()
                .map(|(tau, planes)| {
                    let vals: Vec<f64> = planes.iter().map(|a| (a[0] * x[0] + a[1] * x[1] + a[2]) / tau).collect();
                    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    tau * (top + vals.iter().map(|v| (v - top).exp()).sum::<f64>().ln())
                })
                .sum();
            0.5 * (x[0] * x[0] + x[1] * x[1]) + smooth_max
        })?;
        let m = mollify(&f, eps)?;
        floor = floor.min(hessian_floor(&m, &Region::Interior)?);
    }
    let mut affine_err = 0.0f64;
    for k in 50..60u64 {
        let mut rng = substream(seed, k);
        let a: Vec<f64> = (0..3).map(|_| 10.0 * sampling::normal(&mut rng)).collect();
        let f = GridFunction::<f64>::from_fn(plane.clone(), |x| a[0] * x[0] + a[1] * x[1] + a[2])?;
        let scale = f.sup_abs()?;
        let m = mollify(&f, eps)?;
        for i in 0..f.len() {
            if m.mask[i] {
                affine_err = affine_err.max((m.values[i] - f.values[i]).abs() / scale);
            }
        }
    }
    outcome(
        floor >= -1e-6 && affine_err <= 1e-14,
        format!("Hessian floor {floor:.3} over 50 mollified convex functions; affine relative error {affine_err:.1e}"),
        json!({ "hessian_floor": floor, "affine_relative_error": affine_err }),
    )
}

// ---------------------------------------------------------------------------
// 10

fn associativity_check(seed: u64) -> Result<Check> {
    let tol = ToleranceConfig::default();
    let mut t = Tally::default();
    let mut sampled_refutes_member = 0usize;
    for i in 0..200u64 {
        let mut rng = substream(seed, i);
        let dims = [rng.random_range(1..=2), rng.random_range(1..=2), rng.random_range(1..=2)];
        let cfg = SamplingConfig { seed: seed ^ i, ..SamplingConfig::default() };
        let (ok, bad) = if i % 2 == 1 {
            assoc_case::<C64>(&mut rng, dims, &cfg, &tol, &mut t)?
        } else {
            assoc_case::<f64>(&mut rng, dims, &cfg, &tol, &mut t)?
        };
        t.agree += usize::from(ok);
        sampled_refutes_member += usize::from(bad);
    }
    let checked = t.cases - t.excluded;
    outcome(
        t.agree == checked && sampled_refutes_member == 0 && checked > 180,
        format!(
            "{}/{checked} jets: both groupings match the eigenvalue oracle ({} excluded); {sampled_refutes_member} sampled refutations of members",
            t.agree, t.excluded
        ),
        json!({ "tally": t, "sampled_refutes_member": sampled_refutes_member }),
    )
}

fn assoc_case<E: Entry>(
    rng: &mut SeededRng,
    dims: [usize; 3],
    cfg: &SamplingConfig,
    tol: &ToleranceConfig,
    t: &mut Tally,
) -> Result<(bool, bool)> {
    let [a, b, c] = dims;
    let p = |k| Subequation::<E>::pos_cone(k);
    let left = ProductSpec::new(Subequation::product(p(a), p(b))?, p(c))?;
    let right = ProductSpec::new(p(a), Subequation::product(p(b), p(c))?)?;
    let jet = random_jet::<E>(rng, a + b + c, 1.0)?;
    t.cases += 1;
    let Some(truth) = oracle_psd(&jet.a) else {
        t.excluded += 1;
        return Ok((false, false));
    };
    t.members += usize::from(truth);
    let l = product::contains(&left, &jet, tol)?.is_member();
    let r = product::contains(&right, &jet, tol)?.is_member();
    let ls = contains_sampled(&left, &jet, cfg, tol)?.is_member();
    let rs = contains_sampled(&right, &jet, cfg, tol)?.is_member();
    Ok((l == truth && r == truth, truth && !(ls && rs)))
}

// ---------------------------------------------------------------------------
// 11

fn perturbed_check() -> Result<Check> {
    let e = catalog::lookup::<f64>("flat")?;
    let domain = e.domain.build()?;
    let opts = MarginalOptions::default();
    let js = [1.0, 10.0, 100.0, 1000.0];
    let report = perturbed_marginal_certificate(&e.field, &domain, 1.0, &js, &opts)?;
    // With alpha = 0 the perturbation is the constant 1/j.
    let g = marginal(&e.field, &domain, &opts)?;
    let mut shift_exact = true;
    for &j in &js {
        let p = perturbed_marginal(&e.field, &domain, 0.0, j, &opts)?;
        shift_exact &= (0..g.g.len()).all(|i| p.result.g_discrete[i] == g.g_discrete[i] + 1.0 / j);
    }
    outcome(
        report.passed && shift_exact,
        format!(
            "{} site checks, {} violations; constant perturbation shifts by exactly 1/j: {shift_exact}",
            report.checked_sites,
            report.violations.len()
        ),
        json!({ "checked": report.checked_sites, "violations": report.violations.len(), "max_gap": report.metadata.get("max_gap"), "constant_shift_exact": shift_exact }),
    )
}

/// Sizes the global thread pool; 0 means one thread per core.
pub fn install_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the thread pool")
}
