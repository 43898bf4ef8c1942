//! `subeq`: membership checks, regularisers, marginals and the self-test.
//!
//! Exit status is 0 when the requested check passes, 1 when it runs but
//! fails, and 2 for usage errors, unreadable input or non-finite data.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use subeq::catalog::{self, CatalogEntry};
use subeq::field::{mollify, sup_convolution, GridFunction};
use subeq::jets::AnyJet;
use subeq::linalg::{ToleranceProfile, TOLERANCE_PROFILE_ENV};
use subeq::marginal::{
    marginal, pseudoconvexity_certificate, verify_minimum_principle, DomainDoc, FiberedDomain, MarginalResult,
    PrincipleOptions,
};
use subeq::product::{self, ProductSpec, SamplingConfig};
use subeq::subequation::{parse_descriptor, AnySubequation};
use subeq::{Entry, Jet, Subequation, ToleranceConfig, VerificationReport};
use subeq_cli::selftest;

#[derive(Parser)]
#[command(name = "subeq", version, about = "Jets, subequations and the minimum principle for marginals")]
struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Tolerance preset: strict, default or loose.
    #[arg(long, global = true, env = TOLERANCE_PROFILE_ENV)]
    tol_profile: Option<String>,

    /// Write JSON output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Is a jet in a subequation?
    Check {
        /// Jet document (JSON).
        #[arg(long)]
        jet: PathBuf,
        /// Family descriptor, e.g. `poscone:2` or `flm:l0=1,n=2`.
        #[arg(long)]
        spec: String,
    },
    /// Is a jet in the product F#G?
    Product {
        #[arg(long)]
        jet: PathBuf,
        /// Family on the first factor.
        #[arg(long)]
        f: String,
        /// Family on the second factor.
        #[arg(long)]
        g: String,
        /// Force the sampled tester even for pairs with an exact test.
        #[arg(long)]
        sampled: bool,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sup-convolution of a grid function.
    Supconv {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Output stem for the regularised grid.
        #[arg(long)]
        save: PathBuf,
    },
    /// Mollification of a grid function.
    Mollify {
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        save: PathBuf,
    },
    /// Marginal `g(x) = min_y f(x, y)` of a catalog field.
    Marginal {
        #[command(flatten)]
        field: FieldArgs,
        /// Output stem for the marginal grid.
        #[arg(long)]
        save: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Minimum principle harness on a catalog field.
    Minprinciple {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Pseudoconvexity certificate for an exhaustion from the catalog.
    Certify {
        #[command(flatten)]
        field: FieldArgs,
        /// Sublevels to examine, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Runs the built-in acceptance checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the determinism check, which reruns the suite at several thread counts.
        #[arg(long)]
        no_determinism: bool,
    },
}

#[derive(Args)]
struct FieldArgs {
    /// Catalog descriptor, e.g. `quad:n=1,coupling=1` or `kiselman-ring`.
    #[arg(long)]
    field: String,
    /// Fibred domain document (JSON); defaults to the field's own domain.
    #[arg(long)]
    domain: Option<PathBuf>,
    /// Family on the base; defaults to the one the catalog pairs with the field.
    #[arg(long)]
    subequation: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

/// An error that maps to exit status 2.
struct Failure(anyhow::Error);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let inner = || -> Result<bool> {
        selftest::install_threads(cli.threads)?;
        let tol = match &cli.tol_profile {
            Some(p) => ToleranceConfig::from_profile(p.parse::<ToleranceProfile>()?),
            None => ToleranceConfig::default(),
        };
        let (passed, out) = dispatch(&cli.command, &tol)?;
        emit(cli.out.as_deref(), &out)?;
        Ok(passed)
    };
    inner().map_err(Failure)
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
            Ok(())
        }
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn dispatch(cmd: &Command, tol: &ToleranceConfig) -> Result<(bool, String)> {
    match cmd {
        Command::Check { jet, spec } => {
            let jet = AnyJet::from_json(&read(jet)?)?;
            let (member, margin) = match (parse_descriptor(spec)?, jet) {
                (AnySubequation::Real(s), AnyJet::Real(j)) => (s.contains(&j, tol)?, s.margin(&j, tol)?),
                (AnySubequation::Complex(s), AnyJet::Complex(j)) => (s.contains(&j, tol)?, s.margin(&j, tol)?),
                _ => bail!("the jet and the family have different flavors"),
            };
            Ok((member, pretty(&json!({ "member": member, "margin": margin, "spec": spec }))))
        }
        Command::Product { jet, f, g, sampled, samples, seed } => {
            let cfg = SamplingConfig {
                n_samples: *samples,
                seed: *seed,
                ..SamplingConfig::default()
            };
            let jet = AnyJet::from_json(&read(jet)?)?;
            match (parse_descriptor(f)?, parse_descriptor(g)?, jet) {
                (AnySubequation::Real(f), AnySubequation::Real(g), AnyJet::Real(j)) => {
                    product_decision(f, g, &j, cfg, *sampled, tol)
                }
                (AnySubequation::Complex(f), AnySubequation::Complex(g), AnyJet::Complex(j)) => {
                    product_decision(f, g, &j, cfg, *sampled, tol)
                }
                _ => bail!("the jet and both factors must have the same flavor"),
            }
        }
        Command::Supconv { grid, eps, save } => {
            let f = GridFunction::<f64>::load(grid)?;
            let s = sup_convolution(&f, *eps)?;
            let (manifest, _) = s.grid.save(save)?;
            let reliable = s.reliable.iter().filter(|b| **b).count();
            Ok((
                true,
                pretty(&json!({
                    "epsilon": s.epsilon,
                    "delta": s.delta,
                    "reliable_samples": reliable,
                    "samples": s.grid.len(),
                    "manifest": manifest,
                })),
            ))
        }
        Command::Mollify { grid, eps, save } => {
            let f = GridFunction::<f64>::load(grid)?;
            let m = mollify(&f, *eps)?;
            let (manifest, _) = m.save(save)?;
            Ok((
                true,
                pretty(&json!({ "epsilon": eps, "active_samples": m.active_count(), "samples": m.len(), "manifest": manifest })),
            ))
        }
        Command::Marginal { field, save, format } => {
            let (entry, domain) = load_field(field)?;
            let m = marginal(&entry.field, &domain, &Default::default())?;
            if let Some(stem) = save {
                m.g.save(stem)?;
            }
            Ok((true, marginal_output(&m, &domain, *format)))
        }
        Command::Minprinciple { field, seed } => {
            let (entry, domain) = load_field(field)?;
            let opts = principle_options(*tol, *seed);
            let report = with_base_family(field, &entry, |spec| match spec {
                AnySubequation::Real(s) => verify_minimum_principle(&s, &entry.field, &domain, &opts),
                AnySubequation::Complex(s) => verify_minimum_principle(&s, &entry.field, &domain, &opts),
            })?;
            Ok((report.passed, report.to_json_pretty()))
        }
        Command::Certify { field, levels, seed } => {
            let (entry, domain) = load_field(field)?;
            let opts = principle_options(*tol, *seed);
            let report = with_base_family(field, &entry, |spec| match spec {
                AnySubequation::Real(s) => pseudoconvexity_certificate(&s, &entry.field, &domain, levels, &opts),
                AnySubequation::Complex(s) => pseudoconvexity_certificate(&s, &entry.field, &domain, levels, &opts),
            })?;
            Ok((report.passed, report.to_json_pretty()))
        }
        Command::Selftest { seed, no_determinism } => {
            let report = selftest::run(*seed, !no_determinism);
            Ok((report.passed, report.to_json()))
        }
    }
}

fn product_decision<E: Entry>(
    f: Subequation<E>,
    g: Subequation<E>,
    jet: &Jet<E>,
    cfg: SamplingConfig,
    sampled: bool,
    tol: &ToleranceConfig,
) -> Result<(bool, String)> {
    let spec = ProductSpec::new(f, g)?.with_sampling(cfg);
    let decision = if sampled {
        product::contains_sampled(&spec, jet, &spec.sampling, tol)?
    } else {
        product::contains(&spec, jet, tol)?
    };
    Ok((decision.is_member(), pretty(&decision.to_json())))
}

fn principle_options(tol: ToleranceConfig, seed: u64) -> PrincipleOptions {
    let mut opts = PrincipleOptions::default();
    if tol != ToleranceConfig::default() {
        opts.tol = tol;
    }
    opts.sampling.seed = seed;
    opts
}

fn load_field(args: &FieldArgs) -> Result<(CatalogEntry<f64>, FiberedDomain)> {
    let entry = catalog::lookup::<f64>(&args.field)?;
    let doc: DomainDoc = match &args.domain {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => entry.domain.clone(),
    };
    Ok((entry, doc.build()?))
}

fn with_base_family(
    args: &FieldArgs,
    entry: &CatalogEntry<f64>,
    run: impl FnOnce(AnySubequation) -> subeq::Result<VerificationReport>,
) -> Result<VerificationReport> {
    let spec = parse_descriptor(args.subequation.as_deref().unwrap_or(&entry.subequation))?;
    Ok(run(spec)?)
}

fn marginal_output(m: &MarginalResult<f64>, domain: &FiberedDomain, format: Format) -> String {
    let rows = (0..m.g.len()).map(|i| (domain.base.point(i), i));
    match format {
        Format::Tsv => {
            let dims = domain.base.dims();
            let mut out = String::new();
            let header: Vec<String> = (0..dims).map(|k| format!("x{k}")).collect();
            out.push_str(&format!("{}\tg\tg_discrete\tgamma\tinterior\n", header.join("\t")));
            for (x, i) in rows {
                if !m.g.mask[i] {
                    continue;
                }
                let coords: Vec<String> = x.iter().map(|v| v.to_string()).collect();
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    coords.join("\t"),
                    m.g.values[i],
                    m.g_discrete[i],
                    m.gamma[i],
                    m.interior[i]
                ));
            }
            out
        }
        Format::Json => {
            let sites: Vec<Value> = rows
                .filter(|(_, i)| m.g.mask[*i])
                .map(|(x, i)| {
                    json!({
                        "x": x,
                        "g": m.g.values[i],
                        "g_discrete": m.g_discrete[i],
                        "gamma": m.gamma[i],
                        "interior": m.interior[i],
                    })
                })
                .collect();
            pretty(&json!({ "sites": sites, "excluded": m.excluded }))
        }
    }
}
