//! `ilslab`: generate instances, analyze sections, run check suites, solve
//! the Cheeger relaxation, and evaluate weighted norms.
//!
//! Canonical (byte-stable) output goes to stdout or `--out`; timing and
//! progress go to stderr. `ILSLAB_THREADS` caps worker threads.

#![forbid(unsafe_code)]

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ilslab_core::cheeger::{relax_energy, verify_certificate, RelaxationParams};
use ilslab_core::instance::{generate_instance, GenSpec, Instance};
use ilslab_core::lq::{lq_norm, NormVariant, WeightedField};
use ilslab_core::report::{canonical_json, render_report, ReportFormat};
use ilslab_core::slope::{global_ils, slope_field, ScaleSchedule, SlopeVariant};
use ilslab_core::suite::{run_suite, SuiteKind, SuiteOptions};

#[derive(Parser)]
#[command(name = "ilslab", version, about = "Intrinsic-section laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum VariantArg {
    /// Asymptotic slope (two-sided ball pairs).
    A,
    /// Local slope.
    Ils,
}

impl From<VariantArg> for SlopeVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::A => SlopeVariant::Asymptotic,
            VariantArg::Ils => SlopeVariant::Local,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormVariantArg {
    Sum,
    Max,
    Quad,
}

impl From<NormVariantArg> for NormVariant {
    fn from(v: NormVariantArg) -> Self {
        match v {
            NormVariantArg::Sum => NormVariant::Sum,
            NormVariantArg::Max => NormVariant::Max,
            NormVariantArg::Quad => NormVariant::Quad,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random validated instance file.
    Gen {
        #[arg(long)]
        seed: u64,
        /// Dimensions as `s,m,n`.
        #[arg(long)]
        dims: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Global constant and slope fields of one section.
    Analyze {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        section: String,
        /// Comma-separated radii; defaults to the instance schedule.
        #[arg(long)]
        scales: Option<String>,
        /// Output path; `.csv` selects the tabular format.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a checker suite; exits nonzero iff a check fails.
    Check {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "all")]
        suite: String,
        /// Admissibility constant override for combination checks.
        #[arg(long)]
        c: Option<f64>,
        /// Pass/fail tolerance override applied to every check.
        #[arg(long)]
        tol: Option<f64>,
        /// Seed for the solver runs inside the cheeger suite.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// Solve the proximal relaxation for one section.
    Cheeger {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        section: String,
        /// Slope scale; defaults to the largest schedule radius.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value_t = 1e6)]
        tau: f64,
        #[arg(long, default_value_t = 6)]
        restarts: usize,
        #[arg(long, default_value_t = 0xC0FFEE)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = VariantArg::A)]
        variant: VariantArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted L^q norm of a named field or section.
    Norms {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 2.0)]
        q: f64,
        #[arg(long, value_enum, default_value_t = NormVariantArg::Sum)]
        variant: NormVariantArg,
    },
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("ILSLAB_THREADS") {
        if let Ok(threads) = raw.parse::<usize>() {
            if threads > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn slope_field_json(field: &ilslab_core::slope::SlopeField) -> serde_json::Value {
    serde_json::to_value(field).expect("slope fields always serialize")
}

fn run() -> Result<ExitCode> {
    configure_threads();
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { seed, dims, out } => {
            let parts: Vec<usize> = dims
                .split(',')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .context("parsing --dims (expected s,m,n)")?;
            if parts.len() != 3 {
                bail!("--dims expects three comma-separated integers s,m,n");
            }
            let instance = generate_instance(GenSpec {
                s: parts[0],
                m: parts[1],
                n: parts[2],
                seed,
            })?;
            instance.save(&out)?;
            eprintln!("wrote {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Analyze {
            instance,
            section,
            scales,
            out,
        } => {
            let inst = Instance::load(&instance)?;
            let sec = inst.section(&section)?;
            let sched = match scales {
                Some(raw) => {
                    let radii: Vec<f64> = raw
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .context("parsing --scales")?;
                    ScaleSchedule::new(radii)?
                }
                None => inst.schedule.clone(),
            };
            let (ils, witness) = global_ils(sec)?;
            let local = slope_field(sec, &sched, SlopeVariant::Local)?;
            let asym = slope_field(sec, &sched, SlopeVariant::Asymptotic)?;

            let csv_requested = out
                .as_ref()
                .is_some_and(|p| p.extension().is_some_and(|e| e == "csv"));
            let text = if csv_requested {
                let mut t = String::from("variant,");
                t.push_str(
                    ilslab_core::report::slope_field_csv(&local)
                        .lines()
                        .next()
                        .unwrap_or("point"),
                );
                t.push('\n');
                for (variant, field) in [("local", &local), ("asymptotic", &asym)] {
                    for line in ilslab_core::report::slope_field_csv(field).lines().skip(1) {
                        t.push_str(&format!("{variant},{line}\n"));
                    }
                }
                t
            } else {
                canonical_json(&json!({
                    "section": section,
                    "radii": sched.radii(),
                    "ils": {"value": ils, "witness": [witness.0, witness.1]},
                    "local": slope_field_json(&local),
                    "asymptotic": slope_field_json(&asym),
                }))?
            };
            emit(&text, out.as_ref())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            instance,
            suite,
            c,
            tol,
            seed,
            out,
            format,
        } => {
            let inst = Instance::load(&instance)?;
            let kind = SuiteKind::from_str(&suite)?;
            let options = SuiteOptions {
                c,
                tol,
                seed: seed.unwrap_or(SuiteOptions::default().seed),
            };
            let report = run_suite(&inst, kind, &options)?;
            for check in &report.checks {
                let status = if check.skipped {
                    "SKIP"
                } else if check.pass {
                    "PASS"
                } else {
                    "FAIL"
                };
                eprintln!(
                    "{status} {} margin={:.3e} tol={:.1e}",
                    check.check_name, check.worst_margin, check.tolerance
                );
            }
            eprintln!(
                "suite {}: {} ({} checks, {:.2}s)",
                report.suite,
                if report.pass { "pass" } else { "FAIL" },
                report.checks.len(),
                report.elapsed_seconds
            );
            let text = render_report(&report, ReportFormat::from_str(&format)?)?;
            print!("{text}");
            if let Some(path) = &out {
                std::fs::write(path, &text)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Cheeger {
            instance,
            section,
            eps,
            tau,
            restarts,
            seed,
            variant,
            out,
        } => {
            let inst = Instance::load(&instance)?;
            let sec = inst.section(&section)?;
            let eps = eps.unwrap_or_else(|| inst.schedule.radii()[0]);
            let mut params = RelaxationParams::new(eps, tau);
            params.restarts = restarts;
            params.seed = seed;
            let result = relax_energy(sec, &inst.class, &params, variant.into())?;
            let cert_report = verify_certificate(&result.certificate, 10.0 * params.tol)?;
            let text = canonical_json(&json!({
                "section": section,
                "eps": eps,
                "tau": tau,
                "variant": match variant { VariantArg::A => "a", VariantArg::Ils => "ils" },
                "energy": result.energy,
                "converged": result.converged,
                "iterations": result.trace.len(),
                "h2_field": result.h2_field,
                "minimizer": result
                    .minimizer
                    .values()
                    .iter()
                    .map(|v| v.iter().copied().collect::<Vec<f64>>())
                    .collect::<Vec<_>>(),
                "certificate": {
                    "members": result.certificate.sequence.len(),
                    "verified": cert_report.pass,
                    "margin": cert_report.worst_margin,
                },
            }))?;
            emit(&text, out.as_ref())?;
            eprintln!(
                "energy {:.6e} after {} iterations ({})",
                result.energy,
                result.trace.len(),
                if result.converged {
                    "converged"
                } else {
                    "not converged"
                }
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Norms {
            instance,
            field,
            q,
            variant,
        } => {
            let inst = Instance::load(&instance)?;
            let weighted = if let Some(plain) = inst.fields.get(&field) {
                WeightedField::new(inst.base.clone(), plain.values().to_vec())?
            } else if let Ok(sec) = inst.section(&field) {
                WeightedField::from_section(sec)
            } else {
                bail!("no field or section named {field:?} in the instance");
            };
            let value = lq_norm(&weighted, q, variant.into())?;
            let text = canonical_json(&json!({
                "field": field,
                "q": q,
                "variant": match variant {
                    NormVariantArg::Sum => "sum",
                    NormVariantArg::Max => "max",
                    NormVariantArg::Quad => "quad",
                },
                "norm": value,
            }))?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
