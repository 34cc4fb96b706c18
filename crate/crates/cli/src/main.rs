//! The `dirsup` binary: sieves, smooth counts, the Dickman function, bound
//! curves, single estimates, and configured experiment sweeps.
//!
//! Exit codes: 0 on success, 2 for usage or configuration errors, 3 when a
//! run completed but an ordering that must hold up to rounding was violated
//! (the offending rows are dumped to stderr).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde_json::json;

use dirsup::bounds::{gap_ratio, l1_bound, lower_main, upper_main, ConstantPolicy};
use dirsup::dickman::DickmanTable;
use dirsup::montecarlo::{block_union_spec, estimate_esup};
use dirsup::numbertheory::{psi_count, PrimeTable};
use dirsup_cli::{render_csv, render_json, run_experiment, ExperimentConfig, MethodSpec, OutputFormat};

#[derive(Parser)]
#[command(name = "dirsup", version, about = "Random Dirichlet polynomials: supports, densities, bounds, and supremum experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the primes up to a limit, one per line
    Sieve {
        #[arg(long)]
        limit: u64,
        /// Print only how many there are
        #[arg(long)]
        count: bool,
    },
    /// The smooth count Psi(N, M), exact or through the Dickman density
    Psi {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        /// Count by sieving instead of approximating by N rho(log N / log M)
        #[arg(long)]
        exact: bool,
    },
    /// The Dickman function rho(u)
    Rho {
        #[arg(long)]
        u: f64,
        /// Print log rho(u) instead
        #[arg(long)]
        log: bool,
    },
    /// Bound curves at one (N, tau, sigma) point, as a JSON object
    Bounds {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        tau: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
    },
    /// One expected-supremum estimate over the block-union support
    Esup {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        tau: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        /// "z-exact", "torus-grid", or "line-grid"
        #[arg(long, default_value = "z-exact")]
        method: String,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// torus-grid: grid evaluation budget
        #[arg(long)]
        budget: Option<usize>,
        /// torus-grid: rounds of coordinate ascent from the best points
        #[arg(long)]
        refine_steps: Option<usize>,
        /// line-grid: window start
        #[arg(long)]
        t_min: Option<f64>,
        /// line-grid: window end
        #[arg(long)]
        t_max: Option<f64>,
        /// line-grid: sample count
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run a configured sweep and write JSON lines or CSV
    Experiment {
        /// Path to a JSON experiment configuration
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sieve { limit, count } => {
            let table = PrimeTable::sieve(limit)?;
            if count {
                println!("{}", table.len());
            } else {
                for &p in table.primes() {
                    println!("{p}");
                }
            }
        }
        Command::Psi { n, m, exact } => {
            if exact {
                println!("{}", psi_count(n, m)?);
            } else {
                let u = (n as f64).ln() / (m as f64).ln();
                let rho = DickmanTable::standard().rho(u)?;
                println!("{:?}", n as f64 * rho);
            }
        }
        Command::Rho { u, log } => {
            let table = DickmanTable::standard();
            if log {
                println!("{:?}", table.log_rho(u)?);
            } else {
                println!("{:?}", table.rho(u)?);
            }
        }
        Command::Bounds { n, tau, sigma } => {
            let policy = ConstantPolicy::default();
            let table = PrimeTable::sieve(n)?;
            let upper = upper_main(n, tau, sigma, &policy)?;
            let envelope = l1_bound(n, tau, sigma, &table)?;
            let lower = match table.prime(tau) {
                Some(p) if tau >= 2 => {
                    let density = psi_count(n, p)? as f64 / n as f64;
                    Some(lower_main(n, tau, sigma, density, &policy)?)
                }
                _ => None,
            };
            let ratio = if tau >= 2 { Some(gap_ratio(n, tau)?) } else { None };
            let out = json!({
                "upper": upper,
                "lower": lower,
                "l1": envelope,
                "gap_ratio": ratio,
            });
            println!("{}", serde_json::to_string(&out)?);
        }
        Command::Esup {
            n,
            tau,
            sigma,
            method,
            replicates,
            seed,
            budget,
            refine_steps,
            t_min,
            t_max,
            steps,
        } => {
            let spec_method = MethodSpec {
                budget,
                refine_steps,
                t_min,
                t_max,
                steps,
                ..MethodSpec::named(&method)
            };
            let method = spec_method.to_method()?;
            let table = PrimeTable::sieve(n)?;
            let spec = block_union_spec(n, tau, sigma, &table)?;
            let record = estimate_esup(&spec, tau, method, replicates, seed)?;
            println!("{}", serde_json::to_string(&record)?);
            if record.sandwich_violations > 0 {
                eprintln!(
                    "{} of {} draws violated the lattice <= bracket <= envelope ordering",
                    record.sandwich_violations, record.replicates
                );
                return Ok(ExitCode::from(3));
            }
        }
        Command::Experiment { config } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading config {}", config.display()))?;
            let cfg = ExperimentConfig::from_json(&text)?;
            let outcome = run_experiment(&cfg)?;
            let rendered = match cfg.format {
                OutputFormat::Json => render_json(&outcome.rows),
                OutputFormat::Csv => render_csv(&outcome.rows)?,
            };
            match &cfg.output {
                Some(path) => std::fs::write(path, &rendered)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{rendered}"),
            }
            if !outcome.flagged.is_empty() {
                for &i in &outcome.flagged {
                    eprintln!(
                        "ordering violation in row {i}: {}",
                        serde_json::to_string(&outcome.rows[i])?
                    );
                }
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
