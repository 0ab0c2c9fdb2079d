use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use cglw::config::{parse_config, RunConfig, VerifyConfig};
use cglw::run;
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(version, about = "Standing waves of the complex Ginzburg-Landau equation")]
struct Cli {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: [output] dir, then ./out)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of branches computed concurrently
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the lowest eigenvalues of the configured domain as CSV
    Eigen {
        /// Number of eigenvalues (default: largest configured index)
        #[arg(long)]
        count: Option<usize>,
        /// Write the table here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Continue each configured branch and write the branch tables
    Continue,
    /// Check the residual and integral identities of a dumped wave
    Verify {
        /// Field dump with a wave block in its sidecar
        field: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evolve a dumped wave and compare with its rotating orbit
    Evolve {
        field: PathBuf,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        checkpoints: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Continue, verify, evolve and export; exits 1 if any check fails
    Pipeline,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let path = path.context("--config is required for this subcommand")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

fn out_dir(cli: &Cli, config: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => cglw_core::io::write_json(path, value)?,
        None => {
            let text = serde_json::to_string_pretty(value)?;
            match writeln!(std::io::stdout().lock(), "{text}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool> {
    let jobs = cli.jobs.map(usize::from);
    match &cli.command {
        Command::Eigen { count, output } => {
            let config = load_config(cli.config.as_deref())?;
            let domain = cglw_core::domain::Domain::new(config.domain.clone())?;
            let count = count.unwrap_or_else(|| *config.eigen_indices.iter().max().expect("validated"));
            let rows = run::eigen_table(&domain, count)?;
            match output {
                Some(path) => run::write_eigen_csv(
                    std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
                    &rows,
                )?,
                None => run::write_eigen_csv(std::io::stdout().lock(), &rows)?,
            }
            Ok(true)
        }
        Command::Continue | Command::Pipeline => {
            let config = load_config(cli.config.as_deref())?;
            let out = out_dir(cli, &config);
            let verify = matches!(cli.command, Command::Pipeline);
            let manifest = run::run_branches(&config, &out, jobs, verify)?;
            for job in &manifest.jobs {
                for f in &job.failures {
                    log::warn!("eigenpair {}: {} failed at alpha {:?}", job.eigen_index, f.check, f.alpha);
                }
            }
            eprintln!("{}: {}", out.join("manifest.json").display(), manifest.status);
            Ok(manifest.passed())
        }
        Command::Verify { field, output } => {
            let (wave_tol, identity_tol) = match cli.config.as_deref() {
                Some(p) => {
                    let c = load_config(Some(p))?.continuation;
                    (c.wave_tol, c.identity_tol)
                }
                None => {
                    let c = cglw::config::ContinuationConfig::default();
                    (c.wave_tol, c.identity_tol)
                }
            };
            let report = run::verify_field(field, wave_tol, identity_tol)?;
            emit_json(&report, output.as_deref())?;
            Ok(report.passes)
        }
        Command::Evolve {
            field,
            t_final,
            dt,
            checkpoints,
            output,
        } => {
            let v = match cli.config.as_deref() {
                Some(p) => load_config(Some(p))?.verify,
                None => VerifyConfig::default(),
            };
            let report = run::evolve_field(
                field,
                t_final.unwrap_or(v.t_final),
                dt.unwrap_or(v.dt),
                checkpoints.unwrap_or(v.checkpoints),
                &v.evolution_options(),
            )?;
            emit_json(&report, output.as_deref())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CGLW_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
