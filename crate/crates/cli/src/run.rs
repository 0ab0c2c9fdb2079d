//! Orchestration of the subcommands. Every branch is an independent job that
//! writes only inside its own directory.

use std::io::Write;
use std::path::{Path, PathBuf};

use cglw_core::continuation::{continue_branch, BranchTable, ContinuationError, Problem, StopReason};
use cglw_core::domain::{Domain, DomainError, DomainKind};
use cglw_core::eigen::{check_simple, eigenpairs, EigenError, EigenPair};
use cglw_core::evolution::{verify_standing_wave, EvolutionError, EvolutionOptions, EvolutionReport};
use cglw_core::io::{self, format_f64, BranchMeta, IoError};
use cglw_core::postprocess::{
    branch_diagnostics, identity_report, scale_to_standing_wave, wave_residual, IdentityReport,
    PointDiagnostics, PostprocessError, WaveResidual,
};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::RunConfig;

/// `|ω|` bound on a branch with `γ = θ`.
pub const STATIONARY_OMEGA_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Continuation(#[from] ContinuationError),
    #[error(transparent)]
    Postprocess(#[from] PostprocessError),
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{0}")]
    Output(#[from] std::io::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenRow {
    pub index: usize,
    pub lambda: f64,
    pub gap: f64,
    pub simple: bool,
}

pub fn eigen_table(domain: &Domain, count: usize) -> Result<Vec<EigenRow>, RunError> {
    Ok(eigenpairs(domain, count)?
        .iter()
        .map(|p| EigenRow {
            index: p.index,
            lambda: p.lambda,
            gap: p.gap,
            simple: check_simple(domain, p).is_ok(),
        })
        .collect())
}

pub fn write_eigen_csv<W: Write>(out: W, rows: &[EigenRow]) -> Result<(), RunError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "lambda", "gap", "simple"])?;
    for r in rows {
        w.write_record([r.index.to_string(), format_f64(r.lambda), format_f64(r.gap), r.simple.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One failed check, as recorded in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

impl Failure {
    fn threshold(check: &str, alpha: f64, value: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            alpha: Some(alpha),
            value: Some(value),
            tolerance: Some(tolerance),
            message: None,
        }
    }

    fn message(check: &str, alpha: Option<f64>, message: impl ToString) -> Self {
        Self {
            check: check.to_string(),
            alpha,
            value: None,
            tolerance: None,
            message: Some(message.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JobReport {
    pub eigen_index: usize,
    pub dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_reached: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopReason>,
    pub dumps: usize,
    pub failures: Vec<Failure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub status: &'static str,
    pub jobs: Vec<JobReport>,
}

impl Manifest {
    fn new(jobs: Vec<JobReport>) -> Self {
        let status = if jobs.iter().all(|j| j.failures.is_empty()) {
            "pass"
        } else {
            "fail"
        };
        Self { status, jobs }
    }

    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// `out` for a single branch, `out/eig_{k}` when several are requested.
pub fn job_dir(out: &Path, config: &RunConfig, index: usize) -> PathBuf {
    if config.eigen_indices.len() == 1 {
        out.to_path_buf()
    } else {
        out.join(format!("eig_{index}"))
    }
}

/// Per-point verification results written to `identity.json`.
#[derive(Clone, Debug, Serialize)]
struct PointCheck {
    index: usize,
    alpha: f64,
    omega: f64,
    residual_inf: f64,
    identity_real_err: f64,
    identity_imag_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wave_residual: Option<WaveResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    identity: Option<IdentityReport>,
}

#[derive(Clone, Debug, Serialize)]
struct PointEvolution {
    index: usize,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<EvolutionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    skipped: Option<String>,
}

struct Branch {
    table: BranchTable,
    rows: Vec<PointDiagnostics>,
}

fn run_branch(config: &RunConfig, domain: &Domain, pair: &EigenPair) -> Result<Branch, RunError> {
    let problem = Problem::new(domain, config.params, pair, config.cap())?;
    let table = continue_branch(&problem, &config.branch_options())?;
    let rows = branch_diagnostics(&problem, &table)?;
    log::info!(
        "eigenpair {}: {} points, alpha reached {}, stop {:?}",
        pair.index,
        rows.len(),
        table.alpha_reached,
        table.stop
    );
    Ok(Branch { table, rows })
}

fn write_pairs(path: &Path, header: [&str; 2], rows: impl Iterator<Item = (f64, f64)>) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([format_f64(a), format_f64(b)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_branch_files(dir: &Path, config: &RunConfig, branch: &Branch) -> Result<(), RunError> {
    std::fs::create_dir_all(dir)?;
    io::save_branch_csv(&dir.join("branch.csv"), &branch.rows)?;
    io::write_json(&dir.join("meta.json"), &BranchMeta::new(&branch.table, config.tolerances()))?;
    write_pairs(
        &dir.join("omega.csv"),
        ["alpha", "omega"],
        branch.rows.iter().map(|r| (r.alpha, r.omega)),
    )?;
    write_pairs(
        &dir.join("log_norm.csv"),
        ["alpha", "log_l2_norm_u"],
        branch
            .rows
            .iter()
            .filter(|r| r.log_l2_norm_u.is_finite())
            .map(|r| (r.alpha, r.log_l2_norm_u)),
    )?;
    Ok(())
}

/// Runs every check on the branch, writes the reports and the dumps of the
/// waves that passed, and returns the failures.
fn check_branch(
    config: &RunConfig,
    domain: &Domain,
    dir: &Path,
    branch: &Branch,
) -> Result<(Vec<Failure>, usize), RunError> {
    let c = &config.continuation;
    let v = &config.verify;
    let mut failures = Vec::new();
    if branch.table.stop != StopReason::Completed {
        failures.push(Failure::message(
            "branch_incomplete",
            Some(branch.table.alpha_reached),
            format!("{:?}", branch.table.stop),
        ));
    }
    let stationary = config.params.theta() == config.params.gamma();
    let mut checks = Vec::new();
    let mut evolutions = Vec::new();
    let mut dumps = 0;
    for (i, (point, row)) in branch.table.points.iter().zip(&branch.rows).enumerate() {
        let before = failures.len();
        let alpha = point.alpha;
        if !(row.residual_inf <= c.residual_tol) {
            failures.push(Failure::threshold("residual_inf", alpha, row.residual_inf, c.residual_tol));
        }
        for (name, err) in [
            ("identity_real_err", row.identity_real_err),
            ("identity_imag_err", row.identity_imag_err),
        ] {
            if !(err <= c.identity_tol) {
                failures.push(Failure::threshold(name, alpha, err, c.identity_tol));
            }
        }
        if stationary && !(point.omega.abs() <= STATIONARY_OMEGA_TOL) {
            failures.push(Failure::threshold("stationary_omega", alpha, point.omega.abs(), STATIONARY_OMEGA_TOL));
        }
        let mut check = PointCheck {
            index: i,
            alpha,
            omega: point.omega,
            residual_inf: row.residual_inf,
            identity_real_err: row.identity_real_err,
            identity_imag_err: row.identity_imag_err,
            wave_residual: None,
            identity: None,
        };
        if alpha == 0.0 {
            checks.push(check);
            continue;
        }
        let wave = match scale_to_standing_wave(domain, &config.params, point) {
            Ok(w) => w,
            Err(e) => {
                failures.push(Failure::message("scale", Some(alpha), e));
                checks.push(check);
                continue;
            }
        };
        let residual = wave_residual(domain, &wave)?;
        if !residual.passes(c.wave_tol) {
            failures.push(Failure::threshold("wave_residual", alpha, residual.relative, c.wave_tol));
        }
        let identity = identity_report(domain, &wave)?;
        if !identity.nontrivial {
            failures.push(Failure::message("nontrivial", Some(alpha), "exported wave is trivial"));
        }
        check.wave_residual = Some(residual);
        check.identity = Some(identity);
        checks.push(check);

        if v.evolve {
            let mut record = PointEvolution {
                index: i,
                alpha,
                report: None,
                skipped: None,
            };
            if domain.kind() == DomainKind::Ball {
                record.skipped = Some("time integration runs on box and torus domains only".into());
            } else {
                match verify_standing_wave(domain, &wave, v.t_final, v.dt, v.checkpoints, &v.evolution_options()) {
                    Ok(report) => {
                        if !(report.orbit_err <= v.orbit_tol) {
                            failures.push(Failure::threshold("orbit_err", alpha, report.orbit_err, v.orbit_tol));
                        }
                        record.report = Some(report);
                    }
                    Err(e) => failures.push(Failure::message("evolution", Some(alpha), e)),
                }
            }
            evolutions.push(record);
        }

        let every = config.output.dump_every;
        if every > 0 && i % every == 0 && failures.len() == before {
            io::write_wave(&dir.join("waves").join(format!("point_{i:03}.csv")), domain, &wave, Some(point.mu))?;
            dumps += 1;
        }
    }
    io::write_json(&dir.join("identity.json"), &checks)?;
    if v.evolve {
        io::write_json(&dir.join("evolution.json"), &evolutions)?;
    }
    Ok((failures, dumps))
}

fn run_job(
    config: &RunConfig,
    domain: &Domain,
    pair: Result<&EigenPair, String>,
    index: usize,
    out: &Path,
    verify: bool,
) -> Result<JobReport, RunError> {
    let dir = job_dir(out, config, index);
    let mut report = JobReport {
        eigen_index: index,
        dir: dir.clone(),
        lambda: None,
        points: None,
        alpha_reached: None,
        stop: None,
        dumps: 0,
        failures: Vec::new(),
    };
    let pair = match pair {
        Ok(p) => p,
        Err(e) => {
            report.failures.push(Failure::message("eigen", None, e));
            return Ok(report);
        }
    };
    report.lambda = Some(pair.lambda);
    let branch = match run_branch(config, domain, pair) {
        Ok(b) => b,
        Err(RunError::Continuation(e)) => {
            report.failures.push(Failure::message("continuation", None, e));
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    write_branch_files(&dir, config, &branch)?;
    report.points = Some(branch.rows.len());
    report.alpha_reached = Some(branch.table.alpha_reached);
    report.stop = Some(branch.table.stop.clone());
    if verify {
        let (failures, dumps) = check_branch(config, domain, &dir, &branch)?;
        report.failures = failures;
        report.dumps = dumps;
    } else if branch.table.stop != StopReason::Completed {
        report.failures.push(Failure::message(
            "branch_incomplete",
            Some(branch.table.alpha_reached),
            format!("{:?}", branch.table.stop),
        ));
    }
    Ok(report)
}

/// Runs all configured branches on up to `jobs` threads (all cores when
/// `None`) and writes `manifest.json` into `out`. With `verify` every point
/// is checked and the passing waves are exported.
pub fn run_branches(config: &RunConfig, out: &Path, jobs: Option<usize>, verify: bool) -> Result<Manifest, RunError> {
    let domain = Domain::new(config.domain.clone())?;
    let count = *config.eigen_indices.iter().max().expect("validated");
    let pairs: Result<Vec<EigenPair>, String> = eigenpairs(&domain, count).map_err(|e| e.to_string());
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = jobs {
        builder = builder.num_threads(k);
    }
    let pool = builder.build()?;
    let reports: Result<Vec<JobReport>, RunError> = pool.install(|| {
        config
            .eigen_indices
            .par_iter()
            .map(|&k| {
                let pair = pairs.as_ref().map(|p| &p[k - 1]).map_err(Clone::clone);
                run_job(config, &domain, pair, k, out, verify)
            })
            .collect()
    });
    let manifest = Manifest::new(reports?);
    std::fs::create_dir_all(out)?;
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Report of the `verify` subcommand.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub alpha: f64,
    pub omega: f64,
    pub wave_residual: WaveResidual,
    pub identity: IdentityReport,
    pub passes: bool,
}

pub fn verify_field(path: &Path, wave_tol: f64, identity_tol: f64) -> Result<VerifyReport, RunError> {
    let (domain, wave, _) = io::read_wave(path)?;
    let residual = wave_residual(&domain, &wave)?;
    let identity = identity_report(&domain, &wave)?;
    Ok(VerifyReport {
        alpha: wave.alpha,
        omega: wave.omega,
        passes: residual.passes(wave_tol) && identity.passes(identity_tol),
        wave_residual: residual,
        identity,
    })
}


pub fn evolve_field(
    path: &Path,
    t_final: f64,
    dt: f64,
    checkpoints: usize,
    opts: &EvolutionOptions,
) -> Result<EvolutionReport, RunError> {
    let (domain, wave, _) = io::read_wave(path)?;
    Ok(verify_standing_wave(&domain, &wave, t_final, dt, checkpoints, opts)?)
}
