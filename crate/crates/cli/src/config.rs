//! The TOML run configuration.
//!
//! ```toml
//! [params]
//! theta = 0.3
//! gamma = -0.2
//!
//! [domain]
//! kind = "box"      # box | ball | torus
//! N = 1
//! lengths = [3.141592653589793]
//! M = 128
//!
//! [eigen]
//! index = 1         # or indices = [1, 2]
//!
//! [continuation]
//! alpha_max = 0.5
//! alpha_step = 0.05
//!
//! [verify]
//! evolve = true
//! T = 1.0
//! dt = 1e-3
//!
//! [output]
//! dump_every = 0
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use cglw_core::continuation::{BranchOptions, LinearSolver, NewtonOptions};
use cglw_core::domain::{Domain, DomainError, DomainKind, DomainSpec, Params};
use cglw_core::evolution::{EvolutionOptions, Splitting};
use cglw_core::io::Tolerances;
use cglw_core::nonlinearity::{AlphaCap, NonlinearityError};
use cglw_core::postprocess::WAVE_RESIDUAL_TOL;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("config parse error: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Domain(#[from] DomainError),
    #[error("invalid config: {0}")]
    Cap(#[from] NonlinearityError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    params: RawParams,
    #[serde(default)]
    domain: RawDomain,
    #[serde(default)]
    eigen: RawEigen,
    #[serde(default)]
    continuation: ContinuationConfig,
    #[serde(default)]
    verify: VerifyConfig,
    #[serde(default)]
    output: OutputConfig,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    theta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDomain {
    #[serde(default = "default_kind")]
    kind: DomainKind,
    #[serde(rename = "N", default = "default_dim")]
    dim: usize,
    #[serde(default)]
    lengths: Option<Vec<f64>>,
    #[serde(rename = "M", default = "default_modes")]
    modes: usize,
}

fn default_kind() -> DomainKind {
    DomainKind::Box
}

fn default_dim() -> usize {
    1
}

fn default_modes() -> usize {
    128
}

impl Default for RawDomain {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            dim: default_dim(),
            lengths: None,
            modes: default_modes(),
        }
    }
}

#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEigen {
    index: Option<usize>,
    indices: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuationConfig {
    pub alpha_max: f64,
    pub alpha_step: f64,
    /// First continuation step; defaults to `alpha_step`.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    pub newton_tol: f64,
    /// Largest `‖F‖_∞` accepted at a branch point.
    pub residual_tol: f64,
    pub identity_tol: f64,
    /// Bound on the relative residual of the scaled wave.
    pub wave_tol: f64,
    pub max_iters: usize,
    pub solver: LinearSolver,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            alpha_max: 0.5,
            alpha_step: 0.05,
            initial_step: None,
            min_step: 1e-5,
            newton_tol: 1e-10,
            residual_tol: 1e-9,
            identity_tol: 1e-6,
            wave_tol: WAVE_RESIDUAL_TOL,
            max_iters: 25,
            solver: LinearSolver::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Evolve every accepted wave and compare with its orbit.
    pub evolve: bool,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub dt: f64,
    pub checkpoints: usize,
    pub orbit_tol: f64,
    pub splitting: Splitting,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            evolve: true,
            t_final: 1.0,
            dt: 1e-3,
            checkpoints: 10,
            orbit_tol: 1e-5,
            splitting: Splitting::Linearized,
        }
    }
}

impl VerifyConfig {
    pub fn evolution_options(&self) -> EvolutionOptions {
        EvolutionOptions {
            splitting: self.splitting,
            ..EvolutionOptions::default()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` takes precedence.
    pub dir: Option<PathBuf>,
    /// Dump every K-th accepted wave; 0 disables dumps.
    pub dump_every: usize,
}

/// A validated configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: Params,
    pub domain: DomainSpec,
    pub eigen_indices: Vec<usize>,
    pub continuation: ContinuationConfig,
    pub verify: VerifyConfig,
    pub output: OutputConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| match e.span() {
        Some(span) => ConfigError::Parse {
            line: line_of(text, span.start),
            message: e.message().to_string(),
        },
        None => ConfigError::Syntax(e.message().to_string()),
    })?;
    validate(raw)
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn positive(name: &str, value: f64) -> Result<(), ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive, got {value}")))
    }
}

fn validate(raw: RawConfig) -> Result<RunConfig, ConfigError> {
    let params = Params::new(raw.params.theta, raw.params.gamma)?;

    let d = raw.domain;
    let lengths = d.lengths.unwrap_or_else(|| match d.kind {
        DomainKind::Ball => vec![1.0],
        DomainKind::Box | DomainKind::Torus => vec![PI; d.dim],
    });
    let domain = DomainSpec {
        kind: d.kind,
        dim: d.dim,
        lengths,
        modes: d.modes,
    };
    Domain::new(domain.clone())?;

    let eigen_indices = match (raw.eigen.index, raw.eigen.indices) {
        (Some(_), Some(_)) => return Err(invalid("give either eigen.index or eigen.indices, not both")),
        (Some(k), None) => vec![k],
        (None, Some(list)) => list,
        (None, None) => vec![1],
    };
    if eigen_indices.is_empty() {
        return Err(invalid("eigen.indices must not be empty"));
    }
    if eigen_indices.contains(&0) {
        return Err(invalid("eigen indices are 1-based"));
    }
    let mut sorted = eigen_indices.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != eigen_indices.len() {
        return Err(invalid("eigen.indices must be distinct"));
    }

    let c = &raw.continuation;
    AlphaCap::new(c.alpha_max, domain.dim)?;
    positive("continuation.alpha_step", c.alpha_step)?;
    if let Some(step) = c.initial_step {
        positive("continuation.initial_step", step)?;
    }
    positive("continuation.min_step", c.min_step)?;
    positive("continuation.newton_tol", c.newton_tol)?;
    positive("continuation.residual_tol", c.residual_tol)?;
    positive("continuation.identity_tol", c.identity_tol)?;
    positive("continuation.wave_tol", c.wave_tol)?;
    if c.max_iters == 0 {
        return Err(invalid("continuation.max_iters must be at least 1"));
    }

    let v = &raw.verify;
    positive("verify.T", v.t_final)?;
    positive("verify.dt", v.dt)?;
    positive("verify.orbit_tol", v.orbit_tol)?;
    if v.checkpoints == 0 {
        return Err(invalid("verify.checkpoints must be at least 1"));
    }

    Ok(RunConfig {
        params,
        domain,
        eigen_indices,
        continuation: raw.continuation,
        verify: raw.verify,
        output: raw.output,
    })
}

impl RunConfig {
    pub fn cap(&self) -> AlphaCap {
        AlphaCap::new(self.continuation.alpha_max, self.domain.dim).expect("validated")
    }

    pub fn branch_options(&self) -> BranchOptions {
        let c = &self.continuation;
        BranchOptions {
            initial_step: c.initial_step,
            min_step: c.min_step,
            newton: NewtonOptions {
                tol: c.newton_tol,
                accept_tol: c.residual_tol.max(c.newton_tol),
                max_iters: c.max_iters,
                solver: c.solver,
            },
            ..BranchOptions::uniform(c.alpha_max, c.alpha_step)
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        let c = &self.continuation;
        Tolerances {
            newton_tol: c.newton_tol,
            residual_tol: c.residual_tol,
            identity_tol: c.identity_tol,
            max_iters: c.max_iters,
            min_step: c.min_step,
        }
    }
}
