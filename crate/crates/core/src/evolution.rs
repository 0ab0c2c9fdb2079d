//! Time integration of `φ_t = e^{iθ}Δφ + e^{iγ}|φ|^α φ` by second-order
//! exponential time differencing (ETD2RK), used to check that a computed
//! wave rotates as `e^{iωt}u`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{ComplexField, Domain, DomainError, DomainKind, Params};
use crate::nonlinearity::g;
use crate::postprocess::StandingWave;

/// A node above this modulus stops the integration.
pub const BLOWUP_MODULUS: f64 = 1e12;
const TAYLOR_RADIUS: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolutionError {
    #[error("solution blew up at t = {time} (max modulus {max_modulus:e})")]
    Blowup { time: f64, max_modulus: f64 },
    #[error("time integration needs a box or torus, not a {0}")]
    UnsupportedDomain(DomainKind),
    #[error("invalid time stepping: {0}")]
    InvalidStep(String),
    #[error("wave belongs to a different domain")]
    DomainMismatch,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// How the right-hand side is split into an exactly propagated diagonal part
/// and a pointwise remainder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    /// `L_k = -λ_k e^{iθ} + μ e^{iγ}` with remainder
    /// `μ e^{iγ}(g(α, φ) - φ)`; exact for `α = 0`.
    #[default]
    Linearized,
    /// `L_k = -λ_k e^{iθ}` with remainder `μ e^{iγ} g(α, φ)`.
    Diffusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionOptions {
    pub splitting: Splitting,
    /// Multiplier of the nonlinearity: `φ_t = e^{iθ}Δφ + μ e^{iγ} g(α, φ)`.
    /// The physical equation has `μ = 1`.
    pub mu: f64,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            splitting: Splitting::Linearized,
            mu: 1.0,
        }
    }
}

/// Precomputed ETD2RK coefficients for one step size.
pub struct Integrator<'a> {
    domain: &'a Domain,
    alpha: f64,
    dt: f64,
    reaction: Complex64,
    shift: Complex64,
    exp: Vec<Complex64>,
    phi1: Vec<Complex64>,
    phi2: Vec<Complex64>,
}

/// `φ_1(z) = (e^z - 1)/z` and `φ_2(z) = (e^z - 1 - z)/z²`, by Taylor series
/// near 0.
fn phi_functions(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < TAYLOR_RADIUS {
        let mut term = Complex64::new(1.0, 0.0);
        let mut p1 = Complex64::new(0.0, 0.0);
        let mut p2 = Complex64::new(0.0, 0.0);
        // term = z^k / k!
        for k in 0..24 {
            p1 += term / (k + 1) as f64;
            p2 += term / ((k + 1) * (k + 2)) as f64;
            term *= z / (k + 1) as f64;
        }
        (p1, p2)
    } else {
        let e = z.exp();
        ((e - 1.0) / z, (e - 1.0 - z) / (z * z))
    }
}

impl<'a> Integrator<'a> {
    pub fn new(
        domain: &'a Domain,
        params: &Params,
        alpha: f64,
        dt: f64,
        opts: &EvolutionOptions,
    ) -> Result<Self, EvolutionError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(EvolutionError::InvalidStep(format!("dt = {dt}")));
        }
        let spectrum = domain
            .spectrum()
            .ok_or(EvolutionError::UnsupportedDomain(domain.kind()))?;
        let reaction = params.reaction_phase() * opts.mu;
        let shift = match opts.splitting {
            Splitting::Linearized => reaction,
            Splitting::Diffusive => Complex64::new(0.0, 0.0),
        };
        let diffusion = params.diffusion_phase();
        let mut exp = Vec::with_capacity(spectrum.len());
        let mut phi1 = Vec::with_capacity(spectrum.len());
        let mut phi2 = Vec::with_capacity(spectrum.len());
        for &lam in spectrum {
            let z = (shift - diffusion * lam) * dt;
            let (p1, p2) = phi_functions(z);
            exp.push(z.exp());
            phi1.push(p1 * dt);
            phi2.push(p2 * dt);
        }
        Ok(Self {
            domain,
            alpha,
            dt,
            reaction,
            shift,
            exp,
            phi1,
            phi2,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Pointwise remainder `N(φ)` in coefficient space.
    fn remainder(&self, phys: &ComplexField) -> ComplexField {
        let n = phys.map(|z| self.reaction * g(self.alpha, z) - self.shift * z);
        self.domain.to_coefficients(&n).expect("same domain")
    }

    /// One ETD2RK step. Input in any representation; output in coefficients.
    pub fn step(&self, phi: &ComplexField) -> Result<ComplexField, EvolutionError> {
        self.domain.check(phi)?;
        let u = self.domain.to_coefficients(phi)?;
        let nu = self.remainder(&self.domain.to_physical(&u)?);
        let a = ComplexField::coefficients(
            (0..u.len())
                .map(|k| self.exp[k] * u.values[k] + self.phi1[k] * nu.values[k])
                .collect(),
        );
        let na = self.remainder(&self.domain.to_physical(&a)?);
        Ok(ComplexField::coefficients(
            (0..u.len())
                .map(|k| a.values[k] + self.phi2[k] * (na.values[k] - nu.values[k]))
                .collect(),
        ))
    }
}

/// One step of the integrator; see [`Integrator::step`].
pub fn step_cgl(
    domain: &Domain,
    phi: &ComplexField,
    dt: f64,
    params: &Params,
    alpha: f64,
    opts: &EvolutionOptions,
) -> Result<ComplexField, EvolutionError> {
    Integrator::new(domain, params, alpha, dt, opts)?.step(phi)
}

fn blowup_check(domain: &Domain, phi: &ComplexField, time: f64) -> Result<ComplexField, EvolutionError> {
    let phys = domain.to_physical(phi)?;
    let max = phys.max_modulus();
    if !(max <= BLOWUP_MODULUS) {
        return Err(EvolutionError::Blowup {
            time,
            max_modulus: max,
        });
    }
    Ok(phys)
}

/// Integrates for `n_steps` steps of size `dt`, calling `observe(step, φ)`
/// with the physical field after every step.
pub fn evolve(
    integrator: &Integrator<'_>,
    initial: &ComplexField,
    n_steps: usize,
    mut observe: impl FnMut(usize, &ComplexField),
) -> Result<ComplexField, EvolutionError> {
    let domain = integrator.domain;
    let mut phi = domain.to_coefficients(initial)?;
    for step in 1..=n_steps {
        phi = integrator.step(&phi)?;
        let phys = blowup_check(domain, &phi, step as f64 * integrator.dt)?;
        observe(step, &phys);
    }
    Ok(phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub orbit_err: f64,
    pub modulus_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Step actually used, `T / steps`.
    pub dt: f64,
    pub steps: usize,
    pub omega: f64,
    /// `max ‖φ(t) - e^{iωt}u‖₂ / ‖u‖₂` over the checkpoints.
    pub orbit_err: f64,
    /// `max ‖|φ(t)| - |u|‖_∞ / ‖u‖_∞` over the checkpoints.
    pub modulus_drift: f64,
    pub checkpoints: Vec<Checkpoint>,
}

/// Evolves `φ(0) = u` to time `t_final` and measures the distance to the
/// orbit `e^{iωt}u` at `checkpoints` equispaced times. The step is adjusted
/// to `T / round(T / dt)`.
pub fn verify_standing_wave(
    domain: &Domain,
    wave: &StandingWave,
    t_final: f64,
    dt: f64,
    checkpoints: usize,
    opts: &EvolutionOptions,
) -> Result<EvolutionReport, EvolutionError> {
    if domain.spec() != &wave.domain {
        return Err(EvolutionError::DomainMismatch);
    }
    if !(t_final > 0.0 && t_final.is_finite() && dt > 0.0) || checkpoints == 0 {
        return Err(EvolutionError::InvalidStep(format!(
            "T = {t_final}, dt = {dt}, checkpoints = {checkpoints}"
        )));
    }
    let steps = ((t_final / dt).round() as usize).max(1);
    let dt = t_final / steps as f64;
    let integrator = Integrator::new(domain, &wave.params, wave.alpha, dt, opts)?;
    let u = domain.to_physical(&wave.u)?;
    let u_l2 = domain.norm_l2(&u)?;
    let u_inf = u.max_modulus();
    let marks: Vec<usize> = (1..=checkpoints)
        .map(|k| ((k * steps) as f64 / checkpoints as f64).round() as usize)
        .collect();
    let mut records = Vec::with_capacity(checkpoints);
    evolve(&integrator, &u, steps, |step, phi| {
        if !marks.contains(&step) {
            return;
        }
        let t = step as f64 * dt;
        let rot = Complex64::from_polar(1.0, wave.omega * t);
        let diff = phi.axpy(-rot, &u);
        let orbit_err = domain.norm_l2(&diff).expect("same domain") / u_l2;
        let modulus_drift = phi
            .values
            .iter()
            .zip(&u.values)
            .map(|(a, b)| (a.norm() - b.norm()).abs())
            .fold(0.0, f64::max)
            / u_inf;
        records.push(Checkpoint {
            t,
            orbit_err,
            modulus_drift,
        });
    })?;
    Ok(EvolutionReport {
        t_final,
        dt,
        steps,
        omega: wave.omega,
        orbit_err: records.iter().map(|c| c.orbit_err).fold(0.0, f64::max),
        modulus_drift: records.iter().map(|c| c.modulus_drift).fold(0.0, f64::max),
        checkpoints: records,
    })
}
