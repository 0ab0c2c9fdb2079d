//! From branch points to standing waves `u` of
//! `e^{iθ}Δu + e^{iγ}|u|^α u = iωu`, and the checks run on them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::continuation::{BranchPoint, BranchTable, Problem};
use crate::domain::{
    make_domain, unravel, ComplexField, Domain, DomainError, DomainKind, DomainSpec, Params,
    Representation,
};
use crate::nonlinearity::g;

/// Default bound on the relative strong-form residual of a wave.
pub const WAVE_RESIDUAL_TOL: f64 = 1e-8;
/// Exported waves must have at least this `L²` norm.
pub const NONTRIVIAL_NORM: f64 = 1e-6;
/// Coefficients below this fraction of the largest one are ignored when
/// measuring the bandwidth of a field.
const BANDWIDTH_FLOOR: f64 = 1e-13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PostprocessError {
    #[error("u = mu^(1/alpha) v is undefined at alpha = 0")]
    AlphaZero,
    #[error("mu = {0} is not positive")]
    MuNonPositive(f64),
    #[error("scaling factor mu^(1/alpha) = exp({log_factor}) is not representable")]
    ScaleOverflow { log_factor: f64 },
    #[error("rescaling by n = {n} needs wavenumber {needed} but the grid resolves only {available}")]
    GridTooCoarse { n: usize, needed: i64, available: i64 },
    #[error("expected a {expected} domain, got {got}")]
    WrongDomain { expected: DomainKind, got: DomainKind },
    #[error("wave belongs to a different domain")]
    DomainMismatch,
    #[error("rescaling factor must be at least 1")]
    InvalidFactor,
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Debug)]
pub struct StandingWave {
    /// Coefficient representation on box and torus, nodal on the ball.
    pub u: ComplexField,
    pub omega: f64,
    pub alpha: f64,
    pub params: Params,
    pub domain: DomainSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveResidual {
    /// `‖e^{iθ}Δu + e^{iγ}|u|^α u - iωu‖_∞`
    pub absolute: f64,
    /// `absolute / max(1, ‖u‖_∞)`
    pub relative: f64,
}

impl WaveResidual {
    pub fn passes(&self, tol: f64) -> bool {
        self.relative <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub identity_real_err: f64,
    pub identity_imag_err: f64,
    /// `∫|∇u|²`
    pub gradient: f64,
    /// `∫|u|^{α+2}`
    pub potential: f64,
    /// `∫|u|²`
    pub mass: f64,
    pub nontrivial: bool,
}

impl IdentityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.identity_real_err <= tol && self.identity_imag_err <= tol
    }
}

fn check_domain(domain: &Domain, wave: &StandingWave) -> Result<(), PostprocessError> {
    if domain.spec() != &wave.domain {
        return Err(PostprocessError::DomainMismatch);
    }
    domain.check(&wave.u)?;
    Ok(())
}

fn expect_kind(domain: &Domain, expected: DomainKind) -> Result<(), PostprocessError> {
    if domain.kind() != expected {
        return Err(PostprocessError::WrongDomain {
            expected,
            got: domain.kind(),
        });
    }
    Ok(())
}

/// `log ‖u‖_{L²} = ln(μ)/α + ln ‖v‖_{L²}`, finite even where `u` itself
/// would overflow.
pub fn log_norm_u(domain: &Domain, point: &BranchPoint) -> Result<f64, PostprocessError> {
    if point.alpha <= 0.0 {
        return Err(PostprocessError::AlphaZero);
    }
    if !(point.mu > 0.0) {
        return Err(PostprocessError::MuNonPositive(point.mu));
    }
    Ok(point.mu.ln() / point.alpha + domain.norm_l2(&point.v)?.ln())
}

/// `u = μ^{1/α} v`.
pub fn scale_to_standing_wave(
    domain: &Domain,
    params: &Params,
    point: &BranchPoint,
) -> Result<StandingWave, PostprocessError> {
    if point.alpha <= 0.0 {
        return Err(PostprocessError::AlphaZero);
    }
    if !(point.mu > 0.0) {
        return Err(PostprocessError::MuNonPositive(point.mu));
    }
    domain.check(&point.v)?;
    let log_factor = point.mu.ln() / point.alpha;
    let factor = log_factor.exp();
    if !factor.is_finite() || factor == 0.0 {
        return Err(PostprocessError::ScaleOverflow { log_factor });
    }
    Ok(StandingWave {
        u: point.v.scale_real(factor),
        omega: point.omega,
        alpha: point.alpha,
        params: *params,
        domain: domain.spec().clone(),
    })
}

/// `e^{iθ}Δu + e^{iγ}|u|^α u - iωu` on the physical grid.
pub fn wave_residual_field(domain: &Domain, wave: &StandingWave) -> Result<ComplexField, PostprocessError> {
    check_domain(domain, wave)?;
    let coeffs = domain.to_coefficients(&wave.u)?;
    let lap = domain.to_physical(&domain.laplacian(&coeffs)?)?;
    let up = domain.to_physical(&coeffs)?;
    let (dp, rp) = (wave.params.diffusion_phase(), wave.params.reaction_phase());
    let fr = Complex64::new(0.0, -wave.omega);
    Ok(ComplexField::physical(
        lap.values
            .iter()
            .zip(&up.values)
            .map(|(&l, &z)| dp * l + rp * g(wave.alpha, z) + fr * z)
            .collect(),
    ))
}

pub fn wave_residual(domain: &Domain, wave: &StandingWave) -> Result<WaveResidual, PostprocessError> {
    let r = wave_residual_field(domain, wave)?.max_modulus();
    let scale = domain.to_physical(&wave.u)?.max_modulus().max(1.0);
    Ok(WaveResidual {
        absolute: r,
        relative: r / scale,
    })
}

/// The odd reflection of a box wave onto the torus with periods `2ℓ_j`,
/// which has `2(M+1)` nodes per axis so the node spacing is unchanged.
/// Each `sin(kπx/ℓ)` becomes `(e^{ikπx/ℓ} - e^{-ikπx/ℓ}) / 2i`.
pub fn extend_to_torus(
    domain: &Domain,
    wave: &StandingWave,
) -> Result<(Domain, StandingWave), PostprocessError> {
    expect_kind(domain, DomainKind::Box)?;
    check_domain(domain, wave)?;
    let spec = domain.spec();
    let mt = 2 * (spec.modes + 1);
    let torus = make_domain(DomainKind::Torus, spec.dim, &spec.lengths, mt)?;
    let coeffs = domain.to_coefficients(&wave.u)?;
    let mut out = ComplexField::zeros(torus.len(), Representation::Coefficient);
    let half = Complex64::new(0.0, -0.5);
    for (slot, &c) in coeffs.values.iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let ks = domain.mode_numbers(slot);
        // every sign pattern of (±k_1, ±k_2, ...)
        for signs in 0..(1usize << ks.len()) {
            let mut amp = c;
            let mut index = 0;
            for (axis, &k) in ks.iter().enumerate() {
                let negative = signs >> axis & 1 == 1;
                amp *= if negative { -half } else { half };
                let m = if negative { mt as i64 - k } else { k };
                index = index * mt + m as usize;
            }
            out.values[index] += amp;
        }
    }
    let extended = StandingWave {
        u: out,
        omega: wave.omega,
        alpha: wave.alpha,
        params: wave.params,
        domain: torus.spec().clone(),
    };
    Ok((torus, extended))
}

fn signed(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn slot_of(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Largest per-axis wavenumber carried by a torus field, ignoring
/// coefficients below [`BANDWIDTH_FLOOR`] times the largest.
pub fn bandwidth(domain: &Domain, field: &ComplexField) -> Result<i64, PostprocessError> {
    expect_kind(domain, DomainKind::Torus)?;
    let c = domain.to_coefficients(field)?;
    let max = c.max_modulus();
    let m = domain.spec().modes;
    Ok(c.values
        .iter()
        .enumerate()
        .filter(|(_, z)| z.norm() > BANDWIDTH_FLOOR * max)
        .map(|(slot, _)| {
            unravel(slot, domain.shape())
                .into_iter()
                .map(|i| signed(i, m).abs())
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0))
}

fn rescale_into(
    src: &Domain,
    dst: &Domain,
    wave: &StandingWave,
    n: usize,
    floor: f64,
) -> Result<StandingWave, PostprocessError> {
    let c = src.to_coefficients(&wave.u)?;
    let (ms, md) = (src.spec().modes, dst.spec().modes);
    let amp = (n as f64).powf(2.0 / wave.alpha);
    let max = c.max_modulus();
    let mut out = ComplexField::zeros(dst.len(), Representation::Coefficient);
    for (slot, &z) in c.values.iter().enumerate() {
        if z.norm() <= floor * max {
            continue;
        }
        let mut index = 0;
        for i in unravel(slot, src.shape()) {
            index = index * md + slot_of(n as i64 * signed(i, ms), md);
        }
        out.values[index] += z * amp;
    }
    Ok(StandingWave {
        u: out,
        omega: wave.omega * (n * n) as f64,
        alpha: wave.alpha,
        params: wave.params,
        domain: dst.spec().clone(),
    })
}

fn rescale_checks(domain: &Domain, wave: &StandingWave, n: usize) -> Result<(), PostprocessError> {
    expect_kind(domain, DomainKind::Torus)?;
    check_domain(domain, wave)?;
    if n == 0 {
        return Err(PostprocessError::InvalidFactor);
    }
    if wave.alpha <= 0.0 {
        return Err(PostprocessError::AlphaZero);
    }
    Ok(())
}

/// `u_n(x) = n^{2/α} u(nx)` with frequency `n²ω`, on the same torus grid:
/// mode `m` moves to mode `nm`. Fails when `n` times the bandwidth exceeds
/// half the grid.
pub fn rescale_family(domain: &Domain, wave: &StandingWave, n: usize) -> Result<StandingWave, PostprocessError> {
    rescale_checks(domain, wave, n)?;
    let available = (domain.spec().modes / 2) as i64;
    let needed = n as i64 * bandwidth(domain, &wave.u)?;
    if needed > available {
        return Err(PostprocessError::GridTooCoarse {
            n,
            needed,
            available,
        });
    }
    rescale_into(domain, domain, wave, n, BANDWIDTH_FLOOR)
}

/// As [`rescale_family`], on a torus with `n` times as many nodes per axis,
/// where every mode fits. The nodal values of `u_n` are then exactly the
/// `n`-fold tiling of those of `u`, scaled by `n^{2/α}`.
pub fn rescale_family_refined(
    domain: &Domain,
    wave: &StandingWave,
    n: usize,
) -> Result<(Domain, StandingWave), PostprocessError> {
    rescale_checks(domain, wave, n)?;
    let spec = domain.spec();
    let fine = make_domain(DomainKind::Torus, spec.dim, &spec.lengths, n * spec.modes)?;
    let out = rescale_into(domain, &fine, wave, n, 0.0)?;
    Ok((fine, out))
}

/// Relative errors of `cos θ G = cos γ P` and `sin θ G - sin γ P + ω Q = 0`,
/// with `G = ∫|∇u|²`, `P = ∫|u|^{α+2}`, `Q = ∫|u|²`.
fn identity_errors(params: &Params, omega: f64, g: f64, p: f64, q: f64) -> (f64, f64) {
    let (st, ct) = params.theta().sin_cos();
    let (sg, cg) = params.gamma().sin_cos();
    let ratio = |num: f64, den: f64| if den > 0.0 { num.abs() / den } else { num.abs() };
    let real = ratio(ct * g - cg * p, ct * g + cg * p);
    let mut scale = st.abs() * g + sg.abs() * p + omega.abs() * q;
    if scale == 0.0 {
        scale = g + p;
    }
    let imag = ratio(st * g - sg * p + omega * q, scale);
    (real, imag)
}

fn potential(domain: &Domain, alpha: f64, v: &ComplexField) -> Result<f64, DomainError> {
    let vp = domain.to_physical(v)?;
    let p = alpha.max(0.0) + 2.0;
    Ok(domain.integrate(&vp.values.iter().map(|z| z.norm().powf(p)).collect::<Vec<_>>()))
}

pub fn identity_report(domain: &Domain, wave: &StandingWave) -> Result<IdentityReport, PostprocessError> {
    check_domain(domain, wave)?;
    let gradient = domain.gradient_norm_sq(&wave.u)?;
    let potential = potential(domain, wave.alpha, &wave.u)?;
    let mass = domain.norm_l2(&wave.u)?.powi(2);
    let nontrivial = mass.sqrt() >= NONTRIVIAL_NORM;
    let (real, imag) = if nontrivial {
        identity_errors(&wave.params, wave.omega, gradient, potential, mass)
    } else {
        (0.0, 0.0)
    };
    Ok(IdentityReport {
        identity_real_err: real,
        identity_imag_err: imag,
        gradient,
        potential,
        mass,
        nontrivial,
    })
}

/// One row of the branch table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointDiagnostics {
    pub alpha: f64,
    pub mu: f64,
    pub omega: f64,
    pub l2_norm_v: f64,
    /// `NaN` at `α = 0`, where `u` is undefined; may be `inf` for tiny `α`.
    pub l2_norm_u: f64,
    pub h1_norm_u: f64,
    pub residual_inf: f64,
    pub identity_real_err: f64,
    pub identity_imag_err: f64,
    pub newton_iters: usize,
    /// `ln ‖u‖_{L²}`; `NaN` at `α = 0`.
    pub log_l2_norm_u: f64,
    /// Largest constraint residual in the `L²` product.
    pub constraint_l2: f64,
    /// Largest constraint residual in the `(u,w) + (Δu,Δw)` product.
    pub constraint_h: f64,
}

/// Diagnostics of a branch point, evaluated on `v` with `μ` absorbed into
/// the identities (`e^{iθ}G = μ e^{iγ}P - iωQ`). For `α > 0` the relative
/// identity errors coincide with those of `u = μ^{1/α} v`, and nothing
/// overflows.
pub fn point_diagnostics(problem: &Problem<'_>, point: &BranchPoint) -> Result<PointDiagnostics, PostprocessError> {
    let domain = problem.domain;
    let q = domain.norm_l2(&point.v)?.powi(2);
    let g_v = domain.gradient_norm_sq(&point.v)?;
    let p_v = potential(domain, point.alpha, &point.v)?;
    let (real, imag) = identity_errors(&problem.params, point.omega, g_v, point.mu * p_v, q);
    let (l2u, h1u, logu) = if point.alpha > 0.0 && point.mu > 0.0 {
        let log_factor = point.mu.ln() / point.alpha;
        let f = log_factor.exp();
        (f * q.sqrt(), f * (q + g_v).sqrt(), log_factor + 0.5 * q.ln())
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let cr = problem.constraint_residuals(&point.v);
    Ok(PointDiagnostics {
        alpha: point.alpha,
        mu: point.mu,
        omega: point.omega,
        l2_norm_v: q.sqrt(),
        l2_norm_u: l2u,
        h1_norm_u: h1u,
        residual_inf: point.residual_inf,
        identity_real_err: real,
        identity_imag_err: imag,
        newton_iters: point.newton_iters,
        log_l2_norm_u: logu,
        constraint_l2: cr.l2[0].abs().max(cr.l2[1].abs()),
        constraint_h: cr.h[0].abs().max(cr.h[1].abs()),
    })
}

pub fn branch_diagnostics(problem: &Problem<'_>, table: &BranchTable) -> Result<Vec<PointDiagnostics>, PostprocessError> {
    table.points.iter().map(|p| point_diagnostics(problem, p)).collect()
}

#[cfg(test)]
mod tests;
