//! Continuation in `α` of solutions `(μ, ω, v)` of
//! `Δv + μ e^{i(γ-θ)} g(α, v) - i ω e^{-iθ} v = 0`, with `v = φ + ṽ` and
//! `ṽ` orthogonal to `ℂφ`, starting from the linear eigenpair at `α = 0`.
//!
//! States are stored in coefficient representation, where the Laplacian is
//! exact; nonlinear terms are evaluated on the physical grid.

mod branch;
mod linear;
mod newton;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{ComplexField, Domain, DomainError, DomainKind, Params};
use crate::eigen::{check_simple, EigenError, EigenPair};
use crate::nonlinearity::{g, h, AlphaCap, NonlinearityError};

pub use branch::{continue_branch, BranchOptions, BranchTable, StopReason};
pub use linear::{BorderedSolution, LinearSolver};
pub use newton::NewtonOptions;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContinuationError {
    #[error("Newton did not converge at alpha = {alpha} ({iters} iterations, residual {residual:e})")]
    NoConvergence { alpha: f64, iters: usize, residual: f64 },
    #[error("bordered system is singular at alpha = {alpha} (pivot ratio {pivot_ratio:e})")]
    SingularBordered { alpha: f64, pivot_ratio: f64 },
    #[error("invalid alpha grid: {0}")]
    InvalidGrid(String),
    #[error("continuation is not supported on a {0} domain")]
    UnsupportedDomain(DomainKind),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Nonlinearity(#[from] NonlinearityError),
}

/// One state `(α, μ, ω, v)` on the branch.
#[derive(Clone, Debug)]
pub struct BranchPoint {
    pub alpha: f64,
    pub mu: f64,
    pub omega: f64,
    /// `φ + ṽ`, coefficient representation.
    pub v: ComplexField,
    pub residual_inf: f64,
    pub newton_iters: usize,
}

/// `(μ₀, ω₀)` with `μ₀ e^{i(γ-θ)} - i ω₀ e^{-iθ} = λ`, that is
/// `μ₀ = λ cos θ / cos γ` and `ω₀ = μ₀ sin(γ-θ) / cos θ = λ sin(γ-θ) / cos γ`.
pub fn initial_point(params: &Params, lambda: f64) -> (f64, f64) {
    let (theta, gamma) = (params.theta(), params.gamma());
    let mu0 = lambda * theta.cos() / gamma.cos();
    let omega0 = lambda * (gamma - theta).sin() / gamma.cos();
    (mu0, omega0)
}

/// Constraint residuals `(⟨ṽ, φ⟩, ⟨ṽ, iφ⟩)` in two metrics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConstraintResiduals {
    pub l2: [f64; 2],
    /// The same pair with `(u, w) + (Δu, Δw)` as inner product.
    pub h: [f64; 2],
}

/// Everything fixed along one branch: the grid, the angles, the seed
/// eigenpair and the exponent cap.
#[derive(Clone, Copy, Debug)]
pub struct Problem<'a> {
    pub domain: &'a Domain,
    pub params: Params,
    pub pair: &'a EigenPair,
    pub cap: AlphaCap,
}

impl<'a> Problem<'a> {
    /// Validates that the seed eigenvalue is simple and the domain supports
    /// continuation. Torus spectra are degenerate away from the constant
    /// mode, so tori are rejected; waves on a torus come from extending a
    /// box solution.
    pub fn new(
        domain: &'a Domain,
        params: Params,
        pair: &'a EigenPair,
        cap: AlphaCap,
    ) -> Result<Self, ContinuationError> {
        if domain.kind() == DomainKind::Torus {
            return Err(ContinuationError::UnsupportedDomain(DomainKind::Torus));
        }
        domain.check(&pair.phi)?;
        check_simple(domain, pair)?;
        Ok(Self {
            domain,
            params,
            pair,
            cap,
        })
    }

    pub fn phi(&self) -> &ComplexField {
        &self.pair.phi
    }

    pub fn lambda(&self) -> f64 {
        self.pair.lambda
    }

    /// The exact solution at `α = 0`.
    pub fn seed(&self) -> BranchPoint {
        let (mu, omega) = initial_point(&self.params, self.lambda());
        BranchPoint {
            alpha: 0.0,
            mu,
            omega,
            v: self.coefficients(self.phi()),
            residual_inf: f64::NAN,
            newton_iters: 0,
        }
    }

    pub(crate) fn coefficients(&self, f: &ComplexField) -> ComplexField {
        self.domain.to_coefficients(f).expect("field belongs to the domain")
    }

    pub(crate) fn physical(&self, f: &ComplexField) -> ComplexField {
        self.domain.to_physical(f).expect("field belongs to the domain")
    }

    fn lap_physical(&self, v: &ComplexField) -> Result<(ComplexField, ComplexField), ContinuationError> {
        self.domain.check(v)?;
        let coeffs = self.coefficients(v);
        let lap = self.domain.laplacian(&coeffs)?;
        Ok((self.physical(&lap), self.physical(&coeffs)))
    }

    /// `F(α, μ, ω, v)` on the physical grid.
    pub fn residual(&self, p: &BranchPoint) -> Result<ComplexField, ContinuationError> {
        self.cap.check(p.alpha)?;
        let (lap, vp) = self.lap_physical(&p.v)?;
        let nl = self.params.relative_phase() * p.mu;
        let fr = self.params.frequency_phase() * p.omega;
        Ok(ComplexField::physical(
            lap.values
                .iter()
                .zip(&vp.values)
                .map(|(&l, &z)| l + nl * g(p.alpha, z) + fr * z)
                .collect(),
        ))
    }

    /// `a ∂_μF + b ∂_ωF + ∂_ṽF · w` at `p`, on the physical grid.
    pub fn jacobian_apply(
        &self,
        p: &BranchPoint,
        a: f64,
        b: f64,
        w: &ComplexField,
    ) -> Result<ComplexField, ContinuationError> {
        self.cap.check(p.alpha)?;
        self.domain.check(&p.v)?;
        let (lap, wp) = self.lap_physical(w)?;
        let vp = self.physical(&p.v);
        let e = self.params.relative_phase();
        let d = self.params.frequency_phase();
        Ok(ComplexField::physical(
            (0..wp.len())
                .map(|i| {
                    let (z, u) = (vp.values[i], wp.values[i]);
                    lap.values[i]
                        + e * p.mu * h(p.alpha, z, u)
                        + d * p.omega * u
                        + e * a * g(p.alpha, z)
                        + d * b * z
                })
                .collect(),
        ))
    }

    /// Removes the `ℂφ` component of `ṽ = v - φ`.
    pub fn reproject(&self, v: &ComplexField) -> ComplexField {
        let phi = self.coefficients(self.phi());
        let v = self.coefficients(v);
        let tilde = v.sub(&phi);
        let c = self.domain.complex_inner(&tilde, &phi).expect("same domain");
        phi.add(&tilde.axpy(-c, &phi))
    }

    pub fn constraint_residuals(&self, v: &ComplexField) -> ConstraintResiduals {
        let phi = self.coefficients(self.phi());
        let tilde = self.coefficients(v).sub(&phi);
        let l2 = self.domain.complex_inner(&tilde, &phi).expect("same domain");
        let lt = self.domain.laplacian(&tilde).expect("same domain");
        let lp = self.domain.laplacian(&phi).expect("same domain");
        let h = l2 + self.domain.complex_inner(&lt, &lp).expect("same domain");
        ConstraintResiduals {
            l2: [l2.re, l2.im],
            h: [h.re, h.im],
        }
    }

    /// `v + w` as a coefficient field, whatever representation `w` is in.
    pub(crate) fn add_update(&self, v: &ComplexField, w: &ComplexField) -> ComplexField {
        self.coefficients(v).add(&self.coefficients(w))
    }
}

fn cmat(c: Complex64) -> [[f64; 2]; 2] {
    [[c.re, -c.im], [c.im, c.re]]
}

fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

#[cfg(test)]
mod tests;
