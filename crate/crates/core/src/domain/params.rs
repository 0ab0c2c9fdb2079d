use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DomainError;

/// The two angles of the equation `φ_t = e^{iθ} Δφ + e^{iγ} |φ|^α φ`.
///
/// Both angles are restricted to the open interval `(-π/2, π/2)`, which is
/// exactly the regime `cos θ > 0, cos γ > 0` where standing waves exist.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct Params {
    theta: f64,
    gamma: f64,
}

#[derive(Deserialize)]
struct RawParams {
    theta: f64,
    gamma: f64,
}

impl TryFrom<RawParams> for Params {
    type Error = DomainError;

    fn try_from(raw: RawParams) -> Result<Self, Self::Error> {
        Params::new(raw.theta, raw.gamma)
    }
}

impl Params {
    pub fn new(theta: f64, gamma: f64) -> Result<Self, DomainError> {
        for (name, value) in [("theta", theta), ("gamma", gamma)] {
            if !value.is_finite() || value <= -FRAC_PI_2 || value >= FRAC_PI_2 {
                return Err(DomainError::AngleOutOfRange { name, value });
            }
        }
        let params = Self { theta, gamma };
        debug_assert!(params.theta.cos() > 0.0 && params.gamma.cos() > 0.0);
        Ok(params)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `e^{iθ}`
    pub fn diffusion_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.theta)
    }

    /// `e^{iγ}`
    pub fn reaction_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.gamma)
    }

    /// `e^{i(γ-θ)}`, the coefficient of the nonlinearity once the equation
    /// is divided by `e^{iθ}`.
    pub fn relative_phase(&self) -> Complex64 {
        Complex64::from_polar(1.0, self.gamma - self.theta)
    }

    /// `-i e^{-iθ}`, the coefficient multiplying `ω v`.
    pub fn frequency_phase(&self) -> Complex64 {
        -Complex64::i() * Complex64::from_polar(1.0, -self.theta)
    }

    /// `λ* = μ e^{i(γ-θ)} - i ω e^{-iθ}`: the effective (complex) eigenvalue
    /// of the problem at `α = 0`.
    pub fn effective_eigenvalue(&self, mu: f64, omega: f64) -> Complex64 {
        self.relative_phase() * mu + self.frequency_phase() * omega
    }

    /// The real 2x2 matrix of `(a, b) ↦ a e^{i(γ-θ)} - i b e^{-iθ}`, acting
    /// on `(a, b)` and returning `(Re, Im)`.
    pub fn parameter_map(&self) -> [[f64; 2]; 2] {
        let e = self.relative_phase();
        let d = self.frequency_phase();
        [[e.re, d.re], [e.im, d.im]]
    }
}
