//! Eigenpairs of the Dirichlet (or periodic) `-Δ`, normalized to unit `L²`
//! norm, together with a simplicity check.
//!
//! Box and torus pairs come straight from the basis. Radial ball pairs come
//! from the symmetric form of the radial stencil.

mod tridiagonal;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{ComplexField, Domain, DomainError, DomainKind, Representation};

/// Relative gap below which two eigenvalues are treated as equal.
pub const SIMPLICITY_GAP: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EigenError {
    #[error("requested {count} eigenpairs; allowed range is 1..={max}")]
    InvalidCount { count: usize, max: usize },
    #[error("inverse iteration did not converge for eigenpair {index}")]
    NoConvergence { index: usize },
    #[error("eigenvalue {lambda} is degenerate (nearest other eigenvalue at distance {gap})")]
    DegenerateEigenvalue { lambda: f64, gap: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: f64,
    /// Unit-norm eigenvector, held in the representation where it is exact:
    /// coefficients for box and torus, nodal values for the ball.
    pub phi: ComplexField,
    /// 1-based position in the ascending spectrum.
    pub index: usize,
    /// Distance to the nearest other eigenvalue.
    pub gap: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SimplicityCertificate {
    pub lambda: f64,
    pub gap: f64,
    pub relative_gap: f64,
}

/// The lowest `count` eigenpairs of `-Δ` on `domain`, ascending.
pub fn eigenpairs(domain: &Domain, count: usize) -> Result<Vec<EigenPair>, EigenError> {
    let max = domain.spec().modes / 4;
    if count == 0 || count > max {
        return Err(EigenError::InvalidCount { count, max });
    }
    match domain.kind() {
        DomainKind::Box | DomainKind::Torus => Ok(analytic_pairs(domain, count)),
        DomainKind::Ball => radial_pairs(domain, count),
    }
}

/// The `index`-th (1-based) eigenpair.
pub fn eigenpair(domain: &Domain, index: usize) -> Result<EigenPair, EigenError> {
    let mut pairs = eigenpairs(domain, index)?;
    Ok(pairs.pop().expect("count >= 1"))
}

/// Certifies that no other eigenvalue of `domain` lies within relative
/// distance [`SIMPLICITY_GAP`] of `pair.lambda`.
pub fn check_simple(domain: &Domain, pair: &EigenPair) -> Result<SimplicityCertificate, EigenError> {
    let lambda = pair.lambda;
    let window = SIMPLICITY_GAP * lambda.abs().max(f64::MIN_POSITIVE);
    let (neighbours, gap) = match domain.kind() {
        DomainKind::Ball => {
            let stencil = domain.radial_stencil().expect("ball has a radial stencil");
            let (d, e) = stencil.symmetric_negative();
            let pm = tridiagonal::pivmin(&e);
            let inside = tridiagonal::sturm_count(&d, &e, lambda + window, pm)
                - tridiagonal::sturm_count(&d, &e, lambda - window, pm);
            (inside.saturating_sub(1), pair.gap)
        }
        _ => {
            let spectrum = domain.spectrum().expect("analytic spectrum");
            let mut close = 0usize;
            let mut gap = f64::INFINITY;
            let mut own_seen = false;
            for &mu in spectrum {
                let dist = (mu - lambda).abs();
                if dist == 0.0 && !own_seen {
                    own_seen = true;
                    continue;
                }
                gap = gap.min(dist);
                if dist <= window {
                    close += 1;
                }
            }
            (close, gap)
        }
    };
    if neighbours > 0 || gap < window {
        return Err(EigenError::DegenerateEigenvalue { lambda, gap });
    }
    Ok(SimplicityCertificate {
        lambda,
        gap,
        relative_gap: gap / lambda,
    })
}

fn analytic_pairs(domain: &Domain, count: usize) -> Vec<EigenPair> {
    let spectrum = domain.spectrum().expect("analytic spectrum");
    let mut order: Vec<usize> = (0..spectrum.len()).collect();
    order.sort_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b]).then(a.cmp(&b)));
    let sorted: Vec<f64> = order.iter().map(|&s| spectrum[s]).collect();

    (0..count)
        .map(|i| {
            let lambda = sorted[i];
            let below = if i > 0 { lambda - sorted[i - 1] } else { f64::INFINITY };
            let above = sorted.get(i + 1).map_or(f64::INFINITY, |&x| x - lambda);
            let coeffs = match domain.kind() {
                DomainKind::Box => box_mode(domain, order[i]),
                _ => torus_mode(domain, order[i]),
            };
            let phi = sign_normalize(domain, coeffs);
            EigenPair {
                lambda,
                phi,
                index: i + 1,
                gap: below.min(above),
            }
        })
        .collect()
}

fn box_mode(domain: &Domain, slot: usize) -> ComplexField {
    let amplitude: f64 = domain.spec().lengths.iter().map(|l| (2.0 / l).sqrt()).product();
    let mut c = ComplexField::zeros(domain.len(), Representation::Coefficient);
    c.values[slot] = Complex64::new(amplitude, 0.0);
    c
}

/// Real form of a Fourier mode: `cos(m·x)` for the canonical member of a
/// `±m` pair, `sin(m·x)` for its partner, the bare mode when it is its own
/// conjugate (zero or Nyquist in every axis).
fn torus_mode(domain: &Domain, slot: usize) -> ComplexField {
    let shape = domain.shape();
    let idx = crate::domain::unravel(slot, shape);
    let partner = idx
        .iter()
        .zip(shape)
        .fold(0, |acc, (&i, &n)| acc * n + (n - i) % n);
    let vol = domain.volume();
    let mut c = ComplexField::zeros(domain.len(), Representation::Coefficient);
    if partner == slot {
        c.values[slot] = Complex64::new(vol.sqrt().recip(), 0.0);
    } else {
        let half = (2.0 / vol).sqrt() * 0.5;
        if slot < partner {
            c.values[slot] = Complex64::new(half, 0.0);
            c.values[partner] = Complex64::new(half, 0.0);
        } else {
            c.values[partner] = Complex64::new(0.0, half);
            c.values[slot] = Complex64::new(0.0, -half);
        }
    }
    c
}

/// Flips the sign so that the largest physical entry (first one, in node
/// order, within rounding of the maximum) is positive.
fn sign_normalize(domain: &Domain, phi: ComplexField) -> ComplexField {
    let phys = domain.to_physical(&phi).expect("length matches");
    let max = phys.max_modulus();
    let lead = phys
        .values
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-12))
        .copied()
        .unwrap_or(Complex64::new(1.0, 0.0));
    if lead.re < 0.0 {
        phi.scale_real(-1.0)
    } else {
        phi
    }
}

fn radial_pairs(domain: &Domain, count: usize) -> Result<Vec<EigenPair>, EigenError> {
    let stencil = domain.radial_stencil().expect("ball has a radial stencil");
    let (d, e) = stencil.symmetric_negative();
    let lambdas: Vec<f64> = (0..=count)
        .map(|k| tridiagonal::kth_eigenvalue(&d, &e, k))
        .collect();
    // the pencil (-K, W) gives φ directly in nodal values, keeping the
    // backward error row-relative near the small origin shell
    let (kd, ke) = stencil.negative_weighted();
    (0..count)
        .map(|k| {
            let (x, rq) = tridiagonal::inverse_iteration(&kd, &ke, &stencil.weights, lambdas[k], 1e-13, 8)
                .ok_or(EigenError::NoConvergence { index: k + 1 })?;
            let values: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let below = if k > 0 { rq - lambdas[k - 1] } else { f64::INFINITY };
            let above = lambdas[k + 1] - rq;
            let phi = sign_normalize(domain, ComplexField::coefficients(values));
            Ok(EigenPair {
                lambda: rq,
                phi,
                index: k + 1,
                gap: below.min(above),
            })
        })
        .collect()
}
