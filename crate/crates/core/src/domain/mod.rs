//! Discrete geometries: Dirichlet boxes in a sine basis, periodic tori in a
//! Fourier basis, and balls reduced to a radial finite-difference grid.
//!
//! All three expose the same surface: sampling, forward/inverse transforms,
//! the Laplacian, the real `L²` inner product `Re ∫ u v̄`, and the Dirichlet
//! energy `∫ |∇u|²`. A [`Domain`] is immutable once built and can be shared
//! across threads.

mod field;
mod params;
mod radial;

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use field::{ComplexField, Representation};
pub use params::Params;

use radial::RadialStencil;

const MIN_MODES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{name} = {value} must lie strictly between -pi/2 and pi/2")]
    AngleOutOfRange { name: &'static str, value: f64 },
    #[error("dimension {dim} is not supported for a {kind} domain")]
    InvalidDimension { kind: DomainKind, dim: usize },
    #[error("{kind} domain of dimension {dim} needs {expected} length(s), got {got}")]
    WrongLengthCount {
        kind: DomainKind,
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("lengths must be positive and finite, got {0}")]
    InvalidLength(f64),
    #[error("at least {MIN_MODES} modes/points per axis are required, got {0}")]
    TooFewModes(usize),
    #[error("field has {got} values but the domain has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Box,
    Ball,
    Torus,
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainKind::Box => "box",
            DomainKind::Ball => "ball",
            DomainKind::Torus => "torus",
        })
    }
}

/// Serializable description of a domain; this is the JSON sidecar written
/// next to every field dump.
///
/// For a box, `lengths` are the side lengths `ℓ_j`. For a torus they are the
/// same `ℓ_j` and the periods are `2ℓ_j`, so a box reflects onto the torus
/// with the same lengths. For a ball, `lengths = [R]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    #[serde(rename = "N")]
    pub dim: usize,
    pub lengths: Vec<f64>,
    #[serde(rename = "M")]
    pub modes: usize,
}

enum Transform {
    Sine(Vec<Arc<dyn Fft<f64>>>),
    Fourier {
        forward: Vec<Arc<dyn Fft<f64>>>,
        inverse: Vec<Arc<dyn Fft<f64>>>,
    },
    Radial(RadialStencil),
}

pub struct Domain {
    spec: DomainSpec,
    shape: Vec<usize>,
    coords: Vec<Vec<f64>>,
    weights: Vec<f64>,
    spectrum: Vec<f64>,
    transform: Transform,
    dense_laplacian: OnceLock<Vec<f64>>,
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain").field("spec", &self.spec).finish_non_exhaustive()
    }
}

/// Convenience constructor mirroring [`Domain::new`].
pub fn make_domain(
    kind: DomainKind,
    dim: usize,
    lengths: &[f64],
    modes: usize,
) -> Result<Domain, DomainError> {
    Domain::new(DomainSpec {
        kind,
        dim,
        lengths: lengths.to_vec(),
        modes,
    })
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Self, DomainError> {
        let DomainSpec {
            kind,
            dim,
            ref lengths,
            modes,
        } = spec;
        let dim_ok = match kind {
            DomainKind::Box | DomainKind::Torus => (1..=2).contains(&dim),
            DomainKind::Ball => (1..=3).contains(&dim),
        };
        if !dim_ok {
            return Err(DomainError::InvalidDimension { kind, dim });
        }
        let expected = if kind == DomainKind::Ball { 1 } else { dim };
        if lengths.len() != expected {
            return Err(DomainError::WrongLengthCount {
                kind,
                dim,
                expected,
                got: lengths.len(),
            });
        }
        if let Some(&bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(DomainError::InvalidLength(bad));
        }
        if modes < MIN_MODES {
            return Err(DomainError::TooFewModes(modes));
        }

        let mut planner = FftPlanner::new();
        let domain = match kind {
            DomainKind::Box => {
                let shape = vec![modes; dim];
                let coords: Vec<Vec<f64>> = lengths
                    .iter()
                    .map(|&l| {
                        let h = l / (modes + 1) as f64;
                        (1..=modes).map(|i| i as f64 * h).collect()
                    })
                    .collect();
                let cell: f64 = lengths.iter().map(|&l| l / (modes + 1) as f64).product();
                let axis_eigs: Vec<Vec<f64>> = lengths
                    .iter()
                    .map(|&l| (1..=modes).map(|k| (k as f64 * PI / l).powi(2)).collect())
                    .collect();
                let plans = (0..dim)
                    .map(|_| planner.plan_fft_forward(2 * (modes + 1)))
                    .collect();
                Self {
                    weights: vec![cell; modes.pow(dim as u32)],
                    spectrum: tensor_sum(&axis_eigs),
                    shape,
                    coords,
                    transform: Transform::Sine(plans),
                    spec,
                    dense_laplacian: OnceLock::new(),
                }
            }
            DomainKind::Torus => {
                let shape = vec![modes; dim];
                let coords: Vec<Vec<f64>> = lengths
                    .iter()
                    .map(|&l| {
                        let h = 2.0 * l / modes as f64;
                        (0..modes).map(|i| i as f64 * h).collect()
                    })
                    .collect();
                let cell: f64 = lengths.iter().map(|&l| 2.0 * l / modes as f64).product();
                let axis_eigs: Vec<Vec<f64>> = lengths
                    .iter()
                    .map(|&l| {
                        (0..modes)
                            .map(|i| (signed_wavenumber(i, modes) as f64 * PI / l).powi(2))
                            .collect()
                    })
                    .collect();
                let forward = (0..dim).map(|_| planner.plan_fft_forward(modes)).collect();
                let inverse = (0..dim).map(|_| planner.plan_fft_inverse(modes)).collect();
                Self {
                    weights: vec![cell; modes.pow(dim as u32)],
                    spectrum: tensor_sum(&axis_eigs),
                    shape,
                    coords,
                    transform: Transform::Fourier { forward, inverse },
                    spec,
                    dense_laplacian: OnceLock::new(),
                }
            }
            DomainKind::Ball => {
                let stencil = RadialStencil::new(dim, lengths[0], modes);
                Self {
                    shape: vec![modes],
                    coords: vec![stencil.nodes()],
                    weights: stencil.weights.clone(),
                    spectrum: Vec::new(),
                    transform: Transform::Radial(stencil),
                    spec,
                    dense_laplacian: OnceLock::new(),
                }
            }
        };
        Ok(domain)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn kind(&self) -> DomainKind {
        self.spec.kind
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Number of nodes (and of coefficients).
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Nodes per axis (a single radial axis for balls).
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn axis_coords(&self, axis: usize) -> &[f64] {
        &self.coords[axis]
    }

    /// Coordinates of node `index` (row-major, first axis slowest).
    pub fn node(&self, index: usize) -> Vec<f64> {
        unravel(index, &self.shape)
            .into_iter()
            .enumerate()
            .map(|(axis, i)| self.coords[axis][i])
            .collect()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `-Δ` eigenvalue of each coefficient slot (box and torus only).
    pub fn spectrum(&self) -> Option<&[f64]> {
        match self.transform {
            Transform::Radial(_) => None,
            _ => Some(&self.spectrum),
        }
    }

    /// Per-axis mode numbers of coefficient slot `index`: `k ≥ 1` for a box,
    /// the signed wavenumber for a torus.
    pub fn mode_numbers(&self, index: usize) -> Vec<i64> {
        let idx = unravel(index, &self.shape);
        match self.spec.kind {
            DomainKind::Box => idx.into_iter().map(|i| i as i64 + 1).collect(),
            DomainKind::Torus => idx
                .into_iter()
                .map(|i| signed_wavenumber(i, self.spec.modes))
                .collect(),
            DomainKind::Ball => vec![idx[0] as i64],
        }
    }

    /// Coefficient slot of the given per-axis box mode numbers (`k_j ≥ 1`).
    pub fn box_mode_index(&self, modes: &[usize]) -> Option<usize> {
        if self.spec.kind != DomainKind::Box || modes.len() != self.shape.len() {
            return None;
        }
        let mut index = 0;
        for (&k, &n) in modes.iter().zip(&self.shape) {
            if k == 0 || k > n {
                return None;
            }
            index = index * n + (k - 1);
        }
        Some(index)
    }

    pub fn volume(&self) -> f64 {
        match self.spec.kind {
            DomainKind::Box => self.spec.lengths.iter().product(),
            DomainKind::Torus => self.spec.lengths.iter().map(|l| 2.0 * l).product(),
            DomainKind::Ball => {
                let n = self.spec.dim;
                radial::sphere_measure(n) * self.spec.lengths[0].powi(n as i32) / n as f64
            }
        }
    }

    pub fn check(&self, field: &ComplexField) -> Result<(), DomainError> {
        if field.len() != self.len() {
            return Err(DomainError::DimensionMismatch {
                expected: self.len(),
                got: field.len(),
            });
        }
        Ok(())
    }

    pub fn sample(&self, f: impl Fn(&[f64]) -> Complex64) -> ComplexField {
        ComplexField::physical((0..self.len()).map(|i| f(&self.node(i))).collect())
    }

    pub fn sample_real(&self, f: impl Fn(&[f64]) -> f64) -> ComplexField {
        self.sample(|x| Complex64::new(f(x), 0.0))
    }

    /// Quadrature of nodal values. For box and ball the boundary nodes,
    /// where fields vanish, are omitted.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    /// Quadrature of an arbitrary function on the closed domain, boundary
    /// nodes included (trapezoid on boxes, shell rule on balls). Exact for
    /// constants.
    pub fn integrate_fn(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        match &self.transform {
            Transform::Radial(stencil) => {
                let interior: f64 = (0..stencil.len())
                    .map(|i| stencil.weights[i] * f(&[i as f64 * stencil.h]))
                    .sum();
                interior + stencil.wall_weight * f(&[stencil.radius])
            }
            Transform::Fourier { .. } => (0..self.len())
                .map(|i| self.weights[i] * f(&self.node(i)))
                .sum(),
            Transform::Sine(_) => {
                let m = self.spec.modes;
                let axes: Vec<Vec<(f64, f64)>> = self
                    .spec
                    .lengths
                    .iter()
                    .map(|&l| {
                        let h = l / (m + 1) as f64;
                        (0..=m + 1)
                            .map(|i| {
                                let w = if i == 0 || i == m + 1 { 0.5 * h } else { h };
                                (i as f64 * h, w)
                            })
                            .collect()
                    })
                    .collect();
                let shape: Vec<usize> = axes.iter().map(Vec::len).collect();
                let total: usize = shape.iter().product();
                (0..total)
                    .map(|flat| {
                        let idx = unravel(flat, &shape);
                        let mut w = 1.0;
                        let x: Vec<f64> = idx
                            .iter()
                            .enumerate()
                            .map(|(a, &i)| {
                                w *= axes[a][i].1;
                                axes[a][i].0
                            })
                            .collect();
                        w * f(&x)
                    })
                    .sum()
            }
        }
    }

    pub fn to_coefficients(&self, field: &ComplexField) -> Result<ComplexField, DomainError> {
        self.check(field)?;
        if field.repr == Representation::Coefficient {
            return Ok(field.clone());
        }
        let mut values = field.values.clone();
        match &self.transform {
            Transform::Sine(plans) => {
                let scale = 2.0 / (self.spec.modes + 1) as f64;
                for (axis, plan) in plans.iter().enumerate() {
                    for_each_line(&mut values, &self.shape, axis, |line| {
                        sine_sum(line, plan.as_ref(), scale)
                    });
                }
            }
            Transform::Fourier { forward, .. } => {
                let scale = 1.0 / self.spec.modes as f64;
                for (axis, plan) in forward.iter().enumerate() {
                    for_each_line(&mut values, &self.shape, axis, |line| {
                        plan.process(line);
                        line.iter_mut().for_each(|z| *z *= scale);
                    });
                }
            }
            Transform::Radial(_) => {}
        }
        Ok(ComplexField::coefficients(values))
    }

    pub fn to_physical(&self, field: &ComplexField) -> Result<ComplexField, DomainError> {
        self.check(field)?;
        if field.repr == Representation::Physical {
            return Ok(field.clone());
        }
        let mut values = field.values.clone();
        match &self.transform {
            Transform::Sine(plans) => {
                for (axis, plan) in plans.iter().enumerate() {
                    for_each_line(&mut values, &self.shape, axis, |line| {
                        sine_sum(line, plan.as_ref(), 1.0)
                    });
                }
            }
            Transform::Fourier { inverse, .. } => {
                for (axis, plan) in inverse.iter().enumerate() {
                    for_each_line(&mut values, &self.shape, axis, |line| plan.process(line));
                }
            }
            Transform::Radial(_) => {}
        }
        Ok(ComplexField::physical(values))
    }

    /// `Δ field`, returned in the same representation as the input.
    pub fn laplacian(&self, field: &ComplexField) -> Result<ComplexField, DomainError> {
        self.check(field)?;
        match &self.transform {
            Transform::Radial(stencil) => {
                let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
                stencil.apply(&field.values, &mut out);
                Ok(ComplexField {
                    values: out,
                    repr: field.repr,
                })
            }
            _ => {
                let mut coeffs = self.to_coefficients(field)?;
                for (c, lam) in coeffs.values.iter_mut().zip(&self.spectrum) {
                    *c *= -lam;
                }
                match field.repr {
                    Representation::Coefficient => Ok(coeffs),
                    Representation::Physical => self.to_physical(&coeffs),
                }
            }
        }
    }

    /// `(u, v) = Re ∫ u v̄`.
    pub fn inner_product(&self, u: &ComplexField, v: &ComplexField) -> Result<f64, DomainError> {
        let u = self.to_physical(u)?;
        let v = self.to_physical(v)?;
        Ok(u.values
            .iter()
            .zip(&v.values)
            .zip(&self.weights)
            .map(|((a, b), w)| w * (a * b.conj()).re)
            .sum())
    }

    /// `∫ a b̄` as a complex number.
    pub fn complex_inner(&self, a: &ComplexField, b: &ComplexField) -> Result<Complex64, DomainError> {
        let a = self.to_physical(a)?;
        let b = self.to_physical(b)?;
        Ok(a.values
            .iter()
            .zip(&b.values)
            .zip(&self.weights)
            .map(|((x, y), w)| x * y.conj() * *w)
            .sum())
    }

    pub fn norm_l2(&self, u: &ComplexField) -> Result<f64, DomainError> {
        Ok(self.inner_product(u, u)?.max(0.0).sqrt())
    }

    /// `∫ |∇u|²`, as a Parseval sum `Σ λ_k |û_k|² ‖e_k‖²` on box and torus
    /// and as the discrete Dirichlet form on the radial grid.
    pub fn gradient_norm_sq(&self, u: &ComplexField) -> Result<f64, DomainError> {
        self.check(u)?;
        match &self.transform {
            Transform::Radial(stencil) => {
                let u = self.to_physical(u)?;
                Ok(stencil.dirichlet_energy(&u.values))
            }
            Transform::Sine(_) => {
                let c = self.to_coefficients(u)?;
                let basis_norm: f64 = self.spec.lengths.iter().map(|l| 0.5 * l).product();
                Ok(basis_norm * weighted_power(&c.values, &self.spectrum))
            }
            Transform::Fourier { .. } => {
                let c = self.to_coefficients(u)?;
                Ok(self.volume() * weighted_power(&c.values, &self.spectrum))
            }
        }
    }

    /// Dense row-major matrix of `Δ` acting on real nodal values. Built on
    /// first use and cached.
    pub fn laplacian_matrix(&self) -> &[f64] {
        self.dense_laplacian.get_or_init(|| {
            let n = self.len();
            let mut dense = vec![0.0; n * n];
            let mut unit = ComplexField::zeros(n, Representation::Physical);
            for j in 0..n {
                unit.values[j] = Complex64::new(1.0, 0.0);
                let col = self.laplacian(&unit).expect("length matches");
                for i in 0..n {
                    dense[i * n + j] = col.values[i].re;
                }
                unit.values[j] = Complex64::new(0.0, 0.0);
            }
            dense
        })
    }

    pub(crate) fn radial_stencil(&self) -> Option<&RadialStencil> {
        match &self.transform {
            Transform::Radial(s) => Some(s),
            _ => None,
        }
    }
}

fn weighted_power(c: &[Complex64], spectrum: &[f64]) -> f64 {
    c.iter().zip(spectrum).map(|(z, lam)| lam * z.norm_sqr()).sum()
}

fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// `tensor_sum([a, b])[i*len(b) + j] = a[i] + b[j]`
fn tensor_sum(axes: &[Vec<f64>]) -> Vec<f64> {
    axes.iter().fold(vec![0.0], |acc, axis| {
        acc.iter()
            .flat_map(|&s| axis.iter().map(move |&x| s + x))
            .collect()
    })
}

pub(crate) fn unravel(mut index: usize, shape: &[usize]) -> Vec<usize> {
    let mut out = vec![0; shape.len()];
    for (slot, &n) in out.iter_mut().zip(shape).rev() {
        *slot = index % n;
        index /= n;
    }
    out
}

pub(crate) fn for_each_line(
    values: &mut [Complex64],
    shape: &[usize],
    axis: usize,
    mut f: impl FnMut(&mut [Complex64]),
) {
    let n = shape[axis];
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for (i, slot) in line.iter_mut().enumerate() {
                *slot = values[base + i * stride];
            }
            f(&mut line);
            for (i, slot) in line.iter().enumerate() {
                values[base + i * stride] = *slot;
            }
        }
    }
}

/// In place `line[k] ← scale · Σ_j line[j] sin(π (k+1)(j+1) / (M+1))`,
/// through an FFT of the odd extension of length `2(M+1)`.
fn sine_sum(line: &mut [Complex64], plan: &dyn Fft<f64>, scale: f64) {
    let m = line.len();
    let n = 2 * (m + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (j, &z) in line.iter().enumerate() {
        buf[j + 1] = z;
        buf[n - j - 1] = -z;
    }
    plan.process(&mut buf);
    let factor = Complex64::new(0.0, 0.5 * scale);
    for (k, slot) in line.iter_mut().enumerate() {
        *slot = factor * buf[k + 1];
    }
}
