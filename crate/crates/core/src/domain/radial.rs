use std::f64::consts::PI;

use num_complex::Complex64;

/// Conservative second-order stencil for `u'' + (N-1)/r u'` on `[0, R)`.
///
/// Nodes sit at `r_i = i h` with `h = R / M`, `i = 0..M`; `u(R) = 0` is
/// eliminated. Each node owns the shell `[r_i - h/2, r_i + h/2] ∩ [0, R]`,
/// so the origin node carries the ball of radius `h/2` and the flux through
/// `r = 0` vanishes (the ghost-node condition `u'(0) = 0`).
#[derive(Clone, Debug)]
pub(crate) struct RadialStencil {
    pub radius: f64,
    pub h: f64,
    /// shell measure of each node, including the unit-sphere surface factor
    pub weights: Vec<f64>,
    /// `flux[i]` couples node `i` and `i + 1`; `flux[M-1]` couples to the wall
    pub flux: Vec<f64>,
    /// measure of the half shell `[R - h/2, R]` owned by the wall node
    pub wall_weight: f64,
}

pub(crate) fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("radial dimension checked at construction"),
    }
}

impl RadialStencil {
    pub fn new(dim: usize, radius: f64, points: usize) -> Self {
        let h = radius / points as f64;
        let s = sphere_measure(dim);
        let nd = dim as i32;
        let shell = |a: f64, b: f64| s * (b.powi(nd) - a.powi(nd)) / dim as f64;
        let weights = (0..points)
            .map(|i| {
                let r = i as f64 * h;
                shell((r - 0.5 * h).max(0.0), r + 0.5 * h)
            })
            .collect();
        let flux = (0..points)
            .map(|i| s * ((i as f64 + 0.5) * h).powi(nd - 1) / h)
            .collect();
        let wall_weight = shell(radius - 0.5 * h, radius);
        Self {
            radius,
            h,
            weights,
            flux,
            wall_weight,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| i as f64 * self.h).collect()
    }

    pub fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let n = self.len();
        for i in 0..n {
            let right = if i + 1 < n { u[i + 1] } else { Complex64::new(0.0, 0.0) };
            let mut acc = self.flux[i] * (right - u[i]);
            if i > 0 {
                acc -= self.flux[i - 1] * (u[i] - u[i - 1]);
            }
            out[i] = acc / self.weights[i];
        }
    }

    /// Discrete Dirichlet energy `Σ flux_i |u_{i+1} - u_i|²`.
    pub fn dirichlet_energy(&self, u: &[Complex64]) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let right = if i + 1 < n { u[i + 1] } else { Complex64::new(0.0, 0.0) };
                self.flux[i] * (right - u[i]).norm_sqr()
            })
            .sum()
    }

    /// Diagonal and off-diagonal of `-K`, where `W Δ = K` and `W` holds the
    /// shell weights.
    pub fn negative_weighted(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let diag = (0..n)
            .map(|i| if i > 0 { self.flux[i - 1] } else { 0.0 } + self.flux[i])
            .collect();
        let off = (0..n.saturating_sub(1)).map(|i| -self.flux[i]).collect();
        (diag, off)
    }

    /// Diagonal and off-diagonal of the symmetric matrix `W^{-1/2} (-K) W^{-1/2}`
    /// similar to `-Δ`.
    pub fn symmetric_negative(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let diag = (0..n)
            .map(|i| {
                let left = if i > 0 { self.flux[i - 1] } else { 0.0 };
                (left + self.flux[i]) / self.weights[i]
            })
            .collect();
        let off = (0..n.saturating_sub(1))
            .map(|i| -self.flux[i] / (self.weights[i] * self.weights[i + 1]).sqrt())
            .collect();
        (diag, off)
    }
}
