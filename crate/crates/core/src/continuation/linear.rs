//! The bordered real-linear system
//!
//! ```text
//! a ∂_μF + b ∂_ωF + ∂_ṽF · w = f
//!                    ⟨w, φ⟩ = c₁
//!                   ⟨w, iφ⟩ = c₂
//! ```
//!
//! with unknowns stacked as `[Re w; Im w; a; b]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{cmat, mat_mul, BranchPoint, ContinuationError, Problem};
use crate::domain::{ComplexField, DomainKind};
use crate::nonlinearity::{g, h_block};

/// Pivot ratio `min |U_ii| / max |U_ii|` below which the LU factorization is
/// reported as singular.
const PIVOT_RATIO_MIN: f64 = 1e-14;
const GMRES_RESTART: usize = 80;
const GMRES_MAX_ITERS: usize = 1600;
const GMRES_RTOL: f64 = 1e-12;
/// Above this many nodes `Auto` switches from dense LU to GMRES.
const DENSE_NODE_LIMIT: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearSolver {
    /// Dense LU up to a moderate grid size, GMRES beyond (box only).
    #[default]
    Auto,
    Dense,
    /// Matrix-free GMRES preconditioned by the exact inverse of the seed
    /// operator `A(a, b, w) = a e^{i(γ-θ)}φ - i b e^{-iθ}φ + Δw + λw`.
    Gmres,
}

#[derive(Clone, Debug)]
pub struct BorderedSolution {
    pub a: f64,
    pub b: f64,
    pub w: ComplexField,
}

impl Problem<'_> {
    /// The `(2n + 2) × (2n + 2)` bordered matrix at `p`, acting on physical
    /// nodal values of `w`.
    pub fn bordered_matrix(&self, p: &BranchPoint) -> Result<DMatrix<f64>, ContinuationError> {
        self.cap.check(p.alpha)?;
        self.domain.check(&p.v)?;
        let n = self.domain.len();
        let m = 2 * n + 2;
        let lap = self.domain.laplacian_matrix();
        let vp = self.physical(&p.v);
        let phi = self.physical(self.phi());
        let q = self.domain.weights();
        let e = self.params.relative_phase();
        let d = self.params.frequency_phase();
        let scaled = cmat(e * p.mu);
        let freq = cmat(d * p.omega);
        let mut mat = DMatrix::<f64>::zeros(m, m);
        for i in 0..n {
            for j in 0..n {
                let l = lap[i * n + j];
                if l != 0.0 {
                    mat[(i, j)] = l;
                    mat[(n + i, n + j)] = l;
                }
            }
            let z = vp.values[i];
            let hb = mat_mul(scaled, h_block(p.alpha, z));
            mat[(i, i)] += hb[0][0] + freq[0][0];
            mat[(i, n + i)] += hb[0][1] + freq[0][1];
            mat[(n + i, i)] += hb[1][0] + freq[1][0];
            mat[(n + i, n + i)] += hb[1][1] + freq[1][1];
            let dmu = e * g(p.alpha, z);
            let dom = d * z;
            mat[(i, 2 * n)] = dmu.re;
            mat[(n + i, 2 * n)] = dmu.im;
            mat[(i, 2 * n + 1)] = dom.re;
            mat[(n + i, 2 * n + 1)] = dom.im;
            let f = phi.values[i];
            mat[(2 * n, i)] = q[i] * f.re;
            mat[(2 * n, n + i)] = q[i] * f.im;
            mat[(2 * n + 1, i)] = -q[i] * f.im;
            mat[(2 * n + 1, n + i)] = q[i] * f.re;
        }
        Ok(mat)
    }

    /// Solves the bordered system at `p` for right-hand side `(f, c)`, `f` on
    /// any representation.
    pub fn solve_bordered(
        &self,
        p: &BranchPoint,
        f: &ComplexField,
        c: [f64; 2],
        solver: LinearSolver,
    ) -> Result<BorderedSolution, ContinuationError> {
        let use_gmres = self.domain.kind() == DomainKind::Box
            && match solver {
                LinearSolver::Dense => false,
                LinearSolver::Gmres => true,
                LinearSolver::Auto => self.domain.len() > DENSE_NODE_LIMIT,
            };
        if use_gmres {
            self.solve_gmres(p, f, c)
        } else {
            self.solve_dense(p, f, c)
        }
    }

    fn solve_dense(
        &self,
        p: &BranchPoint,
        f: &ComplexField,
        c: [f64; 2],
    ) -> Result<BorderedSolution, ContinuationError> {
        let n = self.domain.len();
        let mat = self.bordered_matrix(p)?;
        let lu = mat.lu();
        let diag = lu.u().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x.abs()), hi.max(x.abs())));
        let pivot_ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        let singular = ContinuationError::SingularBordered {
            alpha: p.alpha,
            pivot_ratio,
        };
        if !(pivot_ratio >= PIVOT_RATIO_MIN) {
            return Err(singular);
        }
        let fp = self.physical(f);
        let rhs = DVector::from_vec(stack(&fp.values, c));
        let x = lu.solve(&rhs).ok_or(singular)?;
        let (w, a, b) = unstack(x.as_slice(), n);
        Ok(BorderedSolution {
            a,
            b,
            w: ComplexField::physical(w),
        })
    }

    /// Exact inverse of the bordered operator at the seed `(0, μ₀, ω₀, 0)`,
    /// diagonal in the eigenbasis. Box domains only.
    pub fn seed_inverse(&self, f: &ComplexField, c: [f64; 2]) -> Result<BorderedSolution, ContinuationError> {
        let spectrum = self
            .domain
            .spectrum()
            .ok_or(ContinuationError::UnsupportedDomain(self.domain.kind()))?;
        let lambda = self.lambda();
        let phi = self.coefficients(self.phi());
        let fc = self.coefficients(f);
        let z = self.domain.complex_inner(&fc, &phi)?;
        let m = self.params.parameter_map();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let a = (m[1][1] * z.re - m[0][1] * z.im) / det;
        let b = (m[0][0] * z.im - m[1][0] * z.re) / det;
        let perp = fc.axpy(-z, &phi);
        let kernel = Complex64::new(c[0], c[1]);
        let values = perp
            .values
            .iter()
            .zip(spectrum)
            .zip(&phi.values)
            .map(|((&r, &lk), &ph)| {
                let part = if (lk - lambda).abs() > crate::eigen::SIMPLICITY_GAP * lambda {
                    r / (lambda - lk)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                part + kernel * ph
            })
            .collect();
        Ok(BorderedSolution {
            a,
            b,
            w: ComplexField::coefficients(values),
        })
    }

    /// Constraint values `(⟨w, φ⟩, ⟨w, iφ⟩)`.
    pub fn constraints(&self, w: &ComplexField) -> [f64; 2] {
        let c = self
            .domain
            .complex_inner(w, self.phi())
            .expect("same domain");
        [c.re, c.im]
    }

    fn solve_gmres(
        &self,
        p: &BranchPoint,
        f: &ComplexField,
        c: [f64; 2],
    ) -> Result<BorderedSolution, ContinuationError> {
        let n = self.domain.len();
        let fc = self.coefficients(f);
        let rhs = stack(&fc.values, c);
        let mut failure = None;
        let mut apply = |x: &[f64]| -> Vec<f64> {
            let (w, a, b) = unstack(x, n);
            let w = ComplexField::coefficients(w);
            match self.jacobian_apply(p, a, b, &w) {
                Ok(out) => stack(&self.coefficients(&out).values, self.constraints(&w)),
                Err(e) => {
                    failure = Some(e);
                    vec![0.0; x.len()]
                }
            }
        };
        let precond = |y: &[f64]| -> Vec<f64> {
            let (fv, c1, c2) = unstack(y, n);
            let s = self
                .seed_inverse(&ComplexField::coefficients(fv), [c1, c2])
                .expect("box domain has a spectrum");
            stack(&s.w.values, [s.a, s.b])
        };
        let out = gmres(&mut apply, precond, &rhs, GMRES_RTOL, GMRES_RESTART, GMRES_MAX_ITERS);
        if let Some(e) = failure {
            return Err(e);
        }
        log::debug!(
            "gmres: {} iterations, relative residual {:e}",
            out.iterations,
            out.relative_residual
        );
        if !out.converged {
            return Err(ContinuationError::NoConvergence {
                alpha: p.alpha,
                iters: out.iterations,
                residual: out.relative_residual,
            });
        }
        let (w, a, b) = unstack(&out.x, n);
        Ok(BorderedSolution {
            a,
            b,
            w: ComplexField::coefficients(w),
        })
    }
}

fn stack(values: &[Complex64], tail: [f64; 2]) -> Vec<f64> {
    let mut out: Vec<f64> = values.iter().map(|z| z.re).collect();
    out.extend(values.iter().map(|z| z.im));
    out.extend(tail);
    out
}

fn unstack(x: &[f64], n: usize) -> (Vec<Complex64>, f64, f64) {
    let w = (0..n).map(|i| Complex64::new(x[i], x[n + i])).collect();
    (w, x[2 * n], x[2 * n + 1])
}

pub(crate) struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted, right-preconditioned GMRES with modified Gram-Schmidt and
/// Givens rotations, started from zero.
pub(crate) fn gmres(
    apply: &mut impl FnMut(&[f64]) -> Vec<f64>,
    precond: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rtol: f64,
    restart: usize,
    max_iters: usize,
) -> GmresOutcome {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return GmresOutcome {
            x,
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let mut iterations = 0;
    while iterations < max_iters {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let relres = beta / bnorm;
        if relres <= rtol {
            return GmresOutcome {
                x,
                iterations,
                relative_residual: relres,
                converged: true,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut s = vec![beta];
        let mut zs: Vec<Vec<f64>> = Vec::new();
        for j in 0..restart {
            let z = precond(&basis[j]);
            let mut w = apply(&z);
            zs.push(z);
            let mut col = vec![0.0; j + 2];
            for (i, vi) in basis.iter().enumerate() {
                let hij = dot(&w, vi);
                col[i] = hij;
                w.iter_mut().zip(vi).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let wn = norm(&w);
            col[j + 1] = wn;
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = col[j].hypot(col[j + 1]);
            let (c, sv) = if rho == 0.0 { (1.0, 0.0) } else { (col[j] / rho, col[j + 1] / rho) };
            cs.push(c);
            sn.push(sv);
            col[j] = rho;
            col[j + 1] = 0.0;
            s.push(-sv * s[j]);
            s[j] *= c;
            hess.push(col);
            iterations += 1;
            let done = s[j + 1].abs() / bnorm <= rtol || iterations >= max_iters || wn == 0.0;
            if !done {
                basis.push(w.iter().map(|v| v / wn).collect());
            }
            if done || j + 1 == restart {
                let k = j + 1;
                let mut y = vec![0.0; k];
                for i in (0..k).rev() {
                    let mut acc = s[i];
                    for l in i + 1..k {
                        acc -= hess[l][i] * y[l];
                    }
                    y[i] = acc / hess[i][i];
                }
                for (yi, zi) in y.iter().zip(&zs) {
                    x.iter_mut().zip(zi).for_each(|(xk, zk)| *xk += yi * zk);
                }
                break;
            }
        }
    }
    let ax = apply(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let relres = norm(&r) / bnorm;
    GmresOutcome {
        converged: relres <= rtol * 10.0,
        x,
        iterations,
        relative_residual: relres,
    }
}
