use serde::{Deserialize, Serialize};

use super::{BranchPoint, ContinuationError, LinearSolver, Problem};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Target for `‖F‖_∞`.
    pub tol: f64,
    /// A stalled iteration is still accepted below this residual.
    pub accept_tol: f64,
    pub max_iters: usize,
    pub solver: LinearSolver,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            accept_tol: 1e-9,
            max_iters: 25,
            solver: LinearSolver::Auto,
        }
    }
}

impl Problem<'_> {
    /// Newton's method on `F = 0` with the two orthogonality constraints,
    /// started from `guess`. The constraints are restored exactly after every
    /// update.
    pub fn newton_correct(
        &self,
        guess: &BranchPoint,
        opts: &NewtonOptions,
    ) -> Result<BranchPoint, ContinuationError> {
        let mut p = guess.clone();
        p.v = self.reproject(&p.v);
        let mut previous = f64::INFINITY;
        for iter in 0..=opts.max_iters {
            let f = self.residual(&p)?;
            let r = f.max_modulus();
            log::trace!("newton alpha={} iter={} residual={r:e}", p.alpha, iter);
            if !r.is_finite() {
                break;
            }
            // a stall below the acceptance level is round-off, not divergence
            let stalled = r > 0.5 * previous && r <= opts.accept_tol;
            if r <= opts.tol || stalled {
                p.residual_inf = r;
                p.newton_iters = iter;
                return Ok(p);
            }
            if iter == opts.max_iters {
                return Err(ContinuationError::NoConvergence {
                    alpha: p.alpha,
                    iters: iter,
                    residual: r,
                });
            }
            previous = r;
            let step = self.solve_bordered(&p, &f.scale_real(-1.0), [0.0, 0.0], opts.solver)?;
            p.mu += step.a;
            p.omega += step.b;
            p.v = self.reproject(&self.add_update(&p.v, &step.w));
        }
        Err(ContinuationError::NoConvergence {
            alpha: p.alpha,
            iters: opts.max_iters,
            residual: f64::INFINITY,
        })
    }
}
