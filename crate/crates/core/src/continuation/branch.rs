use serde::Serialize;

use super::{initial_point, BranchPoint, ContinuationError, NewtonOptions, Problem};
use crate::domain::{DomainSpec, Params};

/// Easy corrections (at most this many Newton iterations) allow the step to
/// grow.
const EASY_ITERS: usize = 4;
const EASY_RUN: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchOptions {
    /// Points to record; must start at 0 and increase.
    pub alpha_grid: Vec<f64>,
    /// First step; defaults to the first grid spacing.
    pub initial_step: Option<f64>,
    pub min_step: f64,
    /// Defaults to the largest grid spacing.
    pub max_step: Option<f64>,
    pub newton: NewtonOptions,
}

impl BranchOptions {
    pub fn uniform(alpha_max: f64, step: f64) -> Self {
        let count = (alpha_max / step - 1e-9).ceil() as usize;
        let mut alpha_grid: Vec<f64> = (0..count)
            .map(|k| (k as f64 * step * 1e12).round() / 1e12)
            .collect();
        alpha_grid.push(alpha_max);
        Self {
            alpha_grid,
            ..Self::default()
        }
    }
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            alpha_grid: vec![0.0],
            initial_step: None,
            min_step: 1e-5,
            max_step: None,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// Newton failed even after the step fell below the minimum.
    NewtonFailed { alpha: f64, step: f64 },
    SingularBordered { alpha: f64 },
    MuNonPositive { alpha: f64 },
}

#[derive(Clone, Debug)]
pub struct BranchTable {
    pub params: Params,
    pub domain: DomainSpec,
    pub eigen_index: usize,
    pub lambda: f64,
    pub mu0: f64,
    pub omega0: f64,
    /// Accepted points at the requested grid values, ascending in `α`.
    pub points: Vec<BranchPoint>,
    /// Largest `α` at which any correction was accepted, grid or not.
    pub alpha_reached: f64,
    pub stop: StopReason,
    pub newton: NewtonOptions,
}

fn validate_grid(problem: &Problem<'_>, grid: &[f64]) -> Result<(), ContinuationError> {
    let bad = |msg: &str| Err(ContinuationError::InvalidGrid(msg.to_string()));
    match grid.first() {
        None => return bad("empty"),
        Some(&a) if a != 0.0 => return bad("must start at 0"),
        _ => {}
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return bad("must be strictly increasing");
    }
    problem.cap.check(*grid.last().expect("nonempty"))?;
    Ok(())
}

/// Follows the branch from the seed through `opts.alpha_grid`. Stops early,
/// with the reason recorded, when the corrector keeps failing.
pub fn continue_branch(
    problem: &Problem<'_>,
    opts: &BranchOptions,
) -> Result<BranchTable, ContinuationError> {
    let grid = &opts.alpha_grid;
    validate_grid(problem, grid)?;
    let (mu0, omega0) = initial_point(&problem.params, problem.lambda());
    let seed = problem.newton_correct(&problem.seed(), &opts.newton)?;
    let spacing = grid.windows(2).map(|w| w[1] - w[0]);
    let first = spacing.clone().next().unwrap_or(0.0);
    let max_step = opts
        .max_step
        .unwrap_or_else(|| spacing.fold(0.0, f64::max))
        .max(opts.min_step);
    let mut step = opts.initial_step.unwrap_or(first).min(max_step);
    let mut table = BranchTable {
        params: problem.params,
        domain: problem.domain.spec().clone(),
        eigen_index: problem.pair.index,
        lambda: problem.lambda(),
        mu0,
        omega0,
        points: vec![seed.clone()],
        alpha_reached: 0.0,
        stop: StopReason::Completed,
        newton: opts.newton,
    };
    let mut previous: Option<BranchPoint> = None;
    let mut current = seed;
    let mut easy = 0;
    let mut target = 1;
    while target < grid.len() {
        let goal = grid[target];
        let mut alpha = current.alpha + step;
        if alpha >= goal - 1e-12 * goal.max(1.0) {
            alpha = goal;
        }
        let guess = predict(problem, previous.as_ref(), &current, alpha);
        match problem.newton_correct(&guess, &opts.newton) {
            Ok(point) => {
                if !(point.mu > 0.0) {
                    table.stop = StopReason::MuNonPositive { alpha };
                    break;
                }
                log::debug!(
                    "accepted alpha={alpha} mu={} omega={} iters={}",
                    point.mu,
                    point.omega,
                    point.newton_iters
                );
                if point.newton_iters <= EASY_ITERS {
                    easy += 1;
                    if easy >= EASY_RUN {
                        step = (2.0 * step).min(max_step);
                        easy = 0;
                    }
                } else {
                    easy = 0;
                }
                table.alpha_reached = alpha;
                if alpha == goal {
                    table.points.push(point.clone());
                    target += 1;
                }
                previous = Some(std::mem::replace(&mut current, point));
            }
            Err(ContinuationError::NoConvergence { .. }) => {
                easy = 0;
                step *= 0.5;
                log::debug!("corrector failed at alpha={alpha}; step now {step}");
                if step < opts.min_step {
                    table.stop = StopReason::NewtonFailed { alpha, step };
                    break;
                }
            }
            Err(ContinuationError::SingularBordered { alpha, .. }) => {
                table.stop = StopReason::SingularBordered { alpha };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

/// Secant extrapolation in `α` from the last two accepted points, or the
/// last point alone at the start.
fn predict(
    problem: &Problem<'_>,
    previous: Option<&BranchPoint>,
    current: &BranchPoint,
    alpha: f64,
) -> BranchPoint {
    let mut guess = current.clone();
    guess.alpha = alpha;
    if let Some(prev) = previous {
        let t = (alpha - current.alpha) / (current.alpha - prev.alpha);
        guess.mu += t * (current.mu - prev.mu);
        guess.omega += t * (current.omega - prev.omega);
        let dv = problem.coefficients(&current.v).sub(&problem.coefficients(&prev.v));
        guess.v = problem.coefficients(&current.v).axpy(t.into(), &dv);
    }
    guess
}
