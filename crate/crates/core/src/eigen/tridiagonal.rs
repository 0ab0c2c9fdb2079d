//! Symmetric tridiagonal eigenvalues by Sturm bisection, eigenvectors by
//! inverse iteration.

/// Number of eigenvalues strictly below `x`.
pub(crate) fn sturm_count(diag: &[f64], off: &[f64], x: f64, pivmin: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

pub(crate) fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    (lo, hi)
}

pub(crate) fn pivmin(off: &[f64]) -> f64 {
    let emax = off.iter().map(|e| e * e).fold(1.0, f64::max);
    f64::MIN_POSITIVE * emax
}

/// The `k`-th smallest eigenvalue (0-based).
pub(crate) fn kth_eigenvalue(diag: &[f64], off: &[f64], k: usize) -> f64 {
    let (mut lo, mut hi) = gershgorin(diag, off);
    let pm = pivmin(off);
    for _ in 0..256 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pm {
            break;
        }
        if sturm_count(diag, off, mid, pm) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - shift I) x = rhs` in place by Gaussian elimination with
/// partial pivoting. Exactly zero pivots are replaced by `tiny`, which is
/// what inverse iteration wants near an eigenvalue.
#[cfg(test)]
pub(crate) fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &mut [f64], tiny: f64) {
    let d: Vec<f64> = diag.iter().map(|x| x - shift).collect();
    general_solve(off, &d, off, rhs, tiny);
}

/// General tridiagonal solve with sub-diagonal `lower`, diagonal `diag` and
/// super-diagonal `upper`.
fn general_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], tiny: f64) {
    let n = diag.len();
    let mut d: Vec<f64> = diag.to_vec();
    let mut dl: Vec<f64> = lower.to_vec();
    let mut du: Vec<f64> = upper.to_vec();
    let guard = |x: f64| if x == 0.0 { tiny } else { x };
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            d[i] = guard(d[i]);
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            rhs[i + 1] -= fact * rhs[i];
            dl[i] = 0.0;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                dl[i] = du[i + 1];
                du[i + 1] = -fact * dl[i];
            } else {
                dl[i] = 0.0;
            }
            du[i] = temp;
            let tb = rhs[i];
            rhs[i] = rhs[i + 1];
            rhs[i + 1] = tb - fact * rhs[i + 1];
        }
    }
    // dl now holds the second superdiagonal of U
    d[n - 1] = guard(d[n - 1]);
    rhs[n - 1] /= d[n - 1];
    if n > 1 {
        rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - dl[i] * rhs[i + 2]) / d[i];
    }
}

pub(crate) fn apply(diag: &[f64], off: &[f64], x: &[f64]) -> Vec<f64> {
    let n = diag.len();
    (0..n)
        .map(|i| {
            let mut y = diag[i] * x[i];
            if i > 0 {
                y += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                y += off[i] * x[i + 1];
            }
            y
        })
        .collect()
}

/// Inverse iteration for the symmetric pencil `A x = λ W x`, with `A`
/// tridiagonal and `W` diagonal positive. Returns `x` with `xᵀ W x = 1` and
/// the pencil Rayleigh quotient, or `None` if the residual
/// `max |(A x)_i / w_i - λ x_i|` does not drop below `tol · ‖W⁻¹A‖ · ‖x‖_∞`.
pub(crate) fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    weights: &[f64],
    lambda: f64,
    tol: f64,
    max_iters: usize,
) -> Option<(Vec<f64>, f64)> {
    let n = diag.len();
    // rows of W⁻¹A are balanced, so the solve has a rowwise small backward error
    let lower: Vec<f64> = (1..n).map(|i| off[i - 1] / weights[i]).collect();
    let upper: Vec<f64> = (0..n.saturating_sub(1)).map(|i| off[i] / weights[i]).collect();
    let shifted: Vec<f64> = (0..n).map(|i| diag[i] / weights[i] - lambda).collect();
    let scale = (0..n)
        .map(|i| {
            let left = if i > 0 { lower[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { upper[i].abs() } else { 0.0 };
            diag[i].abs() / weights[i] + left + right
        })
        .fold(0.0, f64::max);
    let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    // deterministic start with components in every direction
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 97) as f64 / 97.0).collect();
    normalize(&mut x, weights);
    for _ in 0..max_iters {
        let mut rhs = x.clone();
        general_solve(&lower, &shifted, &upper, &mut rhs, tiny);
        if !rhs.iter().all(|v| v.is_finite()) {
            return None;
        }
        x = rhs;
        normalize(&mut x, weights);
        let ax = apply(diag, off, &x);
        let rayleigh: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let xmax = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        let resid = (0..n)
            .map(|i| (ax[i] / weights[i] - rayleigh * x[i]).abs())
            .fold(0.0, f64::max);
        if resid <= tol * scale * xmax {
            return Some((x, rayleigh));
        }
    }
    None
}

fn normalize(x: &mut [f64], weights: &[f64]) {
    let norm = x.iter().zip(weights).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

#[cfg(test)]
mod tests {
    use super::*;

    // -u'' on (0,1) with n interior points: eigenvalues (2 - 2cos(kπ/(n+1)))/h²
    fn dirichlet_1d(n: usize) -> (Vec<f64>, Vec<f64>, f64) {
        let h = 1.0 / (n + 1) as f64;
        (vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1], h)
    }

    #[test]
    fn bisection_matches_closed_form() {
        let n = 200;
        let (d, e, h) = dirichlet_1d(n);
        for k in [0, 1, 5, 199] {
            let exact = (2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI * h).cos()) / (h * h);
            let got = kth_eigenvalue(&d, &e, k);
            assert!((got - exact).abs() <= 1e-12 * exact.max(d[0]), "k={k} {got} {exact}");
        }
    }

    #[test]
    fn shifted_solve_against_dense_product() {
        let d = vec![4.0, -1.0, 3.0, 0.5, 2.0];
        let e = vec![1.0, 2.0, -3.0, 0.7];
        let x_true = vec![1.0, -2.0, 0.5, 3.0, -1.5];
        let mut rhs: Vec<f64> = apply(&d, &e, &x_true).iter().zip(&x_true).map(|(a, b)| a - 0.3 * b).collect();
        shifted_solve(&d, &e, 0.3, &mut rhs, 1e-300);
        for (a, b) in rhs.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_iteration_recovers_sine_mode() {
        let n = 100;
        let (d, e, h) = dirichlet_1d(n);
        let lam = kth_eigenvalue(&d, &e, 2);
        let (v, rq) = inverse_iteration(&d, &e, &vec![1.0; n], lam, 1e-12, 10).unwrap();
        assert!((rq - lam).abs() < 1e-9 * lam);
        let s: Vec<f64> = (1..=n).map(|j| (3.0 * std::f64::consts::PI * j as f64 * h).sin()).collect();
        let ns = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let dot: f64 = v.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>() / ns;
        assert!((dot.abs() - 1.0).abs() < 1e-10);
    }
}
