use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::domain::{make_domain, DomainKind, Representation};
use crate::eigen::eigenpair;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn interval(m: usize) -> Domain {
    make_domain(DomainKind::Box, 1, &[PI], m).unwrap()
}

fn cap() -> AlphaCap {
    AlphaCap::new(0.5, 1).unwrap()
}

fn sup(f: &ComplexField) -> f64 {
    f.max_modulus()
}

#[test]
fn initial_point_examples() {
    let p = Params::new(0.4, 0.4).unwrap();
    let (mu, om) = initial_point(&p, 3.0);
    assert_eq!(om, 0.0);
    assert!((mu - 3.0).abs() < 1e-15);

    let p = Params::new(0.0, FRAC_PI_4).unwrap();
    let (mu, om) = initial_point(&p, 1.0);
    assert!((om - 1.0).abs() < 1e-15);
    assert!((mu - 2.0f64.sqrt()).abs() < 1e-15);

    let p = Params::new(FRAC_PI_4, -FRAC_PI_4).unwrap();
    let (mu, om) = initial_point(&p, 2.0);
    assert!((om + 2.0 * 2.0f64.sqrt()).abs() < 1e-14);
    assert!((mu - 2.0).abs() < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let p = Params::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)).unwrap();
        let lambda = rng.gen_range(0.5..50.0);
        let (mu, om) = initial_point(&p, lambda);
        let got = p.effective_eigenvalue(mu, om);
        assert!((got - c(lambda, 0.0)).norm() <= 1e-14 * lambda.max(mu).max(om.abs()));
    }
}

#[test]
fn seed_residual_vanishes() {
    let d = interval(128);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, -0.2).unwrap(), &pair, cap()).unwrap();
    let r = prob.residual(&prob.seed()).unwrap();
    assert!(sup(&r) <= 1e-12, "{}", sup(&r));
}

#[test]
fn residual_is_linear_in_mu_at_alpha_zero() {
    let d = interval(64);
    let pair = eigenpair(&d, 2).unwrap();
    let params = Params::new(-0.5, 0.7).unwrap();
    let prob = Problem::new(&d, params, &pair, cap()).unwrap();
    let mut p = prob.seed();
    let delta = 0.37;
    p.mu += delta;
    let r = prob.residual(&p).unwrap();
    let expected = prob.physical(&pair.phi).scale(params.relative_phase() * delta);
    assert!(sup(&r.sub(&expected)) <= 1e-13);
}

/// Random smooth `v = Σ a_k sin(kx)` as exact coefficients, with `Δv`
/// summed directly at the nodes.
fn random_series(rng: &mut ChaCha8Rng, d: &Domain) -> (ComplexField, ComplexField) {
    let (_, lap, coeffs) = random_series_with_samples(rng, d);
    (coeffs, lap)
}

fn random_series_with_samples(
    rng: &mut ChaCha8Rng,
    d: &Domain,
) -> (ComplexField, ComplexField, ComplexField) {
    let a: Vec<Complex64> = (1..=8)
        .map(|k| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) / (k * k) as f64)
        .collect();
    let v = d.sample(|x| {
        a.iter()
            .enumerate()
            .map(|(k, ak)| ak * ((k + 1) as f64 * x[0]).sin())
            .sum()
    });
    let lap = d.sample(|x| {
        a.iter()
            .enumerate()
            .map(|(k, ak)| -ak * ((k + 1) as f64 * x[0]).sin() * ((k + 1) * (k + 1)) as f64)
            .sum()
    });
    let mut coeffs = ComplexField::zeros(d.len(), Representation::Coefficient);
    coeffs.values[..a.len()].copy_from_slice(&a);
    (v, lap, coeffs)
}

#[test]
fn residual_matches_nodewise_oracle() {
    let d = interval(96);
    let pair = eigenpair(&d, 1).unwrap();
    let params = Params::new(0.3, -0.2).unwrap();
    let prob = Problem::new(&d, params, &pair, cap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let (v, lap, coeffs) = random_series_with_samples(&mut rng, &d);
        let (alpha, mu, omega) = (rng.gen_range(0.0..0.5), rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0));
        let p = BranchPoint {
            alpha,
            mu,
            omega,
            v: coeffs,
            residual_inf: f64::NAN,
            newton_iters: 0,
        };
        let got = prob.residual(&p).unwrap();
        let e = c((params.gamma() - params.theta()).cos(), (params.gamma() - params.theta()).sin());
        let f = c(0.0, -1.0) * c(params.theta().cos(), -params.theta().sin());
        for i in 0..d.len() {
            let z = v.values[i];
            let want = lap.values[i] + mu * e * z * z.norm().powf(alpha) + omega * f * z;
            assert!((got.values[i] - want).norm() <= 1e-12, "{}", (got.values[i] - want).norm());
        }
    }
}

#[test]
fn jacobian_at_seed_is_the_bordered_operator() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let params = Params::new(0.3, -0.2).unwrap();
    let prob = Problem::new(&d, params, &pair, cap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (w, lap, coeffs) = random_series_with_samples(&mut rng, &d);
    let (a, b) = (0.7, -1.3);
    let got = prob.jacobian_apply(&prob.seed(), a, b, &coeffs).unwrap();
    let phi = prob.physical(&pair.phi);
    let want = ComplexField::physical(
        (0..d.len())
            .map(|i| {
                a * params.relative_phase() * phi.values[i]
                    - c(0.0, b) * c(params.theta().cos(), -params.theta().sin()) * phi.values[i]
                    + lap.values[i]
                    + pair.lambda * w.values[i]
            })
            .collect(),
    );
    assert!(sup(&got.sub(&want)) <= 1e-12);
    let zero = prob
        .jacobian_apply(&prob.seed(), 0.0, 0.0, &ComplexField::zeros(d.len(), Representation::Physical))
        .unwrap();
    assert_eq!(sup(&zero), 0.0);
}

#[test]
fn jacobian_matches_central_differences() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let params = Params::new(rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)).unwrap();
        let prob = Problem::new(&d, params, &pair, cap()).unwrap();
        let (v, _) = random_series(&mut rng, &d);
        let p = BranchPoint {
            alpha: 0.3,
            mu: 1.3,
            omega: 0.4,
            v: prob.reproject(&pair.phi.add(&v.scale_real(0.2))),
            residual_inf: f64::NAN,
            newton_iters: 0,
        };
        let (w, _) = random_series(&mut rng, &d);
        let (a, b) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let eps = 1e-6;
        let shifted = |s: f64| {
            let mut q = p.clone();
            q.mu += s * a;
            q.omega += s * b;
            q.v = q.v.axpy(c(s, 0.0), &w);
            prob.residual(&q).unwrap()
        };
        let fd = shifted(eps).sub(&shifted(-eps)).scale_real(0.5 / eps);
        let jac = prob.jacobian_apply(&p, a, b, &w).unwrap();
        let l2 = |f: &ComplexField| d.norm_l2(f).unwrap();
        assert!(l2(&fd.sub(&jac)) <= 1e-5 * l2(&jac), "{}", l2(&fd.sub(&jac)) / l2(&jac));
    }
}

#[test]
fn bordered_matrix_is_nonsingular_and_kernel_trivial() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, -0.2).unwrap(), &pair, cap()).unwrap();
    let seed = prob.seed();
    let mat = prob.bordered_matrix(&seed).unwrap();
    let sv = mat.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(smin >= 1e-8, "{smin}");
    let zero = ComplexField::zeros(d.len(), Representation::Physical);
    let s = prob.solve_bordered(&seed, &zero, [0.0, 0.0], LinearSolver::Dense).unwrap();
    assert_eq!((s.a, s.b, sup(&s.w)), (0.0, 0.0, 0.0));
}

#[test]
fn seed_inverse_agrees_with_dense_solve() {
    let d = interval(48);
    let pair = eigenpair(&d, 2).unwrap();
    let prob = Problem::new(&d, Params::new(-0.6, 0.9).unwrap(), &pair, cap()).unwrap();
    let seed = prob.seed();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (f, _) = random_series(&mut rng, &d);
    let cs = [0.3, -0.8];
    let dense = prob.solve_bordered(&seed, &f, cs, LinearSolver::Dense).unwrap();
    let exact = prob.seed_inverse(&f, cs).unwrap();
    assert!((dense.a - exact.a).abs() < 1e-10 && (dense.b - exact.b).abs() < 1e-10);
    assert!(sup(&dense.w.sub(&prob.physical(&exact.w))) < 1e-10);
    let back = prob.jacobian_apply(&seed, exact.a, exact.b, &exact.w).unwrap();
    assert!(sup(&back.sub(&prob.physical(&f))) < 1e-12);
    let got = prob.constraints(&exact.w);
    assert!((got[0] - cs[0]).abs() < 1e-14 && (got[1] - cs[1]).abs() < 1e-14);
}

#[test]
fn gmres_agrees_with_dense_away_from_seed() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, -0.2).unwrap(), &pair, cap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (v, _) = random_series(&mut rng, &d);
    let p = BranchPoint {
        alpha: 0.4,
        mu: 1.1,
        omega: -0.3,
        v: prob.reproject(&pair.phi.add(&v.scale_real(0.3))),
        residual_inf: f64::NAN,
        newton_iters: 0,
    };
    let (f, _) = random_series(&mut rng, &d);
    let dense = prob.solve_bordered(&p, &f, [0.1, 0.2], LinearSolver::Dense).unwrap();
    let it = prob.solve_bordered(&p, &f, [0.1, 0.2], LinearSolver::Gmres).unwrap();
    assert!((dense.a - it.a).abs() < 1e-9 && (dense.b - it.b).abs() < 1e-9);
    assert!(sup(&dense.w.sub(&prob.physical(&it.w))) < 1e-9);
}

#[test]
fn newton_at_exact_seed_takes_no_step() {
    let d = interval(128);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, -0.2).unwrap(), &pair, cap()).unwrap();
    let p = prob.newton_correct(&prob.seed(), &NewtonOptions::default()).unwrap();
    assert!(p.newton_iters <= 1);
    assert!(p.residual_inf <= 1e-12);
}

#[test]
fn linear_problem_is_solved_in_one_step() {
    let d = interval(128);
    let pair = eigenpair(&d, 1).unwrap();
    let params = Params::new(0.3, -0.2).unwrap();
    let prob = Problem::new(&d, params, &pair, cap()).unwrap();
    let (mu0, om0) = initial_point(&params, 1.0);
    let mut guess = prob.seed();
    guess.mu += 0.1;
    guess.omega += 0.1;
    let p = prob.newton_correct(&guess, &NewtonOptions::default()).unwrap();
    assert_eq!(p.newton_iters, 1);
    assert!((p.mu - mu0).abs() < 1e-12 && (p.omega - om0).abs() < 1e-12);
    let tilde = p.v.sub(&prob.coefficients(&pair.phi));
    assert!(d.norm_l2(&tilde).unwrap() < 1e-12);
}

#[test]
fn short_branch_keeps_invariants() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, -0.2).unwrap(), &pair, cap()).unwrap();
    let mut opts = BranchOptions::uniform(0.2, 0.01);
    opts.alpha_grid.insert(19, 0.19);
    opts.alpha_grid.dedup();
    let table = continue_branch(&prob, &opts).unwrap();
    assert_eq!(table.stop, StopReason::Completed);
    assert_eq!(table.points.len(), opts.alpha_grid.len());
    for p in &table.points {
        assert!(p.residual_inf <= 1e-9 && p.mu > 0.0);
        let cr = prob.constraint_residuals(&p.v);
        assert!(cr.l2[0].abs() <= 1e-10 && cr.l2[1].abs() <= 1e-10);
        assert!(cr.h[0].abs() <= 1e-9 && cr.h[1].abs() <= 1e-9);
        assert!(prob.residual(p).unwrap().max_modulus() <= 1e-9);
    }
    assert!(table.points.windows(2).all(|w| w[1].alpha > w[0].alpha));
    // a corrector started from the α = 0.19 point reaches α = 0.2 quickly
    let from = table.points.iter().find(|p| p.alpha == 0.19).unwrap();
    let mut guess = from.clone();
    guess.alpha = 0.2;
    let next = prob.newton_correct(&guess, &NewtonOptions::default()).unwrap();
    assert!(next.newton_iters <= 5);
}

#[test]
fn stationary_branch_when_angles_agree() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, 0.3).unwrap(), &pair, cap()).unwrap();
    let table = continue_branch(&prob, &BranchOptions::uniform(0.3, 0.05)).unwrap();
    assert_eq!(table.stop, StopReason::Completed);
    assert!(table.points.iter().all(|p| p.omega.abs() <= 1e-8));
}

#[test]
fn single_point_grid_gives_the_seed() {
    let d = interval(64);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(FRAC_PI_3, 0.0).unwrap(), &pair, cap()).unwrap();
    let table = continue_branch(&prob, &BranchOptions::default()).unwrap();
    assert_eq!(table.points.len(), 1);
    assert!(table.points[0].residual_inf <= 1e-12);
    assert!((table.points[0].mu - 0.5).abs() < 1e-12);
}

#[test]
fn invalid_setups_are_rejected() {
    let sq = make_domain(DomainKind::Box, 2, &[PI, PI], 16).unwrap();
    let pair = eigenpair(&sq, 2).unwrap();
    let params = Params::new(0.1, 0.2).unwrap();
    assert!(matches!(
        Problem::new(&sq, params, &pair, cap()),
        Err(ContinuationError::Eigen(EigenError::DegenerateEigenvalue { .. }))
    ));
    let torus = make_domain(DomainKind::Torus, 1, &[PI], 16).unwrap();
    let tpair = eigenpair(&torus, 1).unwrap();
    assert!(matches!(
        Problem::new(&torus, params, &tpair, cap()),
        Err(ContinuationError::UnsupportedDomain(DomainKind::Torus))
    ));
    let d = interval(32);
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, params, &pair, cap()).unwrap();
    for grid in [vec![], vec![0.1, 0.2], vec![0.0, 0.2, 0.1], vec![0.0, 0.6]] {
        let opts = BranchOptions {
            alpha_grid: grid,
            ..BranchOptions::default()
        };
        assert!(continue_branch(&prob, &opts).is_err());
    }
}

#[test]
fn ball_branch_runs_on_the_radial_grid() {
    let d = make_domain(DomainKind::Ball, 2, &[1.0], 100).unwrap();
    let pair = eigenpair(&d, 1).unwrap();
    let prob = Problem::new(&d, Params::new(0.3, -0.2).unwrap(), &pair, cap()).unwrap();
    let table = continue_branch(&prob, &BranchOptions::uniform(0.2, 0.05)).unwrap();
    assert_eq!(table.stop, StopReason::Completed);
    assert!(table.points.iter().all(|p| p.residual_inf <= 1e-9));
}
