use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::continuation::{continue_branch, BranchOptions};
use crate::eigen::eigenpair;
use crate::nonlinearity::AlphaCap;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn branch(domain: &Domain, params: Params, alpha_max: f64) -> (BranchTable, Vec<PointDiagnostics>) {
    let pair = eigenpair(domain, 1).unwrap();
    let cap = AlphaCap::new(0.5, domain.dim()).unwrap();
    let prob = Problem::new(domain, params, &pair, cap).unwrap();
    let table = continue_branch(&prob, &BranchOptions::uniform(alpha_max, 0.05)).unwrap();
    let diag = branch_diagnostics(&prob, &table).unwrap();
    (table, diag)
}

fn interval(m: usize) -> Domain {
    make_domain(DomainKind::Box, 1, &[PI], m).unwrap()
}

#[test]
fn unit_mu_leaves_v_unchanged() {
    let d = interval(32);
    let params = Params::new(0.1, 0.2).unwrap();
    let v = d.to_coefficients(&d.sample(|x| c(x[0].sin(), 0.3 * (2.0 * x[0]).sin()))).unwrap();
    let point = BranchPoint {
        alpha: 0.3,
        mu: 1.0,
        omega: 0.5,
        v: v.clone(),
        residual_inf: 0.0,
        newton_iters: 0,
    };
    let wave = scale_to_standing_wave(&d, &params, &point).unwrap();
    assert_eq!(wave.u, v);
    assert_eq!(wave.omega, 0.5);
    let zero = BranchPoint { alpha: 0.0, ..point.clone() };
    assert_eq!(scale_to_standing_wave(&d, &params, &zero).unwrap_err(), PostprocessError::AlphaZero);
    assert!(log_norm_u(&d, &zero).is_err());
    let big = BranchPoint { alpha: 1e-4, mu: 2.0, ..point };
    assert!(matches!(
        scale_to_standing_wave(&d, &params, &big),
        Err(PostprocessError::ScaleOverflow { .. })
    ));
    let expected = 2.0f64.ln() / 1e-4 + d.norm_l2(&v).unwrap().ln();
    assert!((log_norm_u(&d, &big).unwrap() - expected).abs() < 1e-9);
}

#[test]
fn branch_waves_pass_residual_and_identities() {
    let d = interval(64);
    let params = Params::new(0.3, -0.2).unwrap();
    let (table, diag) = branch(&d, params, 0.2);
    for (p, di) in table.points.iter().zip(&diag) {
        assert!(di.identity_real_err <= 1e-6 && di.identity_imag_err <= 1e-6, "{di:?}");
        if p.alpha == 0.0 {
            assert!(di.l2_norm_u.is_nan());
            continue;
        }
        let wave = scale_to_standing_wave(&d, &params, p).unwrap();
        assert!(wave_residual(&d, &wave).unwrap().passes(WAVE_RESIDUAL_TOL));
        let rep = identity_report(&d, &wave).unwrap();
        assert!(rep.nontrivial && rep.passes(1e-6));
        assert!((rep.identity_real_err - di.identity_real_err).abs() <= 1e-9);
        assert!((rep.mass.sqrt() - di.l2_norm_u).abs() <= 1e-10 * di.l2_norm_u);
        assert!((rep.mass.sqrt().ln() - di.log_l2_norm_u).abs() <= 1e-10);
        // cos θ ∫|∇u|² and cos γ ∫|u|^{α+2} agree
        let (a, b) = (params.theta().cos() * rep.gradient, params.gamma().cos() * rep.potential);
        assert!((a - b).abs() <= 1e-6 * a.abs());
    }
}

#[test]
fn stationary_wave_has_negligible_frequency_term() {
    let d = interval(64);
    let params = Params::new(0.3, 0.3).unwrap();
    let (table, _) = branch(&d, params, 0.1);
    let wave = scale_to_standing_wave(&d, &params, table.points.last().unwrap()).unwrap();
    let rep = identity_report(&d, &wave).unwrap();
    assert!(wave.omega.abs() * rep.mass <= 1e-8 * rep.mass);
}

#[test]
fn zero_field_is_flagged_trivial() {
    let d = interval(16);
    let wave = StandingWave {
        u: ComplexField::zeros(d.len(), Representation::Coefficient),
        omega: 0.0,
        alpha: 0.2,
        params: Params::new(0.0, 0.0).unwrap(),
        domain: d.spec().clone(),
    };
    let rep = identity_report(&d, &wave).unwrap();
    assert!(!rep.nontrivial);
    assert_eq!((rep.identity_real_err, rep.identity_imag_err), (0.0, 0.0));
}

#[test]
fn sine_extends_to_itself() {
    let d = interval(31);
    let params = Params::new(0.0, 0.0).unwrap();
    let wave = StandingWave {
        u: d.to_coefficients(&d.sample_real(|x| x[0].sin())).unwrap(),
        omega: 0.0,
        alpha: 0.5,
        params,
        domain: d.spec().clone(),
    };
    let (torus, ext) = extend_to_torus(&d, &wave).unwrap();
    assert_eq!(torus.spec().modes, 64);
    let phys = torus.to_physical(&ext.u).unwrap();
    for i in 0..torus.len() {
        let x = torus.node(i)[0];
        assert!((phys.values[i] - c(x.sin(), 0.0)).norm() < 1e-13);
    }
}

#[test]
fn extension_is_an_odd_reflection_with_doubled_mass() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (dim, lengths) in [(1, vec![2.0]), (2, vec![PI, 1.5])] {
        let d = make_domain(DomainKind::Box, dim, &lengths, 12).unwrap();
        let mut u = ComplexField::zeros(d.len(), Representation::Coefficient);
        u.values.iter_mut().for_each(|z| *z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let wave = StandingWave {
            u,
            omega: 0.0,
            alpha: 0.5,
            params: Params::new(0.0, 0.0).unwrap(),
            domain: d.spec().clone(),
        };
        let (torus, ext) = extend_to_torus(&d, &wave).unwrap();
        let ratio = torus.norm_l2(&ext.u).unwrap() / d.norm_l2(&wave.u).unwrap();
        assert!((ratio - 2f64.powf(dim as f64 / 2.0)).abs() < 1e-12);
        let bp = d.to_physical(&wave.u).unwrap();
        let tp = torus.to_physical(&ext.u).unwrap();
        let mt = torus.spec().modes;
        // box node i sits at torus index i+1; its mirror at mt-1-i carries the opposite sign
        for flat in 0..d.len() {
            let idx = unravel(flat, d.shape());
            let mut direct = 0;
            let mut mirror = 0;
            for &i in &idx {
                direct = direct * mt + i + 1;
                mirror = mirror * mt + (mt - 1 - i);
            }
            let sign = if dim % 2 == 0 { 1.0 } else { -1.0 };
            assert!((tp.values[direct] - bp.values[flat]).norm() < 1e-12);
            assert!((tp.values[mirror] - sign * bp.values[flat]).norm() < 1e-12);
        }
    }
}

#[test]
fn rescaled_family_solves_the_equation() {
    let d = interval(128);
    let params = Params::new(0.3, -0.2).unwrap();
    let (table, _) = branch(&d, params, 0.2);
    let wave = scale_to_standing_wave(&d, &params, table.points.last().unwrap()).unwrap();
    let (torus, ext) = extend_to_torus(&d, &wave).unwrap();
    assert!(wave_residual(&torus, &ext).unwrap().passes(WAVE_RESIDUAL_TOL));
    let same = rescale_family(&torus, &ext, 1).unwrap();
    assert!(torus.to_physical(&same.u).unwrap().sub(&torus.to_physical(&ext.u).unwrap()).max_modulus() < 1e-12);
    for n in [2usize, 3] {
        let (fine, un) = rescale_family_refined(&torus, &ext, n).unwrap();
        assert_eq!(un.omega, ext.omega * (n * n) as f64);
        let r = wave_residual(&fine, &un).unwrap();
        assert!(r.passes(WAVE_RESIDUAL_TOL), "n={n} {r:?}");
        let coarse = torus.to_physical(&ext.u).unwrap();
        let tiled = fine.to_physical(&un.u).unwrap();
        let amp = (n as f64).powf(2.0 / un.alpha);
        let mt = torus.spec().modes;
        for j in 0..fine.len() {
            assert!((tiled.values[j] - amp * coarse.values[j % mt]).norm() <= 1e-10 * amp);
        }
    }
    // the same-grid variant refuses a wave whose spectrum fills the grid
    assert!(matches!(
        rescale_family(&torus, &ext, 2),
        Err(PostprocessError::GridTooCoarse { n: 2, .. })
    ));
}

#[test]
fn band_limited_wave_rescales_on_the_same_grid() {
    let torus = make_domain(DomainKind::Torus, 1, &[PI], 64).unwrap();
    let params = Params::new(0.2, 0.4).unwrap();
    // e^{ix} is not a solution for these angles; only the residual maps are compared
    let u = torus.to_coefficients(&torus.sample(|x| Complex64::from_polar(1.0, x[0]))).unwrap();
    let wave = StandingWave {
        u,
        omega: 1.0,
        alpha: 0.4,
        params,
        domain: torus.spec().clone(),
    };
    let r1 = wave_residual_field(&torus, &wave).unwrap();
    let w2 = rescale_family(&torus, &wave, 2).unwrap();
    assert_eq!(w2.omega, 4.0);
    let r2 = wave_residual_field(&torus, &w2).unwrap();
    // R_n(x) = n^{2/α + 2} R(nx)
    let scale = 2f64.powf(2.0 / 0.4 + 2.0);
    for j in 0..torus.len() {
        assert!((r2.values[j] - scale * r1.values[(2 * j) % 64]).norm() < 1e-9 * scale);
    }
    assert!(matches!(rescale_family(&torus, &wave, 0), Err(PostprocessError::InvalidFactor)));
    assert!(matches!(rescale_family(&torus, &wave, 40), Err(PostprocessError::GridTooCoarse { .. })));
}

#[test]
fn norm_grows_or_shrinks_with_the_seed_mu() {
    let d = interval(64);
    for (params, grows) in [
        (Params::new(0.0, PI / 3.0).unwrap(), true),
        (Params::new(PI / 3.0, 0.0).unwrap(), false),
    ] {
        let (_, diag) = branch(&d, params, 0.2);
        let logs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|a| diag.iter().find(|p| (p.alpha - a).abs() < 1e-12).unwrap().log_l2_norm_u)
            .collect();
        for w in logs.windows(2) {
            assert_eq!(w[1] > w[0], grows, "{logs:?}");
        }
    }
}
