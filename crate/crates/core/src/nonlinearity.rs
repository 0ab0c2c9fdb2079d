//! The nonlinearity `g(α, v) = |v|^α v` (identity for `α ≤ 0`) and its
//! real-linear derivative `H(α, v, u)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::domain::{ComplexField, Representation};

/// Below this modulus `v` is treated as zero in `H`.
const ZERO_MODULUS: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NonlinearityError {
    #[error("alpha cap {alpha_max} is invalid in dimension {dim}: need alpha_max > 0 and (N-2)*alpha_max <= 2")]
    InvalidCap { alpha_max: f64, dim: usize },
    #[error("alpha {alpha} exceeds the cap {cap}")]
    AlphaAboveCap { alpha: f64, cap: f64 },
    #[error("nonlinear terms need fields in physical representation")]
    NotPhysical,
    #[error("fields have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
}

/// Upper bound `ã` on the exponent, subject to `(N - 2) ã ≤ 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaCap {
    alpha_max: f64,
}

impl AlphaCap {
    pub fn new(alpha_max: f64, dim: usize) -> Result<Self, NonlinearityError> {
        let ok = alpha_max.is_finite()
            && alpha_max > 0.0
            && (dim as f64 - 2.0) * alpha_max <= 2.0;
        if !ok {
            return Err(NonlinearityError::InvalidCap { alpha_max, dim });
        }
        Ok(Self { alpha_max })
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    pub fn check(&self, alpha: f64) -> Result<(), NonlinearityError> {
        if alpha > self.alpha_max || alpha.is_nan() {
            return Err(NonlinearityError::AlphaAboveCap {
                alpha,
                cap: self.alpha_max,
            });
        }
        Ok(())
    }

    /// Nodewise `g(α, v)`.
    pub fn g_eval(&self, alpha: f64, v: &ComplexField) -> Result<ComplexField, NonlinearityError> {
        self.check(alpha)?;
        physical(v)?;
        Ok(v.map(|z| g(alpha, z)))
    }

    /// Nodewise `H(α, v, u)`.
    pub fn h_eval(
        &self,
        alpha: f64,
        v: &ComplexField,
        u: &ComplexField,
    ) -> Result<ComplexField, NonlinearityError> {
        self.check(alpha)?;
        physical(v)?;
        physical(u)?;
        if v.len() != u.len() {
            return Err(NonlinearityError::LengthMismatch(v.len(), u.len()));
        }
        Ok(ComplexField::physical(
            v.values
                .iter()
                .zip(&u.values)
                .map(|(&a, &b)| h(alpha, a, b))
                .collect(),
        ))
    }
}

fn physical(f: &ComplexField) -> Result<(), NonlinearityError> {
    match f.repr {
        Representation::Physical => Ok(()),
        Representation::Coefficient => Err(NonlinearityError::NotPhysical),
    }
}

pub fn g(alpha: f64, v: Complex64) -> Complex64 {
    if alpha <= 0.0 {
        return v;
    }
    let r = v.norm();
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    v * r.powf(alpha)
}

/// `H(α, v, u) = |v|^α u + α |v|^α (v/|v|) Re((v̄/|v|) u)` for `α > 0`.
pub fn h(alpha: f64, v: Complex64, u: Complex64) -> Complex64 {
    if alpha <= 0.0 {
        return u;
    }
    let r = v.norm();
    if r < ZERO_MODULUS {
        return Complex64::new(0.0, 0.0);
    }
    let n = v / r;
    let p = r.powf(alpha);
    p * (u + alpha * n * (n.conj() * u).re)
}

/// `H(α, v, ·)` as a real 2×2 matrix acting on `(Re u, Im u)`:
/// `|v|^α (I + α n nᵀ)` with `n = v/|v|`.
pub fn h_block(alpha: f64, v: Complex64) -> [[f64; 2]; 2] {
    if alpha <= 0.0 {
        return [[1.0, 0.0], [0.0, 1.0]];
    }
    let r = v.norm();
    if r < ZERO_MODULUS {
        return [[0.0; 2]; 2];
    }
    let (c, s) = (v.re / r, v.im / r);
    let p = r.powf(alpha);
    [
        [p * (1.0 + alpha * c * c), p * alpha * c * s],
        [p * alpha * c * s, p * (1.0 + alpha * s * s)],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * (1.0 + b.norm())
    }

    #[test]
    fn g_examples() {
        let cap = AlphaCap::new(2.0, 1).unwrap();
        let four = ComplexField::physical(vec![c(4.0, 0.0); 5]);
        let out = cap.g_eval(0.5, &four).unwrap();
        assert!(out.values.iter().all(|z| close(*z, c(8.0, 0.0), 1e-15)));
        let v = ComplexField::physical(vec![c(1.0, -2.0), c(0.0, 0.0), c(-3.0, 0.5)]);
        assert_eq!(cap.g_eval(-0.3, &v).unwrap(), v);
        assert!(close(g(1.0, c(3.0, 4.0)), c(15.0, 20.0), 1e-15));
        assert_eq!(g(0.7, c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn h_examples() {
        assert_eq!(h(0.4, c(0.0, 0.0), c(1.0, 2.0)), c(0.0, 0.0));
        assert_eq!(h(0.4, c(1e-301, 0.0), c(1.0, 2.0)), c(0.0, 0.0));
        assert!(close(h(1.0, c(1.0, 0.0), c(0.0, 1.0)), c(0.0, 1.0), 1e-15));
        let v = c(0.6, -1.3);
        assert!(close(h(2.0, v, v), 3.0 * v.norm_sqr() * v, 1e-14));
        assert_eq!(h(-1.0, v, c(2.0, 5.0)), c(2.0, 5.0));
    }

    #[test]
    fn cap_rules() {
        assert!(AlphaCap::new(3.0, 2).is_ok());
        assert!(AlphaCap::new(2.0, 3).is_ok());
        assert!(AlphaCap::new(2.5, 3).is_err());
        assert!(AlphaCap::new(0.0, 1).is_err());
        let cap = AlphaCap::new(0.5, 1).unwrap();
        let v = ComplexField::physical(vec![c(1.0, 0.0)]);
        assert!(matches!(
            cap.g_eval(0.6, &v),
            Err(NonlinearityError::AlphaAboveCap { .. })
        ));
        assert!(cap.h_eval(0.6, &v, &v).is_err());
        let coeff = ComplexField::coefficients(vec![c(1.0, 0.0)]);
        assert_eq!(cap.g_eval(0.2, &coeff), Err(NonlinearityError::NotPhysical));
    }

    fn complex() -> impl Strategy<Value = Complex64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| c(a, b))
    }

    fn nonzero() -> impl Strategy<Value = Complex64> {
        (0.2..3.0f64, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
    }

    proptest! {
        #[test]
        fn h_is_real_linear(alpha in 0.0..2.0f64, v in complex(), u1 in complex(), u2 in complex(), s in -2.0..2.0f64) {
            let lhs = h(alpha, v, u1 + s * u2);
            let rhs = h(alpha, v, u1) + s * h(alpha, v, u2);
            prop_assert!(close(lhs, rhs, 1e-12));
        }

        #[test]
        fn h_matches_block(alpha in 0.0..2.0f64, v in complex(), u in complex()) {
            let m = h_block(alpha, v);
            let got = c(m[0][0] * u.re + m[0][1] * u.im, m[1][0] * u.re + m[1][1] * u.im);
            prop_assert!(close(got, h(alpha, v, u), 1e-12));
        }

        #[test]
        fn h_bound(alpha in 0.01..2.0f64, v in complex(), u in complex()) {
            let bound = (alpha + 1.0) * v.norm().powf(alpha) * u.norm();
            prop_assert!(h(alpha, v, u).norm() <= bound * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn remainder_decays_superlinearly(alpha in 0.05..2.0f64,
            v in proptest::collection::vec(nonzero(), 16),
            u in proptest::collection::vec(complex(), 16)) {
            let r = |step: f64| -> f64 {
                v.iter().zip(&u).map(|(&a, &b)| {
                    (g(alpha, a + step * b) - g(alpha, a) - step * h(alpha, a, b)).norm_sqr()
                }).sum::<f64>().sqrt()
            };
            for step in [1e-2, 5e-3, 2.5e-3] {
                prop_assert!(r(step / 2.0) <= 0.3 * r(step));
            }
        }

        #[test]
        fn h_tends_to_identity(v in proptest::collection::vec(nonzero(), 8),
            u in proptest::collection::vec(complex(), 8)) {
            let dist = |alpha: f64| -> f64 {
                v.iter().zip(&u).map(|(&a, &b)| (h(alpha, a, b) - b).norm_sqr()).sum::<f64>().sqrt()
            };
            let d: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&a| dist(a)).collect();
            prop_assert!(d[1] <= d[0] && d[2] <= d[1]);
        }
    }
}
