use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Which basis the values of a [`ComplexField`] are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// One value per collocation node.
    Physical,
    /// One value per basis mode (sine or Fourier amplitudes; nodal values on
    /// the radial grid, which has no spectral basis).
    Coefficient,
}

/// A complex-valued discrete function on some [`Domain`](super::Domain).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub values: Vec<Complex64>,
    pub repr: Representation,
}

impl ComplexField {
    pub fn physical(values: Vec<Complex64>) -> Self {
        Self {
            values,
            repr: Representation::Physical,
        }
    }

    pub fn coefficients(values: Vec<Complex64>) -> Self {
        Self {
            values,
            repr: Representation::Coefficient,
        }
    }

    pub fn zeros(len: usize, repr: Representation) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); len],
            repr,
        }
    }

    pub fn from_real(values: &[f64]) -> Self {
        Self::physical(values.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|z| z * factor).collect(),
            repr: self.repr,
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|z| z * factor).collect(),
            repr: self.repr,
        }
    }

    /// `self + factor * other`; representations must agree.
    pub fn axpy(&self, factor: Complex64, other: &ComplexField) -> Self {
        debug_assert_eq!(self.repr, other.repr);
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + factor * b)
                .collect(),
            repr: self.repr,
        }
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn add(&self, other: &ComplexField) -> Self {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            values: self.values.iter().map(|&z| f(z)).collect(),
            repr: self.repr,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}
