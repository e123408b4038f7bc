//! Rational transfer functions in the Laplace variable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `num(s) / den(s)` with coefficients in descending powers of `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalTF {
    pub num: Vec<f64>,
    pub den: Vec<f64>,
}

fn trim_leading_zeros(coeffs: &[f64]) -> &[f64] {
    let first = coeffs.iter().position(|&c| c != 0.0).unwrap_or(coeffs.len());
    &coeffs[first..]
}

fn horner(coeffs: &[f64], s: Complex64) -> Complex64 {
    coeffs
        .iter()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

impl RationalTF {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let tf = RationalTF { num, den };
        tf.validate()?;
        Ok(tf)
    }

    pub fn validate(&self) -> Result<()> {
        let den = trim_leading_zeros(&self.den);
        if den.is_empty() {
            return Err(Error::validation("denominator", "all coefficients are zero"));
        }
        if self.num.iter().chain(&self.den).any(|c| !c.is_finite()) {
            return Err(Error::validation("coefficients", "non-finite value"));
        }
        if self.num_degree() > self.den_degree() {
            return Err(Error::validation(
                "transfer function",
                format!(
                    "improper: numerator degree {} exceeds denominator degree {}",
                    self.num_degree(),
                    self.den_degree()
                ),
            ));
        }
        Ok(())
    }

    pub fn num_degree(&self) -> usize {
        trim_leading_zeros(&self.num).len().saturating_sub(1)
    }

    pub fn den_degree(&self) -> usize {
        trim_leading_zeros(&self.den).len().saturating_sub(1)
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        horner(&self.num, s) / horner(&self.den, s)
    }

    /// Value on the imaginary axis at `omega` rad/s.
    pub fn eval_jw(&self, omega: f64) -> Complex64 {
        self.eval(Complex64::new(0.0, omega))
    }

    /// Value at `f` Hz.
    pub fn eval_hz(&self, f: f64) -> Complex64 {
        self.eval_jw(2.0 * std::f64::consts::PI * f)
    }

    /// `H(0)`, or `None` when the denominator has a pole at the origin.
    pub fn dc_gain(&self) -> Option<f64> {
        let d0 = *self.den.last()?;
        if d0 == 0.0 {
            return None;
        }
        Some(self.num.last().copied().unwrap_or(0.0) / d0)
    }
}
