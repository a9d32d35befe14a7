//! Boundary functions for multiplicative deformations.
//!
//! A deformation function is a finite Blaschke-type product with an
//! exponential prefactor,
//!
//! ```text
//!   R(a) = exp(i c a) * prod_k (z_k - a) / (z_k + a),     c >= 0,
//! ```
//!
//! where every zero `z_k` lies in the open upper half plane and the multiset
//! of zeros is closed under `z -> -conj(z)`. On the real line this gives
//! `R(0) = 1`, `|R(a)| = 1`, `R(-a) = conj(R(a)) = 1/R(a)`; in the upper
//! half strip `R` continues analytically with poles only at `a = -z_k`.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// Relative tolerance for checking that the zero multiset is closed under
/// `z -> -conj(z)`.
const ZERO_CLOSURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DeformationFunction {
    c: f64,
    zeros: Vec<C>,
}

impl DeformationFunction {
    pub fn new(c: f64, zeros: Vec<C>) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::ConfigInvalid(format!(
                "exponential coefficient must be finite and nonnegative, got {c}"
            )));
        }
        for z in &zeros {
            if !(z.im > 0.0) || !z.re.is_finite() {
                return Err(Error::ConfigInvalid(format!(
                    "zero {z} must lie in the open upper half plane"
                )));
            }
        }
        // The multiset must be closed under z -> -conj(z); otherwise R is not
        // unimodular on the real line.
        let mut used = vec![false; zeros.len()];
        for (i, z) in zeros.iter().enumerate() {
            if used[i] {
                continue;
            }
            let partner = C::new(-z.re, z.im);
            let scale = 1.0 + z.norm();
            let mut found = false;
            for (j, w) in zeros.iter().enumerate() {
                // A purely imaginary zero is its own partner.
                if used[j] || (i == j && z.re.abs() > ZERO_CLOSURE_TOL * scale) {
                    continue;
                }
                if (w - partner).norm() <= ZERO_CLOSURE_TOL * scale {
                    used[i] = true;
                    used[j] = true;
                    found = true;
                    break;
                }
            }
            if !found {
                return Err(Error::ConfigInvalid(format!(
                    "zero multiset is not closed under z -> -conj(z): no partner for {z}"
                )));
            }
        }
        Ok(DeformationFunction { c, zeros })
    }

    /// The constant function `R = 1` (no deformation).
    pub fn trivial() -> Self {
        DeformationFunction {
            c: 0.0,
            zeros: Vec::new(),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.c == 0.0 && self.zeros.is_empty()
    }

    pub fn exponential_coefficient(&self) -> f64 {
        self.c
    }

    pub fn zeros(&self) -> &[C] {
        &self.zeros
    }

    /// Value at a real argument (never singular: poles sit strictly below
    /// the real line).
    pub fn eval(&self, a: f64) -> C {
        let mut out = C::from_polar(1.0, self.c * a);
        for z in &self.zeros {
            out *= (z - a) / (z + a);
        }
        out
    }

    /// Analytic continuation to a complex argument. Errors with `PoleHit`
    /// when the argument lands on (or numerically at) a pole `-z_k`.
    pub fn eval_complex(&self, a: C) -> Result<C> {
        let mut out = (C::new(0.0, 1.0) * self.c * a).exp();
        for z in &self.zeros {
            let den = z + a;
            if den.norm() <= 1e-12 * (1.0 + z.norm()) {
                return Err(Error::PoleHit(format!(
                    "argument {a} hits the pole at {}",
                    -z
                )));
            }
            out *= (z - a) / den;
        }
        Ok(out)
    }

    /// First derivative at the origin,
    /// `R'(0) = i (c + 2 sum_k Im z_k / |z_k|^2)`, a purely imaginary number
    /// because the zero multiset is closed under `z -> -conj(z)`.
    pub fn derivative_at_zero(&self) -> C {
        let mut gamma = self.c;
        for z in &self.zeros {
            gamma += 2.0 * z.im / z.norm_sqr();
        }
        C::new(0.0, gamma)
    }

    /// Largest residual of the real-line structure relations over the given
    /// sample arguments: `R(0) = 1`, `|R(a)| = 1`, `R(a) R(-a) = 1`,
    /// `conj(R(a)) = R(-a)`.
    pub fn relation_residual(&self, samples: &[f64]) -> f64 {
        let mut worst = (self.eval(0.0) - C::new(1.0, 0.0)).norm();
        for &a in samples {
            let plus = self.eval(a);
            let minus = self.eval(-a);
            worst = worst.max((plus.norm() - 1.0).abs());
            worst = worst.max((plus * minus - C::new(1.0, 0.0)).norm());
            worst = worst.max((plus.conj() - minus).norm());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped() -> DeformationFunction {
        DeformationFunction::new(
            0.25,
            vec![C::new(0.0, 2.0), C::new(1.0, 0.5), C::new(-1.0, 0.5)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_nonclosed_or_lower_half_zeros() {
        assert!(DeformationFunction::new(0.0, vec![C::new(1.0, 0.5)]).is_err());
        assert!(DeformationFunction::new(0.0, vec![C::new(0.0, -1.0)]).is_err());
        assert!(DeformationFunction::new(-0.1, vec![]).is_err());
        assert!(DeformationFunction::new(0.0, vec![C::new(0.0, 1.0)]).is_ok());
    }

    #[test]
    fn real_line_relations_hold() {
        let r = shipped();
        let samples: Vec<f64> = (0..60)
            .flat_map(|i| {
                let a = 1e-3 * (1e7f64).powf(i as f64 / 59.0);
                [a, -a]
            })
            .collect();
        assert!(r.relation_residual(&samples) < 1e-12);
    }

    #[test]
    fn single_imaginary_zero_has_closed_form() {
        // zeros = {i}: R(a) = (i - a)/(i + a); R(1) = (i-1)/(i+1) = i.
        let r = DeformationFunction::new(0.0, vec![C::new(0.0, 1.0)]).unwrap();
        assert!((r.eval(1.0) - C::new(0.0, 1.0)).norm() < 1e-15);
        assert!((r.eval(0.0) - C::new(1.0, 0.0)).norm() < 1e-15);
        // R(2) = (i-2)/(i+2) = (-3 + 4i)/5.
        assert!((r.eval(2.0) - C::new(-0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let r = shipped();
        let h = 1e-6;
        let fd = (r.eval(h) - r.eval(-h)) / (2.0 * h);
        let exact = r.derivative_at_zero();
        assert!(exact.re.abs() < 1e-15, "derivative must be purely imaginary");
        assert!((fd - exact).norm() < 1e-9, "fd {fd} vs exact {exact}");
    }

    #[test]
    fn complex_continuation_flags_poles() {
        let r = DeformationFunction::new(0.0, vec![C::new(0.0, 1.0)]).unwrap();
        assert!(matches!(
            r.eval_complex(C::new(0.0, -1.0)),
            Err(Error::PoleHit(_))
        ));
        // Regular points evaluate and agree with the real-line values.
        let v = r.eval_complex(C::new(2.0, 0.0)).unwrap();
        assert!((v - r.eval(2.0)).norm() < 1e-15);
    }
}
