//! Poincaré transformations on the finite lattice.
//!
//! A transform is a pair `(a, L)` of a translation vector and a Lorentz
//! matrix, plus an antilinearity flag. The distinguished reflection
//! `j(x0, x1, x2, ...) = (-x0, -x1, x2, ...)` acts antilinearly on test
//! functions; all other shipped generators act linearly.

use crate::error::{Error, Result};
use crate::grid::{Vfield, MAX_D};

/// A real `d x d` Lorentz matrix stored densely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzMatrix {
    d: usize,
    m: [[f64; MAX_D]; MAX_D],
}

impl LorentzMatrix {
    pub fn identity(d: usize) -> Self {
        let mut m = [[0.0; MAX_D]; MAX_D];
        for i in 0..d {
            m[i][i] = 1.0;
        }
        LorentzMatrix { d, m }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.m[i][j] = v;
    }

    /// Boost in the `x0`-`x1` plane with rapidity `t`.
    pub fn boost01(d: usize, t: f64) -> Self {
        let mut out = Self::identity(d);
        let (s, c) = (t.sinh(), t.cosh());
        out.m[0][0] = c;
        out.m[0][1] = s;
        out.m[1][0] = s;
        out.m[1][1] = c;
        out
    }

    /// Euclidean rotation by `angle` in the plane of spatial axes `i`, `j`.
    pub fn rotation(d: usize, i: usize, j: usize, angle: f64) -> Result<Self> {
        if i == 0 || j == 0 || i == j || i >= d || j >= d {
            return Err(Error::ConfigInvalid(format!(
                "rotation plane ({i}, {j}) invalid in dimension {d}"
            )));
        }
        let mut out = Self::identity(d);
        let (s, c) = (angle.sin(), angle.cos());
        out.m[i][i] = c;
        out.m[i][j] = -s;
        out.m[j][i] = s;
        out.m[j][j] = c;
        Ok(out)
    }

    /// The matrix part of the reflection `j`: negates axes 0 and 1.
    pub fn reflection01(d: usize) -> Self {
        let mut out = Self::identity(d);
        out.m[0][0] = -1.0;
        out.m[1][1] = -1.0;
        out
    }

    pub fn mul(&self, other: &LorentzMatrix) -> LorentzMatrix {
        debug_assert_eq!(self.d, other.d);
        let mut out = LorentzMatrix {
            d: self.d,
            m: [[0.0; MAX_D]; MAX_D],
        };
        for i in 0..self.d {
            for j in 0..self.d {
                let mut s = 0.0;
                for k in 0..self.d {
                    s += self.m[i][k] * other.m[k][j];
                }
                out.m[i][j] = s;
            }
        }
        out
    }

    pub fn apply(&self, v: &Vfield) -> Vfield {
        debug_assert_eq!(self.d, v.dim());
        let mut out = Vfield::zero(self.d);
        for i in 0..self.d {
            let mut s = 0.0;
            for j in 0..self.d {
                s += self.m[i][j] * v.get(j);
            }
            out.set(i, s);
        }
        out
    }

    /// Inverse via the metric: `L^{-1} = eta L^T eta`. Exact for matrices
    /// preserving the Minkowski form.
    pub fn inverse(&self) -> LorentzMatrix {
        let mut out = LorentzMatrix {
            d: self.d,
            m: [[0.0; MAX_D]; MAX_D],
        };
        let eta = |i: usize| if i == 0 { 1.0 } else { -1.0 };
        for i in 0..self.d {
            for j in 0..self.d {
                out.m[i][j] = eta(i) * self.m[j][i] * eta(j);
            }
        }
        out
    }

    /// Maximum absolute entry of `L^T eta L - eta`; zero (to rounding) iff
    /// the matrix preserves the Minkowski form.
    pub fn metric_defect(&self) -> f64 {
        let eta = |i: usize| if i == 0 { 1.0 } else { -1.0 };
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            for j in 0..self.d {
                let mut s = 0.0;
                for k in 0..self.d {
                    s += self.m[k][i] * eta(k) * self.m[k][j];
                }
                let target = if i == j { eta(i) } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// Whether the transform preserves the direction of time.
    pub fn is_orthochronous(&self) -> bool {
        self.m[0][0] > 0.0
    }
}

/// A Poincaré transformation `x -> L x + a`, acting on test functions by
/// pullback, antilinearly when `antilinear` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareTransform {
    pub translation: Vfield,
    pub lorentz: LorentzMatrix,
    /// Set for the reflection `j` (and odd products involving it); the
    /// pullback then composes with complex conjugation.
    pub antilinear: bool,
}

impl PoincareTransform {
    /// Tolerance for the Minkowski-form preservation check.
    pub const METRIC_TOL: f64 = 1e-12;

    pub fn new(translation: Vfield, lorentz: LorentzMatrix, antilinear: bool) -> Result<Self> {
        if translation.dim() != lorentz.dim() {
            return Err(Error::ConfigInvalid(
                "translation and Lorentz part have different dimensions".into(),
            ));
        }
        let defect = lorentz.metric_defect();
        if defect > Self::METRIC_TOL {
            return Err(Error::ConfigInvalid(format!(
                "matrix does not preserve the Minkowski form (defect {defect:.3e})"
            )));
        }
        Ok(PoincareTransform {
            translation,
            lorentz,
            antilinear,
        })
    }

    pub fn identity(d: usize) -> Self {
        PoincareTransform {
            translation: Vfield::zero(d),
            lorentz: LorentzMatrix::identity(d),
            antilinear: false,
        }
    }

    pub fn translation_by(a: Vfield) -> Self {
        let d = a.dim();
        PoincareTransform {
            translation: a,
            lorentz: LorentzMatrix::identity(d),
            antilinear: false,
        }
    }

    pub fn boost01(d: usize, rapidity: f64) -> Self {
        PoincareTransform {
            translation: Vfield::zero(d),
            lorentz: LorentzMatrix::boost01(d, rapidity),
            antilinear: false,
        }
    }

    /// The antilinear wedge reflection `j`.
    pub fn reflection_j(d: usize) -> Self {
        PoincareTransform {
            translation: Vfield::zero(d),
            lorentz: LorentzMatrix::reflection01(d),
            antilinear: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.dim()
    }

    /// Group composition: `(self * other)(x) = self(other(x))`.
    pub fn compose(&self, other: &PoincareTransform) -> PoincareTransform {
        PoincareTransform {
            translation: self.lorentz.apply(&other.translation).add(&self.translation),
            lorentz: self.lorentz.mul(&other.lorentz),
            antilinear: self.antilinear ^ other.antilinear,
        }
    }

    pub fn inverse(&self) -> PoincareTransform {
        let li = self.lorentz.inverse();
        PoincareTransform {
            translation: li.apply(&self.translation).neg(),
            lorentz: li,
            antilinear: self.antilinear,
        }
    }

    pub fn apply(&self, x: &Vfield) -> Vfield {
        self.lorentz.apply(x).add(&self.translation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boost_preserves_metric() {
        let b = LorentzMatrix::boost01(2, 0.7);
        assert!(b.metric_defect() < 1e-14);
        let b4 = LorentzMatrix::boost01(4, -1.3);
        assert!(b4.metric_defect() < 1e-13);
    }

    #[test]
    fn rotation_preserves_metric_and_rejects_time_axis() {
        let r = LorentzMatrix::rotation(4, 2, 3, 0.4).unwrap();
        assert!(r.metric_defect() < 1e-15);
        assert!(LorentzMatrix::rotation(4, 0, 1, 0.4).is_err());
        assert!(LorentzMatrix::rotation(2, 1, 1, 0.4).is_err());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let b = LorentzMatrix::boost01(2, 0.9);
        let prod = b.mul(&b.inverse());
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - target).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reflection_is_antilinear_and_involutive() {
        let j = PoincareTransform::reflection_j(2);
        assert!(j.antilinear);
        let jj = j.compose(&j);
        assert!(!jj.antilinear);
        assert_eq!(jj.lorentz, LorentzMatrix::identity(2));
        // j is antichronous but metric preserving.
        assert!(!j.lorentz.is_orthochronous());
        assert!(j.lorentz.metric_defect() < 1e-15);
    }

    #[test]
    fn affine_composition_order() {
        let a = PoincareTransform::translation_by(Vfield::new(&[1.0, 0.0]));
        let b = PoincareTransform::boost01(2, 0.5);
        let ab = a.compose(&b);
        let x = Vfield::new(&[0.3, -0.2]);
        let direct = a.apply(&b.apply(&x));
        let composed = ab.apply(&x);
        assert!(direct.sub(&composed).euclid_norm() < 1e-14);
    }

    #[test]
    fn transform_inverse_roundtrip() {
        let t = PoincareTransform::new(
            Vfield::new(&[0.4, -1.1]),
            LorentzMatrix::boost01(2, 0.31),
            false,
        )
        .unwrap();
        let x = Vfield::new(&[0.2, 0.9]);
        let y = t.inverse().apply(&t.apply(&x));
        assert!(x.sub(&y).euclid_norm() < 1e-13);
    }
}
