//! Multiplicative deformations of the tensor product.
//!
//! A deformation is a pair `(R, Q)` of a boundary function and an admissible
//! matrix. Its two-point multiplier on momentum space is
//!
//! ```text
//!   rho2(p, q) = R(-p.Qq),
//! ```
//!
//! which is unimodular on real momenta and satisfies `rho2(p, -p) = 1`,
//! `rho2(q, p) = rho2(-p, q) = rho2(p, q)^{-1}` and
//! `conj(rho2(-q, -p)) = rho2(p, q)`. The deformed product of a degree-`n1`
//! and a degree-`n2` term multiplies the momentum representation of their
//! tensor product by `prod_{l <= n1 < r} rho2(p_l, p_r)^{-1}`, realised here
//! by attaching pair kernels across the two blocks — an exactly associative
//! operation, because any bracketing of a multiple product accumulates the
//! same multiset of cross-block kernels.
//!
//! The same pair `(R, Q)` drives the warped shifts `tau_x`, which multiply
//! each factor's dual-lattice transform by `p -> R(x.p)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::element::{PairKernel, TensorElement, TensorTerm};
use crate::error::Result;
use crate::grid::Vfield;
use crate::poincare::LorentzMatrix;
use crate::qmatrix::QMatrix;
use crate::rfunc::DeformationFunction;

type C = Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeDeformation {
    r: DeformationFunction,
    q: QMatrix,
}

impl MultiplicativeDeformation {
    pub fn new(r: DeformationFunction, q: QMatrix) -> Self {
        MultiplicativeDeformation { r, q }
    }

    /// The undeformed case `rho2 = 1` for the given dimension.
    pub fn trivial(d: usize) -> Result<Self> {
        Ok(MultiplicativeDeformation {
            r: DeformationFunction::trivial(),
            q: QMatrix::new(d, 0.0, 0.0)?,
        })
    }

    pub fn r(&self) -> &DeformationFunction {
        &self.r
    }

    pub fn q(&self) -> &QMatrix {
        &self.q
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// Whether the two-point multiplier is identically 1.
    pub fn is_effectively_trivial(&self) -> bool {
        self.r.is_trivial() || (self.q.kappa() == 0.0 && self.q.kappa_prime() == 0.0)
    }

    /// Two-point multiplier at real momenta.
    pub fn rho2(&self, p: &Vfield, q: &Vfield) -> C {
        self.r.eval(-self.q.pairing(p, q))
    }

    /// Full `n`-point multiplier `prod_{l < r} rho2(p_l, p_r)`.
    pub fn rho_n(&self, points: &[Vfield]) -> C {
        let mut out = C::new(1.0, 0.0);
        for l in 0..points.len() {
            for r in (l + 1)..points.len() {
                out *= self.rho2(&points[l], &points[r]);
            }
        }
        out
    }

    /// The deformation adapted to the opposite wedge: `Q -> -Q`.
    pub fn opposite(&self) -> MultiplicativeDeformation {
        MultiplicativeDeformation {
            r: self.r.clone(),
            q: self.q.negate(),
        }
    }

    /// Scales the deformation strength: `Q -> lambda Q`.
    pub fn scaled(&self, lambda: f64) -> MultiplicativeDeformation {
        MultiplicativeDeformation {
            r: self.r.clone(),
            q: self.q.scale(lambda),
        }
    }

    /// Covariant transport of the matrix part under a Lorentz
    /// transformation (with the time-orientation sign).
    pub fn with_conjugated_q(&self, l: &LorentzMatrix) -> Result<MultiplicativeDeformation> {
        Ok(MultiplicativeDeformation {
            r: self.r.clone(),
            q: self.q.lorentz_conjugate(l)?,
        })
    }
}

/// Deformed product of two algebra elements. With a trivial deformation this
/// reduces bit-for-bit to the plain tensor product.
pub fn deformed_product(
    def: &Arc<MultiplicativeDeformation>,
    a: &TensorElement,
    b: &TensorElement,
) -> Result<TensorElement> {
    if def.is_effectively_trivial() {
        return a.tensor_product(b);
    }
    a.grid().ensure_same(b.grid())?;
    let cap = a.grid().n_trunc();
    let zero = C::new(0.0, 0.0);
    let mut terms: Vec<TensorTerm> = Vec::new();
    // Scalar blocks deform trivially (there are no cross pairs).
    if b.scalar_part() != zero {
        for t in a.terms() {
            terms.push(scaled_term(t, b.scalar_part()));
        }
    }
    if a.scalar_part() != zero {
        for t in b.terms() {
            terms.push(scaled_term(t, a.scalar_part()));
        }
    }
    for t1 in a.terms() {
        for t2 in b.terms() {
            let n1 = t1.degree();
            let n = n1 + t2.degree();
            if n > cap {
                return Err(crate::error::Error::TruncationOverflow { degree: n, cap });
            }
            let mut factors = t1.factors.clone();
            factors.extend(t2.factors.iter().cloned());
            let mut kernels = t1.kernels.clone();
            kernels.extend(t2.kernels.iter().map(|k| PairKernel {
                left: k.left + n1,
                right: k.right + n1,
                power: k.power,
                deformation: k.deformation.clone(),
            }));
            for l in 0..n1 {
                for r in n1..n {
                    kernels.push(PairKernel {
                        left: l,
                        right: r,
                        power: -1,
                        deformation: def.clone(),
                    });
                }
            }
            terms.push(TensorTerm {
                coeff: t1.coeff * t2.coeff,
                factors,
                kernels,
            });
        }
    }
    TensorElement::from_terms(
        *a.grid(),
        a.scalar_part() * b.scalar_part(),
        terms,
    )
}

fn scaled_term(t: &TensorTerm, c: C) -> TensorTerm {
    TensorTerm {
        coeff: t.coeff * c,
        factors: t.factors.clone(),
        kernels: t.kernels.clone(),
    }
}

/// Warped shift `tau_x`: multiplies every factor's dual-lattice transform by
/// `p -> R(x.p)`. Kernels, coefficients and the scalar part are untouched;
/// the factors come back supported on the full grid.
pub fn tau_shift(
    def: &MultiplicativeDeformation,
    x: &Vfield,
    e: &TensorElement,
) -> Result<TensorElement> {
    let mut terms = Vec::with_capacity(e.terms().len());
    for t in e.terms() {
        let mut factors = Vec::with_capacity(t.degree());
        for f in &t.factors {
            let mut dual = f.dual_transform();
            dual.multiply(|p| def.r().eval(x.mdot(p)));
            factors.push(Arc::new(dual.inverse_transform()));
        }
        terms.push(TensorTerm {
            coeff: t.coeff,
            factors,
            kernels: t.kernels.clone(),
        });
    }
    TensorElement::from_terms(*e.grid(), e.scalar_part(), terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpacetimeGrid;
    use crate::testfn::TestFunction;

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::new(2, 16, 4.0, 4).unwrap()
    }

    fn shipped_deformation() -> Arc<MultiplicativeDeformation> {
        let r = DeformationFunction::new(
            0.25,
            vec![C::new(0.0, 2.0), C::new(1.0, 0.5), C::new(-1.0, 0.5)],
        )
        .unwrap();
        let q = QMatrix::new(2, 1.0, 0.0).unwrap();
        Arc::new(MultiplicativeDeformation::new(r, q))
    }

    fn packet(g: SpacetimeGrid, c: [f64; 2], k: [f64; 2]) -> TensorElement {
        TensorElement::from_single(
            TestFunction::bump(
                g,
                &Vfield::new(&c),
                &Vfield::new(&[1.2, 1.2]),
                &Vfield::new(&k),
            )
            .unwrap(),
        )
    }

    fn sample_tuples() -> Vec<Vec<Vfield>> {
        let raw: [&[[f64; 2]]; 5] = [
            &[[0.3, -0.7]],
            &[[0.3, -0.7], [-0.4, 0.9]],
            &[[1.0, 1.0], [0.5, -1.5]],
            &[[0.2, 0.1], [-0.3, 0.8], [1.2, -0.2]],
            &[[0.2, 0.1], [-0.3, 0.8], [1.2, -0.2], [-0.6, -0.4]],
        ];
        raw.iter()
            .map(|tuple| tuple.iter().map(|p| Vfield::new(p)).collect())
            .collect()
    }

    #[test]
    fn rho2_structure_relations() {
        let def = shipped_deformation();
        let pairs = [
            (Vfield::new(&[0.7, 0.2]), Vfield::new(&[-0.4, 1.1])),
            (Vfield::new(&[1.3, -0.5]), Vfield::new(&[0.2, 0.9])),
        ];
        for (p, q) in &pairs {
            let v = def.rho2(p, q);
            assert!((def.rho2(p, &p.neg()) - C::new(1.0, 0.0)).norm() < 1e-14);
            assert!((def.rho2(q, p) - v.powi(-1)).norm() < 1e-13);
            assert!((def.rho2(&p.neg(), q) - v.powi(-1)).norm() < 1e-13);
            assert!((def.rho2(&q.neg(), &p.neg()).conj() - v).norm() < 1e-13);
            assert!((v.norm() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn trivial_deformation_reduces_to_tensor_product_bitwise() {
        let g = grid();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let trivial = Arc::new(MultiplicativeDeformation::trivial(2).unwrap());
        let plain = f.tensor_product(&h).unwrap();
        let def = deformed_product(&trivial, &f, &h).unwrap();
        assert_eq!(plain.terms().len(), def.terms().len());
        for (a, b) in plain.terms().iter().zip(def.terms()) {
            assert_eq!(a.coeff, b.coeff);
            assert!(b.kernels.is_empty());
            for (fa, fb) in a.factors.iter().zip(&b.factors) {
                assert_eq!(fa.values(), fb.values());
            }
        }
        // Scaling the shipped deformation to zero strength is trivial too.
        let zeroed = Arc::new(shipped_deformation().scaled(0.0));
        assert!(zeroed.is_effectively_trivial());
    }

    #[test]
    fn deformed_product_is_associative() {
        let g = grid();
        let def = shipped_deformation();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]).scale(C::new(0.3, 0.8));
        let k = packet(g, [-0.5, 0.0], [0.0, 1.0]);
        let fh = deformed_product(&def, &f, &h).unwrap();
        let hk = deformed_product(&def, &h, &k).unwrap();
        let lhs = deformed_product(&def, &fh, &k).unwrap();
        let rhs = deformed_product(&def, &f, &hk).unwrap();
        assert!(lhs.max_component_diff(&rhs, &sample_tuples()) < 1e-12);
    }

    #[test]
    fn unit_is_neutral_for_deformed_product() {
        let g = grid();
        let def = shipped_deformation();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let ff = deformed_product(&def, &f, &f).unwrap();
        let u = TensorElement::unit(g);
        let left = deformed_product(&def, &u, &ff).unwrap();
        let right = deformed_product(&def, &ff, &u).unwrap();
        let samples = sample_tuples();
        assert!(left.max_component_diff(&ff, &samples) < 1e-14);
        assert!(right.max_component_diff(&ff, &samples) < 1e-14);
    }

    #[test]
    fn star_is_antimultiplicative_for_deformed_product() {
        // (f x_rho h)* = h* x_rho f* with the SAME deformation: the kernel
        // slot reversal and rho2 antisymmetry compensate.
        let g = grid();
        let def = shipped_deformation();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]).scale(C::new(0.7, -0.1));
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let lhs = deformed_product(&def, &f, &h).unwrap().star();
        let rhs = deformed_product(&def, &h.star(), &f.star()).unwrap();
        assert!(lhs.max_component_diff(&rhs, &sample_tuples()) < 1e-12);
    }

    #[test]
    fn deformed_product_momentum_kernel_is_rho2_inverse() {
        let g = grid();
        let def = shipped_deformation();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let plain = f.tensor_product(&h).unwrap();
        let deformed = deformed_product(&def, &f, &h).unwrap();
        let p1 = Vfield::new(&[0.8, -0.3]);
        let p2 = Vfield::new(&[-0.1, 0.9]);
        let ratio = deformed.eval_component(&[p1, p2]) / plain.eval_component(&[p1, p2]);
        let want = def.rho2(&p1, &p2).powi(-1);
        assert!((ratio - want).norm() < 1e-12);
    }

    #[test]
    fn tau_shift_at_origin_is_identity_and_composes() {
        let g = grid();
        let def = shipped_deformation();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let fh = deformed_product(&def, &f, &packet(g, [0.5, -0.5], [-0.3, 0.6])).unwrap();
        let samples = sample_tuples();
        let at_zero = tau_shift(&def, &Vfield::zero(2), &fh).unwrap();
        assert!(at_zero.max_component_diff(&fh, &samples) < 1e-12);
        // tau_x tau_y = tau_{x+y} would need R multiplicative; what always
        // holds is commutativity of the multipliers.
        let x = Vfield::new(&[0.7, 0.3]);
        let y = Vfield::new(&[-0.2, 1.1]);
        let xy = tau_shift(&def, &y, &tau_shift(&def, &x, &fh).unwrap()).unwrap();
        let yx = tau_shift(&def, &x, &tau_shift(&def, &y, &fh).unwrap()).unwrap();
        assert!(xy.max_component_diff(&yx, &samples) < 1e-11);
    }
}
