//! Truncated graded tensor algebra of test functions.
//!
//! An element is a finite sum
//!
//! ```text
//!   F = s * 1  +  sum_t  c_t (f_{t,1} x ... x f_{t,n_t}) . K_t
//! ```
//!
//! of separable tensor terms: a complex coefficient, a list of one-variable
//! factors, and a list of momentum-space pair kernels. A pair kernel
//! `(l, r, e)` multiplies the term's momentum representation by
//! `rho2(p_l, p_r)^e`, the two-point multiplier of a deformation; kernels are
//! how deformed products stay exactly associative in this representation.
//! The degree of any single term is capped by the grid's truncation level;
//! products that would exceed it fail with `TruncationOverflow`.
//!
//! The momentum representation of a degree-`n` term is
//! `c * prod_a ft_a(p_a) * prod_K rho2(p_l, p_r)^e` with `ft` the lattice
//! Fourier transform, and the involution acts by
//! `F*_n(p_1..p_n) = conj(F_n(-p_n..-p_1))`, which on terms reverses and
//! conjugates the factors and maps each kernel `(l, r, e)` to
//! `(n-1-r, n-1-l, e)`.

use std::sync::Arc;

use num_complex::Complex64;

use crate::deform::MultiplicativeDeformation;
use crate::error::{Error, Result};
use crate::grid::{MultiIndexIter, SpacetimeGrid, Vfield, Wedge};
use crate::poincare::PoincareTransform;
use crate::testfn::TestFunction;

type C = Complex64;

/// Soft guard for the dual-lattice degree-2 norm: the double loop touches
/// `volume^2` point pairs, so large grids are rejected instead of hanging.
const DUAL_NORM_MAX_PAIRS: f64 = 2.2e7;

/// Momentum-space two-point multiplier `rho2(p_left, p_right)^power`
/// attached to a tensor term. Invariant: `left < right < degree`.
#[derive(Debug, Clone)]
pub struct PairKernel {
    pub left: usize,
    pub right: usize,
    pub power: i32,
    pub deformation: Arc<MultiplicativeDeformation>,
}

impl PairKernel {
    pub fn eval(&self, points: &[Vfield]) -> C {
        self.deformation
            .rho2(&points[self.left], &points[self.right])
            .powi(self.power)
    }
}

/// One separable summand of an algebra element.
#[derive(Debug, Clone)]
pub struct TensorTerm {
    pub coeff: C,
    pub factors: Vec<Arc<TestFunction>>,
    pub kernels: Vec<PairKernel>,
}

impl TensorTerm {
    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    fn scaled(&self, c: C) -> TensorTerm {
        TensorTerm {
            coeff: self.coeff * c,
            factors: self.factors.clone(),
            kernels: self.kernels.clone(),
        }
    }

    /// Concatenation `t1 x t2` with `t2`'s slots shifted past `t1`'s.
    fn concat(t1: &TensorTerm, t2: &TensorTerm) -> TensorTerm {
        let shift = t1.degree();
        let mut factors = t1.factors.clone();
        factors.extend(t2.factors.iter().cloned());
        let mut kernels = t1.kernels.clone();
        kernels.extend(t2.kernels.iter().map(|k| PairKernel {
            left: k.left + shift,
            right: k.right + shift,
            power: k.power,
            deformation: k.deformation.clone(),
        }));
        TensorTerm {
            coeff: t1.coeff * t2.coeff,
            factors,
            kernels,
        }
    }

    /// Momentum representation at a tuple of real momenta (one per slot).
    pub fn eval(&self, points: &[Vfield]) -> C {
        debug_assert_eq!(points.len(), self.degree());
        let mut v = self.coeff;
        for (a, f) in self.factors.iter().enumerate() {
            v *= f.fourier_at(&points[a]);
        }
        for k in &self.kernels {
            v *= k.eval(points);
        }
        v
    }
}

/// An element of the truncated graded algebra.
#[derive(Debug, Clone)]
pub struct TensorElement {
    grid: SpacetimeGrid,
    scalar: C,
    terms: Vec<TensorTerm>,
}

impl TensorElement {
    pub fn zero(grid: SpacetimeGrid) -> Self {
        TensorElement {
            grid,
            scalar: C::new(0.0, 0.0),
            terms: Vec::new(),
        }
    }

    /// The algebra unit.
    pub fn unit(grid: SpacetimeGrid) -> Self {
        TensorElement {
            grid,
            scalar: C::new(1.0, 0.0),
            terms: Vec::new(),
        }
    }

    /// Embeds a one-variable test function as a degree-1 element.
    pub fn from_single(f: TestFunction) -> Self {
        let grid = *f.grid();
        TensorElement {
            grid,
            scalar: C::new(0.0, 0.0),
            terms: vec![TensorTerm {
                coeff: C::new(1.0, 0.0),
                factors: vec![Arc::new(f)],
                kernels: Vec::new(),
            }],
        }
    }

    pub fn from_terms(grid: SpacetimeGrid, scalar: C, terms: Vec<TensorTerm>) -> Result<Self> {
        for t in &terms {
            if t.degree() > grid.n_trunc() {
                return Err(Error::TruncationOverflow {
                    degree: t.degree(),
                    cap: grid.n_trunc(),
                });
            }
            for f in &t.factors {
                grid.ensure_same(f.grid())?;
            }
            for k in &t.kernels {
                if k.left >= k.right || k.right >= t.degree() {
                    return Err(Error::ConfigInvalid(format!(
                        "pair kernel slots ({}, {}) invalid for degree {}",
                        k.left,
                        k.right,
                        t.degree()
                    )));
                }
            }
        }
        Ok(TensorElement {
            grid,
            scalar,
            terms,
        })
    }

    pub fn grid(&self) -> &SpacetimeGrid {
        &self.grid
    }

    pub fn scalar_part(&self) -> C {
        self.scalar
    }

    pub fn terms(&self) -> &[TensorTerm] {
        &self.terms
    }

    pub fn max_degree(&self) -> usize {
        self.terms.iter().map(|t| t.degree()).max().unwrap_or(0)
    }

    pub fn has_kernels(&self) -> bool {
        self.terms.iter().any(|t| !t.kernels.is_empty())
    }

    pub fn scale(&self, c: C) -> TensorElement {
        TensorElement {
            grid: self.grid,
            scalar: self.scalar * c,
            terms: self.terms.iter().map(|t| t.scaled(c)).collect(),
        }
    }

    pub fn add(&self, other: &TensorElement) -> Result<TensorElement> {
        self.grid.ensure_same(&other.grid)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(TensorElement {
            grid: self.grid,
            scalar: self.scalar + other.scalar,
            terms,
        })
    }

    pub fn sub(&self, other: &TensorElement) -> Result<TensorElement> {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    /// Graded tensor product. Errors when any resulting term would exceed
    /// the grid's truncation level.
    pub fn tensor_product(&self, other: &TensorElement) -> Result<TensorElement> {
        self.grid.ensure_same(&other.grid)?;
        let cap = self.grid.n_trunc();
        let zero = C::new(0.0, 0.0);
        let mut terms = Vec::new();
        if other.scalar != zero {
            for t in &self.terms {
                terms.push(t.scaled(other.scalar));
            }
        }
        if self.scalar != zero {
            for t in &other.terms {
                terms.push(t.scaled(self.scalar));
            }
        }
        for t1 in &self.terms {
            for t2 in &other.terms {
                let n = t1.degree() + t2.degree();
                if n > cap {
                    return Err(Error::TruncationOverflow { degree: n, cap });
                }
                terms.push(TensorTerm::concat(t1, t2));
            }
        }
        Ok(TensorElement {
            grid: self.grid,
            scalar: self.scalar * other.scalar,
            terms,
        })
    }

    /// The involution `F*_n(p_1..p_n) = conj(F_n(-p_n..-p_1))`.
    pub fn star(&self) -> TensorElement {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let n = t.degree();
                TensorTerm {
                    coeff: t.coeff.conj(),
                    factors: t
                        .factors
                        .iter()
                        .rev()
                        .map(|f| Arc::new(f.conj()))
                        .collect(),
                    kernels: t
                        .kernels
                        .iter()
                        .map(|k| PairKernel {
                            left: n - 1 - k.right,
                            right: n - 1 - k.left,
                            power: k.power,
                            deformation: k.deformation.clone(),
                        })
                        .collect(),
                }
            })
            .collect();
        TensorElement {
            grid: self.grid,
            scalar: self.scalar.conj(),
            terms,
        }
    }

    /// Momentum representation of the degree-`points.len()` component at a
    /// tuple of real momenta (the empty tuple returns the scalar part).
    pub fn eval_component(&self, points: &[Vfield]) -> C {
        if points.is_empty() {
            return self.scalar;
        }
        let n = points.len();
        let mut acc = C::new(0.0, 0.0);
        for t in &self.terms {
            if t.degree() == n {
                acc += t.eval(points);
            }
        }
        acc
    }

    /// Largest pointwise deviation of the momentum representations of two
    /// elements over the given sample tuples.
    pub fn max_component_diff(&self, other: &TensorElement, samples: &[Vec<Vfield>]) -> f64 {
        let mut worst = (self.scalar - other.scalar).norm();
        for pts in samples {
            worst = worst.max((self.eval_component(pts) - other.eval_component(pts)).norm());
        }
        worst
    }

    fn ensure_kernel_free(&self, what: &str) -> Result<()> {
        if self.has_kernels() {
            return Err(Error::Unsupported(format!(
                "{what} requires kernel-free elements; deformed products carry momentum-space pair kernels"
            )));
        }
        Ok(())
    }

    /// Squared graded L2 norm computed from position-space Gram matrices of
    /// the separable factors. Kernel-free elements only.
    pub fn norm_sq_position(&self) -> Result<f64> {
        self.ensure_kernel_free("position-space norm accounting")?;
        let mut total = self.scalar.norm_sqr();
        let max_deg = self.max_degree();
        for n in 1..=max_deg {
            let of_deg: Vec<&TensorTerm> = self.terms.iter().filter(|t| t.degree() == n).collect();
            for t in &of_deg {
                for u in &of_deg {
                    let mut g = t.coeff.conj() * u.coeff;
                    for a in 0..n {
                        g *= t.factors[a].inner(&u.factors[a])?;
                    }
                    total += g.re;
                }
            }
        }
        Ok(total)
    }

    /// Squared L2 mass of all degree >= 1 components outside the region
    /// `(shifted wedge)^n`, i.e. tuples with at least one slot outside the
    /// wedge. Kernel-free elements only; the scalar part carries no
    /// position.
    pub fn wedge_mass_outside(&self, wedge: Wedge, shift: &Vfield) -> Result<f64> {
        self.ensure_kernel_free("wedge support accounting")?;
        let mut outside = 0.0;
        let max_deg = self.max_degree();
        for n in 1..=max_deg {
            let of_deg: Vec<&TensorTerm> = self.terms.iter().filter(|t| t.degree() == n).collect();
            for t in &of_deg {
                for u in &of_deg {
                    let mut full = t.coeff.conj() * u.coeff;
                    let mut inside = full;
                    for a in 0..n {
                        full *= t.factors[a].inner(&u.factors[a])?;
                        inside *= t.factors[a].inner_inside_wedge(&u.factors[a], wedge, shift)?;
                    }
                    outside += full.re - inside.re;
                }
            }
        }
        // Clamp tiny negative rounding residue.
        Ok(outside.max(0.0))
    }

    /// Squared graded L2 norm evaluated on the dual lattice. Handles pair
    /// kernels; limited to degree <= 2 (the degree-2 sum walks all dual
    /// point pairs).
    pub fn norm_sq_dual(&self) -> Result<f64> {
        let mut total = self.scalar.norm_sqr();
        if self.max_degree() > 2 {
            return Err(Error::TooLarge(
                "dual-lattice norms are implemented for degree <= 2".into(),
            ));
        }
        let d = self.grid.dim();
        let vol = self.grid.volume();
        let dp_d = self.grid.dp().powi(d as i32);

        // Degree 1: accumulate into one dense dual array.
        if self.terms.iter().any(|t| t.degree() == 1) {
            let mut acc = vec![C::new(0.0, 0.0); vol];
            for t in self.terms.iter().filter(|t| t.degree() == 1) {
                let dual = t.factors[0].dual_transform();
                for (slot, v) in acc.iter_mut().zip(dual.values()) {
                    *slot += t.coeff * v;
                }
            }
            total += dp_d * acc.iter().map(|v| v.norm_sqr()).sum::<f64>();
        }

        // Degree 2: double loop over dual point pairs.
        let deg2: Vec<&TensorTerm> = self.terms.iter().filter(|t| t.degree() == 2).collect();
        if !deg2.is_empty() {
            if (vol as f64) * (vol as f64) > DUAL_NORM_MAX_PAIRS {
                return Err(Error::TooLarge(format!(
                    "degree-2 dual norm would visit {} point pairs; use a coarser grid",
                    vol * vol
                )));
            }
            let duals: Vec<[Vec<C>; 2]> = deg2
                .iter()
                .map(|t| {
                    [
                        t.factors[0].dual_transform().values().to_vec(),
                        t.factors[1].dual_transform().values().to_vec(),
                    ]
                })
                .collect();
            let m = self.grid.points_per_axis();
            let momenta: Vec<Vfield> = MultiIndexIter::new(&vec![m; d])
                .map(|idx| self.grid.dual_momentum(&idx))
                .collect();
            let mut acc2 = 0.0;
            let mut pts = [Vfield::zero(d), Vfield::zero(d)];
            for i1 in 0..vol {
                pts[0] = momenta[i1];
                for i2 in 0..vol {
                    pts[1] = momenta[i2];
                    let mut f = C::new(0.0, 0.0);
                    for (t, dual) in deg2.iter().zip(&duals) {
                        let mut v = t.coeff * dual[0][i1] * dual[1][i2];
                        for k in &t.kernels {
                            v *= k.eval(&pts);
                        }
                        f += v;
                    }
                    acc2 += f.norm_sqr();
                }
            }
            total += dp_d * dp_d * acc2;
        }
        Ok(total)
    }

    /// Functorial Poincaré action: every factor is pulled back through the
    /// transformation, and each kernel's matrix is conjugated,
    /// `Q -> sgn(L) L Q L^{-1}`. For antilinear transformations all
    /// coefficients are conjugated as well.
    pub fn poincare_act(&self, t: &PoincareTransform) -> Result<TensorElement> {
        if self.has_kernels() && t.antilinear != !t.lorentz.is_orthochronous() {
            // Kernel conjugation pairs the complex conjugation of rho2 with
            // the time-orientation sign; the transformations constructible
            // here always satisfy this pairing.
            return Err(Error::Unsupported(
                "kernel transport needs antilinearity to match time orientation".into(),
            ));
        }
        let mut def_cache: Vec<(
            Arc<MultiplicativeDeformation>,
            Arc<MultiplicativeDeformation>,
        )> = Vec::new();
        let mut terms = Vec::with_capacity(self.terms.len());
        for term in &self.terms {
            let mut factors = Vec::with_capacity(term.degree());
            for f in &term.factors {
                factors.push(Arc::new(f.poincare_pullback(t)?));
            }
            let mut kernels = Vec::with_capacity(term.kernels.len());
            for k in &term.kernels {
                let mapped = match def_cache
                    .iter()
                    .find(|(from, _)| Arc::ptr_eq(from, &k.deformation))
                {
                    Some((_, to)) => to.clone(),
                    None => {
                        let to = Arc::new(k.deformation.with_conjugated_q(&t.lorentz)?);
                        def_cache.push((k.deformation.clone(), to.clone()));
                        to
                    }
                };
                kernels.push(PairKernel {
                    left: k.left,
                    right: k.right,
                    power: k.power,
                    deformation: mapped,
                });
            }
            terms.push(TensorTerm {
                coeff: if t.antilinear {
                    term.coeff.conj()
                } else {
                    term.coeff
                },
                factors,
                kernels,
            });
        }
        Ok(TensorElement {
            grid: self.grid,
            scalar: if t.antilinear {
                self.scalar.conj()
            } else {
                self.scalar
            },
            terms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction;

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::new(2, 16, 4.0, 4).unwrap()
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

    fn sample_tuples(g: &SpacetimeGrid) -> Vec<Vec<Vfield>> {
        let raw = [
            vec![[0.3, -0.7]],
            vec![[1.1, 0.2]],
            vec![[0.3, -0.7], [-0.4, 0.9]],
            vec![[1.0, 1.0], [0.5, -1.5]],
            vec![[0.2, 0.1], [-0.3, 0.8], [1.2, -0.2]],
        ];
        let _ = g;
        raw.iter()
            .map(|tuple| tuple.iter().map(|p| Vfield::new(p)).collect())
            .collect()
    }

    #[test]
    fn unit_is_neutral() {
        let g = grid();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let u = TensorElement::unit(g);
        let left = u.tensor_product(&f).unwrap();
        let right = f.tensor_product(&u).unwrap();
        for s in sample_tuples(&g) {
            let want = f.eval_component(&s);
            assert!((left.eval_component(&s) - want).norm() < 1e-15);
            assert!((right.eval_component(&s) - want).norm() < 1e-15);
        }
    }

    #[test]
    fn tensor_product_is_associative() {
        let g = grid();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let k = packet(g, [-0.5, 0.0], [0.0, 1.0]);
        let fh = f.add(&h.scale(C::new(0.3, 0.4))).unwrap();
        let lhs = fh.tensor_product(&h).unwrap().tensor_product(&k).unwrap();
        let rhs = fh.tensor_product(&h.tensor_product(&k).unwrap()).unwrap();
        assert!(lhs.max_component_diff(&rhs, &sample_tuples(&g)) < 1e-12);
    }

    #[test]
    fn star_is_involutive_and_antimultiplicative() {
        let g = grid();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]).scale(C::new(0.7, -0.2));
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let samples = sample_tuples(&g);
        let twice = f.star().star();
        assert!(f.max_component_diff(&twice, &samples) < 1e-14);
        let prod_star = f.tensor_product(&h).unwrap().star();
        let star_prod = h.star().tensor_product(&f.star()).unwrap();
        assert!(prod_star.max_component_diff(&star_prod, &samples) < 1e-12);
    }

    #[test]
    fn star_matches_momentum_reflection() {
        let g = grid();
        let f = packet(g, [0.2, 0.4], [0.5, -0.1]);
        let h = packet(g, [-0.3, -0.2], [0.1, 0.8]);
        let prod = f.tensor_product(&h).unwrap();
        let starred = prod.star();
        let p1 = Vfield::new(&[0.6, -0.9]);
        let p2 = Vfield::new(&[-0.2, 0.3]);
        let direct = starred.eval_component(&[p1, p2]);
        let reflected = prod.eval_component(&[p2.neg(), p1.neg()]).conj();
        assert!((direct - reflected).norm() < 1e-13);
    }

    #[test]
    fn truncation_cap_is_enforced() {
        let g = SpacetimeGrid::new(2, 16, 4.0, 3).unwrap();
        let f = packet(g, [0.0, 0.5], [0.0, 0.0]);
        let two = f.tensor_product(&f).unwrap();
        assert!(matches!(
            two.tensor_product(&two),
            Err(Error::TruncationOverflow { degree: 4, cap: 3 })
        ));
    }

    #[test]
    fn position_and_dual_norms_agree() {
        let g = grid();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let e = f
            .tensor_product(&h)
            .unwrap()
            .add(&h.tensor_product(&f).unwrap().scale(C::new(0.2, 0.5)))
            .unwrap()
            .add(&f.scale(C::new(0.0, 1.3)))
            .unwrap();
        let pos = e.norm_sq_position().unwrap();
        let dual = e.norm_sq_dual().unwrap();
        assert!(
            (pos - dual).abs() < 1e-10 * (1.0 + pos.abs()),
            "position {pos} vs dual {dual}"
        );
    }

    #[test]
    fn wedge_mass_vanishes_for_wedge_supported_packets() {
        let g = SpacetimeGrid::new(2, 32, 8.0, 4).unwrap();
        let inside = TensorElement::from_single(
            TestFunction::bump(
                g,
                &Vfield::new(&[0.0, 4.0]),
                &Vfield::new(&[1.0, 1.5]),
                &Vfield::new(&[0.0, 0.0]),
            )
            .unwrap(),
        );
        let origin = Vfield::zero(2);
        let m_out = inside
            .tensor_product(&inside)
            .unwrap()
            .wedge_mass_outside(Wedge::Right, &origin)
            .unwrap();
        assert_eq!(m_out, 0.0);
        let straddling = TensorElement::from_single(
            TestFunction::bump(
                g,
                &Vfield::new(&[0.0, 0.5]),
                &Vfield::new(&[1.0, 1.5]),
                &Vfield::new(&[0.0, 0.0]),
            )
            .unwrap(),
        );
        assert!(
            straddling
                .wedge_mass_outside(Wedge::Right, &origin)
                .unwrap()
                > 1e-3
        );
    }

    #[test]
    fn translations_act_by_momentum_phases() {
        let g = grid();
        let f = packet(g, [0.0, 0.5], [0.4, -0.2]);
        let h = packet(g, [0.5, -0.5], [-0.3, 0.6]);
        let prod = f.tensor_product(&h).unwrap();
        let a = Vfield::new(&[2.0 * g.dx(), -1.0 * g.dx()]);
        let moved = prod
            .poincare_act(&PoincareTransform::translation_by(a))
            .unwrap();
        let p1 = Vfield::new(&[0.4, -0.6]);
        let p2 = Vfield::new(&[-0.8, 0.2]);
        let phase = p1.mdot(&a) + p2.mdot(&a);
        let want = prod.eval_component(&[p1, p2]) * C::new(phase.cos(), phase.sin());
        let got = moved.eval_component(&[p1, p2]);
        assert!((want - got).norm() < 1e-13);
    }
}
