//! Quasi-free states on the graded algebra and mixed four-point functions
//! of deformed fields.
//!
//! The state is determined by its two-point function on the upper mass
//! shell,
//!
//! ```text
//!   omega(f x g) = integral dmu(q)  ft_f(-q) ft_g(q),
//! ```
//!
//! extended to higher even degrees by the sum over pair partitions: each
//! pair `(l, r)` with `l < r` receives momenta `(-q, +q)` and one shell
//! integration. Odd components vanish. Pair kernels attached to a term are
//! evaluated at the assigned node momenta, which is what makes the state
//! compatible with deformed products: every kernel factor collapses
//! pairwise (`rho2(-q, q) = 1` and `rho2(-q1, q2) rho2(-q2, q1) = 1`).
//!
//! The module also evaluates vacuum four-point functions of two deformed
//! fields between one-particle vectors by Wick-expanding the twisted
//! creation and annihilation parts. With the deformations `(R, Q)` and
//! `(R, -Q)` and test functions supported in opposite shifted wedges, the
//! antisymmetrised four-point function is the wedge-locality residual.

use num_complex::Complex64;

use crate::deform::MultiplicativeDeformation;
use crate::element::{TensorElement, TensorTerm};
use crate::error::{Error, Result};
use crate::grid::Vfield;
use crate::quadrature::OnShellRule;
use crate::testfn::TestFunction;

type C = Complex64;

/// Hard cap on the degree the pair-partition sum will walk: the tuple count
/// grows like `nodes^(n/2)`.
const MAX_PARTITION_DEGREE: usize = 6;

/// All partitions of `{0..n-1}` into ordered pairs `(l, r)`, `l < r`,
/// in lexicographic order; `n` must be even. The count is `(n-1)!!`.
pub fn pair_partitions(n: usize) -> Vec<Vec<(usize, usize)>> {
    assert!(n % 2 == 0, "pair partitions need an even number of slots");
    let mut out = Vec::new();
    let mut used = vec![false; n];
    let mut current = Vec::with_capacity(n / 2);
    fn recurse(
        n: usize,
        used: &mut [bool],
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        let l = match (0..n).find(|&i| !used[i]) {
            Some(i) => i,
            None => {
                out.push(current.clone());
                return;
            }
        };
        used[l] = true;
        for r in (l + 1)..n {
            if used[r] {
                continue;
            }
            used[r] = true;
            current.push((l, r));
            recurse(n, used, current, out);
            current.pop();
            used[r] = false;
        }
        used[l] = false;
    }
    recurse(n, &mut used, &mut current, &mut out);
    out
}

#[derive(Debug, Clone)]
pub struct QuasiFreeState {
    rule: OnShellRule,
}

impl QuasiFreeState {
    pub fn new(rule: OnShellRule) -> Self {
        QuasiFreeState { rule }
    }

    pub fn rule(&self) -> &OnShellRule {
        &self.rule
    }

    /// Shell restrictions of a test function's transform:
    /// `plus[i] = ft(q_i)` and `minus[i] = ft(-q_i)` over the rule nodes.
    pub fn shell_profiles(&self, f: &TestFunction) -> (Vec<C>, Vec<C>) {
        let mut plus = Vec::with_capacity(self.rule.len());
        let mut minus = Vec::with_capacity(self.rule.len());
        for node in self.rule.nodes() {
            plus.push(f.fourier_at(&node.momentum));
            minus.push(f.fourier_at(&node.momentum.neg()));
        }
        (plus, minus)
    }

    /// The state applied to an algebra element.
    pub fn evaluate(&self, e: &TensorElement) -> Result<C> {
        self.evaluate_inner(e, false)
    }

    /// Deliberately mis-paired variant used by the verification suites to
    /// confirm the compatibility check has statistical power: pairs receive
    /// `(+q, +q)` instead of `(-q, +q)`.
    pub fn evaluate_mispaired(&self, e: &TensorElement) -> Result<C> {
        self.evaluate_inner(e, true)
    }

    fn evaluate_inner(&self, e: &TensorElement, mispaired: bool) -> Result<C> {
        let mut total = e.scalar_part();
        for t in e.terms() {
            total += self.term_expectation(t, mispaired)?;
        }
        Ok(total)
    }

    fn term_expectation(&self, t: &TensorTerm, mispaired: bool) -> Result<C> {
        let n = t.degree();
        if n == 0 {
            return Ok(t.coeff);
        }
        if n % 2 == 1 {
            return Ok(C::new(0.0, 0.0));
        }
        if n > MAX_PARTITION_DEGREE {
            return Err(Error::TooLarge(format!(
                "pair-partition sum over degree {n} exceeds the supported cap {MAX_PARTITION_DEGREE}"
            )));
        }
        let nodes = self.rule.nodes();
        let nn = nodes.len();
        let half = n / 2;
        // Per-slot shell tables.
        let mut plus = Vec::with_capacity(n);
        let mut minus = Vec::with_capacity(n);
        for f in &t.factors {
            let mut pl = Vec::with_capacity(nn);
            let mut mi = Vec::with_capacity(nn);
            for node in nodes {
                pl.push(f.fourier_at(&node.momentum));
                mi.push(f.fourier_at(&node.momentum.neg()));
            }
            plus.push(pl);
            minus.push(mi);
        }
        let d = t.factors[0].grid().dim();
        let mut acc = C::new(0.0, 0.0);
        let mut pts = vec![Vfield::zero(d); n];
        let mut tuple = vec![0usize; half];
        for part in pair_partitions(n) {
            tuple.iter_mut().for_each(|i| *i = 0);
            loop {
                let mut v = t.coeff;
                let mut w = 1.0;
                for (k, &(l, r)) in part.iter().enumerate() {
                    let i = tuple[k];
                    w *= nodes[i].weight;
                    let q = nodes[i].momentum;
                    if mispaired {
                        v *= plus[l][i];
                        pts[l] = q;
                    } else {
                        v *= minus[l][i];
                        pts[l] = q.neg();
                    }
                    v *= plus[r][i];
                    pts[r] = q;
                }
                if !t.kernels.is_empty() {
                    for ker in &t.kernels {
                        v *= ker.eval(&pts);
                    }
                }
                acc += v * w;
                // Odometer over node tuples.
                let mut pos = 0;
                loop {
                    if pos == half {
                        break;
                    }
                    tuple[pos] += 1;
                    if tuple[pos] < nn {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
                if pos == half {
                    break;
                }
            }
        }
        Ok(acc)
    }

    /// Vacuum four-point function
    /// `< field(h) vac , field_{def_f}(f) field_{def_g}(g) field(k) vac >`
    /// of two (possibly differently) deformed fields between one-particle
    /// vectors, reduced to shell integrals by Wick expansion of the twisted
    /// creation and annihilation parts. One-particle vectors do not feel
    /// the deformation.
    pub fn mixed_four_point(
        &self,
        h: &TestFunction,
        f: &TestFunction,
        def_f: &MultiplicativeDeformation,
        g: &TestFunction,
        def_g: &MultiplicativeDeformation,
        k: &TestFunction,
    ) -> C {
        let nodes = self.rule.nodes();
        let (hp, _) = self.shell_profiles(h);
        let (fp, fm) = self.shell_profiles(f);
        let (gp, gm) = self.shell_profiles(g);
        let (kp, _) = self.shell_profiles(k);
        // Annihilator of g meets creator of k at particle number zero:
        // <h+, f+> integral dmu g- k+.
        let mut hf = C::new(0.0, 0.0);
        let mut gk = C::new(0.0, 0.0);
        for i in 0..nodes.len() {
            hf += hp[i].conj() * fp[i] * nodes[i].weight;
            gk += gm[i] * kp[i] * nodes[i].weight;
        }
        let vacuum_channel = hf * gk;
        // Two-particle channel: creator of g and of k populate slots, the
        // annihilator of f contracts with either; twisted insertions leave
        // rho2 factors between the surviving momenta.
        let mut two_particle = C::new(0.0, 0.0);
        for (i, ni) in nodes.iter().enumerate() {
            let p = ni.momentum;
            for (j, nj) in nodes.iter().enumerate() {
                let q = nj.momentum;
                let w = ni.weight * nj.weight;
                let rf = def_f.rho2(&q, &p);
                let direct = gp[j] * def_g.rho2(&q, &p).powi(-1) * kp[i];
                let exchange = gp[i] * def_g.rho2(&p, &q).powi(-1) * kp[j];
                two_particle += hp[i].conj() * fm[j] * rf * (direct + exchange) * w;
            }
        }
        vacuum_channel + two_particle
    }

    /// Residual of wedge locality: the antisymmetrised mixed four-point
    /// function of `field_def(f)` and `field_{def.opposite()}(g)` between
    /// the one-particle vectors of `h` and `k`.
    pub fn wedge_locality_residual(
        &self,
        h: &TestFunction,
        f: &TestFunction,
        g: &TestFunction,
        k: &TestFunction,
        def: &MultiplicativeDeformation,
    ) -> f64 {
        let opp = def.opposite();
        let fg = self.mixed_four_point(h, f, def, g, &opp, k);
        let gf = self.mixed_four_point(h, g, &opp, f, def, k);
        (fg - gf).norm()
    }

    /// Undeformed oracle for the same sandwich: the free-field commutator
    /// is the scalar `integral dmu (f- g+ - g- f+)` times `<h+, k+>`.
    pub fn free_commutator_sandwich(
        &self,
        h: &TestFunction,
        f: &TestFunction,
        g: &TestFunction,
        k: &TestFunction,
    ) -> C {
        let nodes = self.rule.nodes();
        let (hp, _) = self.shell_profiles(h);
        let (fp, fm) = self.shell_profiles(f);
        let (gp, gm) = self.shell_profiles(g);
        let (kp, _) = self.shell_profiles(k);
        let mut hk = C::new(0.0, 0.0);
        let mut comm = C::new(0.0, 0.0);
        for i in 0..nodes.len() {
            hk += hp[i].conj() * kp[i] * nodes[i].weight;
            comm += (fm[i] * gp[i] - gm[i] * fp[i]) * nodes[i].weight;
        }
        hk * comm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::deformed_product;
    use crate::grid::SpacetimeGrid;
    use crate::qmatrix::QMatrix;
    use crate::rfunc::DeformationFunction;
    use std::sync::Arc;

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::new(2, 32, 6.0, 4).unwrap()
    }

    fn rule() -> OnShellRule {
        OnShellRule::gauss_legendre(1.0, 48, 20.0).unwrap()
    }

    fn shipped_deformation() -> Arc<MultiplicativeDeformation> {
        let r = DeformationFunction::new(
            0.25,
            vec![C::new(0.0, 2.0), C::new(1.0, 0.5), C::new(-1.0, 0.5)],
        )
        .unwrap();
        Arc::new(MultiplicativeDeformation::new(
            r,
            QMatrix::new(2, 1.0, 0.0).unwrap(),
        ))
    }

    fn packet(g: SpacetimeGrid, c: [f64; 2], k: [f64; 2]) -> TestFunction {
        TestFunction::bump(
            g,
            &Vfield::new(&c),
            &Vfield::new(&[1.4, 1.4]),
            &Vfield::new(&k),
        )
        .unwrap()
    }

    #[test]
    fn partition_counts_are_double_factorials() {
        assert_eq!(pair_partitions(2).len(), 1);
        assert_eq!(pair_partitions(4).len(), 3);
        assert_eq!(pair_partitions(6).len(), 15);
        assert_eq!(pair_partitions(4)[0], vec![(0, 1), (2, 3)]);
    }

    #[test]
    fn two_point_function_is_the_shell_norm() {
        let st = QuasiFreeState::new(rule());
        let f = packet(grid(), [0.0, 0.3], [0.5, -0.4]);
        let e = TensorElement::from_single(f.clone());
        let val = st
            .evaluate(&e.star().tensor_product(&e).unwrap())
            .unwrap();
        let (fp, _) = st.shell_profiles(&f);
        let direct: f64 = st
            .rule()
            .nodes()
            .iter()
            .zip(&fp)
            .map(|(n, v)| n.weight * v.norm_sqr())
            .sum();
        assert!((val - C::new(direct, 0.0)).norm() < 1e-12 * (1.0 + direct));
        assert!(val.re > 0.0);
    }

    #[test]
    fn odd_components_vanish_and_state_is_normalized() {
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let f = TensorElement::from_single(packet(g, [0.0, 0.3], [0.5, -0.4]));
        assert_eq!(st.evaluate(&f).unwrap(), C::new(0.0, 0.0));
        assert_eq!(
            st.evaluate(&TensorElement::unit(g)).unwrap(),
            C::new(1.0, 0.0)
        );
    }

    #[test]
    fn state_is_hermitian_and_positive() {
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let f = TensorElement::from_single(packet(g, [0.0, 0.3], [0.5, -0.4]));
        let h = TensorElement::from_single(packet(g, [0.4, -0.5], [-0.2, 0.8]));
        let def = shipped_deformation();
        let mix = TensorElement::unit(g)
            .scale(C::new(0.3, -0.2))
            .add(&f.scale(C::new(1.0, 0.4)))
            .unwrap()
            .add(&deformed_product(&def, &h, &f).unwrap())
            .unwrap();
        let direct = st.evaluate(&mix).unwrap();
        let starred = st.evaluate(&mix.star()).unwrap();
        assert!((starred - direct.conj()).norm() < 1e-12);
        let pos = st
            .evaluate(&mix.star().tensor_product(&mix).unwrap())
            .unwrap();
        assert!(pos.im.abs() < 1e-10 * (1.0 + pos.re.abs()));
        assert!(pos.re > -1e-12);
    }

    #[test]
    fn translation_invariance() {
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let f = TensorElement::from_single(packet(g, [0.0, 0.3], [0.5, -0.4]));
        let h = TensorElement::from_single(packet(g, [0.4, -0.5], [-0.2, 0.8]));
        let prod = f.tensor_product(&h).unwrap();
        let a = Vfield::new(&[2.0 * g.dx(), -3.0 * g.dx()]);
        let moved = prod
            .poincare_act(&crate::poincare::PoincareTransform::translation_by(a))
            .unwrap();
        let v0 = st.evaluate(&prod).unwrap();
        let v1 = st.evaluate(&moved).unwrap();
        assert!((v0 - v1).norm() < 1e-12 * (1.0 + v0.norm()));
    }

    #[test]
    fn deformed_products_are_compatible_with_the_state() {
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let def = shipped_deformation();
        let f = TensorElement::from_single(packet(g, [0.0, 0.3], [0.5, -0.4]));
        let h = TensorElement::from_single(packet(g, [0.4, -0.5], [-0.2, 0.8]));
        // Degree 2.
        let plain = f.tensor_product(&h).unwrap();
        let warped = deformed_product(&def, &f, &h).unwrap();
        let a = st.evaluate(&plain).unwrap();
        let b = st.evaluate(&warped).unwrap();
        assert!((a - b).norm() < 1e-13 * (1.0 + a.norm()), "{a} vs {b}");
        // Degree 4: compatibility is the statement for ONE product between
        // two blocks, whatever kernels the blocks already carry.
        let big_plain = warped.tensor_product(&warped).unwrap();
        let big_warped = deformed_product(&def, &warped, &warped).unwrap();
        let c = st.evaluate(&big_plain).unwrap();
        let d = st.evaluate(&big_warped).unwrap();
        assert!((c - d).norm() < 1e-12 * (1.0 + c.norm()), "{c} vs {d}");
    }

    #[test]
    fn iterated_deformed_products_change_four_point_values() {
        // Unlike a single product, fully deformed four-fold products differ
        // from the undeformed ones: the crossed pairings keep a factor
        // rho2^{-2}, which is exactly the two-particle scattering content.
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let def = shipped_deformation();
        let f = TensorElement::from_single(packet(g, [0.0, 0.3], [0.5, -0.4]));
        let h = TensorElement::from_single(packet(g, [0.4, -0.5], [-0.2, 0.8]));
        let warped = deformed_product(&def, &f, &h).unwrap();
        let plain = f.tensor_product(&h).unwrap();
        let fully_warped = st
            .evaluate(&deformed_product(&def, &warped, &warped).unwrap())
            .unwrap();
        let fully_plain = st
            .evaluate(&plain.tensor_product(&plain).unwrap())
            .unwrap();
        assert!(
            (fully_warped - fully_plain).norm() > 1e-3,
            "deformation should be visible in iterated products: {fully_warped} vs {fully_plain}"
        );
    }

    #[test]
    fn mispairing_has_power() {
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let f = TensorElement::from_single(packet(g, [0.0, 0.3], [0.9, -0.6]));
        let e = f.star().tensor_product(&f).unwrap();
        let good = st.evaluate(&e).unwrap();
        let bad = st.evaluate_mispaired(&e).unwrap();
        assert!(
            (good - bad).norm() > 1e-2 * good.norm(),
            "mispairing must visibly shift the state: {good} vs {bad}"
        );
    }

    #[test]
    fn trivial_deformation_reproduces_free_commutator() {
        let st = QuasiFreeState::new(rule());
        let g = grid();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let h = packet(g, [0.2, -0.1], [0.3, 0.2]);
        let f = packet(g, [0.0, 2.5], [0.0, -0.5]);
        let gg = packet(g, [0.0, -2.5], [0.4, 0.1]);
        let k = packet(g, [-0.3, 0.4], [-0.2, 0.6]);
        let fg = st.mixed_four_point(&h, &f, &triv, &gg, &triv, &k);
        let gf = st.mixed_four_point(&h, &gg, &triv, &f, &triv, &k);
        let oracle = st.free_commutator_sandwich(&h, &f, &gg, &k);
        assert!(
            ((fg - gf) - oracle).norm() < 1e-12 * (1.0 + oracle.norm()),
            "{} vs {}",
            fg - gf,
            oracle
        );
    }
}
