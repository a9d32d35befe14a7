//! Truncated bosonic Fock space over a discretised mass shell, with the
//! twisted creation and annihilation operators of a multiplicative
//! deformation.
//!
//! Sector `n` holds a dense complex array over `nodes^n`; the inner product
//! weights every slot with the shell measure, so the untwisted operators
//! are exact mutual adjoints and satisfy the canonical relations
//! `[a(phi), a*(psi)] = <phi, psi>` up to rounding. The twisted operators
//! insert two-point multipliers across the spectator momenta,
//!
//! ```text
//!   (a_{R,Q}(phi) Psi)_n  (p..) = sqrt(n+1) sum_j w_j conj(phi_j)
//!                                   prod_k rho2(q_j, p_k) Psi_{n+1}(q_j, p..)
//!   (a*_{R,Q}(phi) Psi)_n (p..) = n^{-1/2} sum_k phi(p_k)
//!                                   prod_{l != k} rho2(p_l, p_k) Psi_{n-1}(.. no k ..)
//! ```
//!
//! and the deformed field `phi_{R,Q}(f) = a*_{R,Q}(f+) + a_{R,Q}(conj f-)`
//! represents the deformed tensor algebra: applying fields along an element
//! reproduces the combinatorial vector built directly from the element's
//! momentum representation (`gns_vector`). Creation past the particle cap
//! is a hard `TruncationOverflow` error.

use num_complex::Complex64;

use crate::deform::MultiplicativeDeformation;
use crate::element::TensorElement;
use crate::error::{Error, Result};
use crate::grid::{Vfield, Wedge};
use crate::poincare::PoincareTransform;
use crate::quadrature::OnShellRule;
use crate::rfunc::DeformationFunction;
use crate::testfn::TestFunction;

type C = Complex64;

#[derive(Debug, Clone)]
pub struct FockVector {
    /// `sectors[n]` has length `nodes^n`.
    sectors: Vec<Vec<C>>,
}

impl FockVector {
    /// Rebuilds a vector from raw sectors; `sectors[n]` must have length
    /// `nodes^n` for a single consistent node count.
    pub fn from_sectors(sectors: Vec<Vec<C>>) -> Result<FockVector> {
        if sectors.is_empty() || sectors[0].len() != 1 {
            return Err(Error::ConfigInvalid(
                "a Fock vector needs a scalar zero-particle sector".into(),
            ));
        }
        if sectors.len() > 1 {
            let nodes = sectors[1].len();
            for (n, s) in sectors.iter().enumerate() {
                if s.len() != nodes.pow(n as u32) {
                    return Err(Error::ConfigInvalid(format!(
                        "sector {n} has length {} instead of {nodes}^{n}",
                        s.len()
                    )));
                }
            }
        }
        Ok(FockVector { sectors })
    }

    pub fn sector(&self, n: usize) -> &[C] {
        &self.sectors[n]
    }

    pub fn sector_count(&self) -> usize {
        self.sectors.len()
    }

    pub fn add(&self, other: &FockVector) -> FockVector {
        assert_eq!(self.sectors.len(), other.sectors.len());
        FockVector {
            sectors: self
                .sectors
                .iter()
                .zip(&other.sectors)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        self.add(&other.scale(C::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C) -> FockVector {
        FockVector {
            sectors: self
                .sectors
                .iter()
                .map(|s| s.iter().map(|v| v * c).collect())
                .collect(),
        }
    }

    /// Largest sector index with a nonzero entry, or `None` for the zero
    /// vector.
    pub fn top_occupied(&self) -> Option<usize> {
        (0..self.sectors.len())
            .rev()
            .find(|&n| self.sectors[n].iter().any(|v| v.norm_sqr() > 0.0))
    }
}

#[derive(Debug, Clone)]
pub struct FockSpace {
    rule: OnShellRule,
    n_max: usize,
}

impl FockSpace {
    pub fn new(rule: OnShellRule, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::ConfigInvalid("particle cap must be >= 1".into()));
        }
        let size = rule.len().checked_pow(n_max as u32).ok_or_else(|| {
            Error::TooLarge("top Fock sector does not fit in an address space".into())
        })?;
        if size > 40_000_000 {
            return Err(Error::TooLarge(format!(
                "top Fock sector would hold {size} entries"
            )));
        }
        Ok(FockSpace { rule, n_max })
    }

    pub fn rule(&self) -> &OnShellRule {
        &self.rule
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    fn nodes(&self) -> usize {
        self.rule.len()
    }

    pub fn zero_vector(&self) -> FockVector {
        FockVector {
            sectors: (0..=self.n_max)
                .map(|n| vec![C::new(0.0, 0.0); self.nodes().pow(n as u32)])
                .collect(),
        }
    }

    pub fn vacuum(&self) -> FockVector {
        let mut v = self.zero_vector();
        v.sectors[0][0] = C::new(1.0, 0.0);
        v
    }

    /// Measure-weighted inner product, antilinear in the first argument.
    pub fn inner(&self, a: &FockVector, b: &FockVector) -> C {
        let nn = self.nodes();
        let mut acc = C::new(0.0, 0.0);
        for n in 0..=self.n_max {
            let mut tuple = vec![0usize; n];
            let sa = &a.sectors[n];
            let sb = &b.sectors[n];
            for flat in 0..sa.len() {
                let mut w = 1.0;
                for &i in &tuple {
                    w *= self.rule.nodes()[i].weight;
                }
                acc += sa[flat].conj() * sb[flat] * w;
                advance(&mut tuple, nn);
            }
        }
        acc
    }

    pub fn norm(&self, a: &FockVector) -> f64 {
        self.inner(a, a).re.max(0.0).sqrt()
    }

    /// Shell restrictions `(f~(+q_i), f~(-q_i))` of a test function.
    pub fn shell_profiles(&self, f: &TestFunction) -> Result<(Vec<C>, Vec<C>)> {
        if f.grid().dim() != 2 {
            return Err(Error::Unsupported(
                "Fock-space representations are implemented at d = 2".into(),
            ));
        }
        let mut plus = Vec::with_capacity(self.nodes());
        let mut minus = Vec::with_capacity(self.nodes());
        for node in self.rule.nodes() {
            plus.push(f.fourier_at(&node.momentum));
            minus.push(f.fourier_at(&node.momentum.neg()));
        }
        Ok((plus, minus))
    }

    /// Node-pair table of the two-point multiplier, `rho[i][j] = rho2(q_i, q_j)`,
    /// or `None` when the deformation is trivial.
    fn rho_table(&self, def: &MultiplicativeDeformation) -> Option<Vec<C>> {
        if def.is_effectively_trivial() {
            return None;
        }
        let nn = self.nodes();
        let mut t = vec![C::new(0.0, 0.0); nn * nn];
        for i in 0..nn {
            for j in 0..nn {
                t[i * nn + j] = def.rho2(
                    &self.rule.nodes()[i].momentum,
                    &self.rule.nodes()[j].momentum,
                );
            }
        }
        Some(t)
    }

    /// Twisted creation operator. Fails when the top occupied sector would
    /// spill past the particle cap.
    pub fn create(
        &self,
        def: &MultiplicativeDeformation,
        phi: &[C],
        psi: &FockVector,
    ) -> Result<FockVector> {
        let nn = self.nodes();
        assert_eq!(phi.len(), nn);
        if let Some(top) = psi.top_occupied() {
            if top == self.n_max {
                return Err(Error::TruncationOverflow {
                    degree: self.n_max + 1,
                    cap: self.n_max,
                });
            }
        }
        let rho = self.rho_table(def);
        let mut out = self.zero_vector();
        for n in 1..=self.n_max {
            let src = &psi.sectors[n - 1];
            if src.iter().all(|v| v.norm_sqr() == 0.0) {
                continue;
            }
            let dst = &mut out.sectors[n];
            let norm = 1.0 / (n as f64).sqrt();
            let mut tuple = vec![0usize; n];
            for flat in 0..dst.len() {
                let mut acc = C::new(0.0, 0.0);
                for k in 0..n {
                    // Source index: tuple without slot k.
                    let mut src_flat = 0usize;
                    for (a, &i) in tuple.iter().enumerate() {
                        if a != k {
                            src_flat = src_flat * nn + i;
                        }
                    }
                    let s = src[src_flat];
                    if s.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut v = phi[tuple[k]] * s;
                    if let Some(t) = &rho {
                        for (l, &i) in tuple.iter().enumerate() {
                            if l != k {
                                v *= t[i * nn + tuple[k]];
                            }
                        }
                    }
                    acc += v;
                }
                dst[flat] = acc * norm;
                advance(&mut tuple, nn);
            }
        }
        Ok(out)
    }

    /// Twisted annihilation operator (antilinear in `phi`).
    pub fn annihilate(
        &self,
        def: &MultiplicativeDeformation,
        phi: &[C],
        psi: &FockVector,
    ) -> FockVector {
        let nn = self.nodes();
        assert_eq!(phi.len(), nn);
        let rho = self.rho_table(def);
        let mut out = self.zero_vector();
        for n in 0..self.n_max {
            let src = &psi.sectors[n + 1];
            if src.iter().all(|v| v.norm_sqr() == 0.0) {
                continue;
            }
            let dst = &mut out.sectors[n];
            let norm = ((n + 1) as f64).sqrt();
            let mut tuple = vec![0usize; n];
            for flat in 0..dst.len() {
                let mut acc = C::new(0.0, 0.0);
                for j in 0..nn {
                    let s = src[j * nn.pow(n as u32) + flat];
                    if s.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut v = phi[j].conj() * s * self.rule.nodes()[j].weight;
                    if let Some(t) = &rho {
                        for &i in tuple.iter() {
                            v *= t[j * nn + i];
                        }
                    }
                    acc += v;
                }
                dst[flat] = acc * norm;
                advance(&mut tuple, nn);
            }
        }
        out
    }

    /// The deformed field operator applied to a vector:
    /// `phi_{R,Q}(f) = a*_{R,Q}(f+) + a_{R,Q}(conj f-)`.
    pub fn field_apply(
        &self,
        def: &MultiplicativeDeformation,
        f: &TestFunction,
        psi: &FockVector,
    ) -> Result<FockVector> {
        let (plus, minus) = self.shell_profiles(f)?;
        let conj_minus: Vec<C> = minus.iter().map(|v| v.conj()).collect();
        let created = self.create(def, &plus, psi)?;
        let annihilated = self.annihilate(def, &conj_minus, psi);
        Ok(created.add(&annihilated))
    }

    /// Vector of the GNS construction for an algebra element: sum over
    /// partial matchings of each term's slots into contracted pairs
    /// `(-q, +q)` and surviving creator slots, evaluated directly from the
    /// momentum representation (kernels included). Independent of the
    /// operator route through `field_apply`.
    pub fn gns_vector(&self, e: &TensorElement) -> Result<FockVector> {
        let nn = self.nodes();
        let mut out = self.zero_vector();
        out.sectors[0][0] = e.scalar_part();
        let node_p: Vec<Vfield> = self.rule.nodes().iter().map(|n| n.momentum).collect();
        let node_m: Vec<Vfield> = node_p.iter().map(|p| p.neg()).collect();
        for term in e.terms() {
            let n = term.degree();
            // Shell tables per slot.
            let mut plus = Vec::with_capacity(n);
            let mut minus = Vec::with_capacity(n);
            for f in &term.factors {
                if f.grid().dim() != 2 {
                    return Err(Error::Unsupported(
                        "Fock-space representations are implemented at d = 2".into(),
                    ));
                }
                let mut pl = Vec::with_capacity(nn);
                let mut mi = Vec::with_capacity(nn);
                for node in self.rule.nodes() {
                    pl.push(f.fourier_at(&node.momentum));
                    mi.push(f.fourier_at(&node.momentum.neg()));
                }
                plus.push(pl);
                minus.push(mi);
            }
            for matching in partial_matchings(n) {
                let m = matching.singles.len();
                if m > self.n_max {
                    return Err(Error::TruncationOverflow {
                        degree: m,
                        cap: self.n_max,
                    });
                }
                let perms = permutations(m);
                let inv_sqrt_mfact =
                    1.0 / (1..=m).map(|k| k as f64).product::<f64>().sqrt();
                let np = matching.pairs.len();
                let mut pts = vec![Vfield::zero(2); n];
                // Iterate pair momenta and output tuples.
                let mut qt = vec![0usize; np];
                loop {
                    let mut base = term.coeff;
                    let mut wq = 1.0;
                    for (k, &(i, j)) in matching.pairs.iter().enumerate() {
                        let q = qt[k];
                        wq *= self.rule.nodes()[q].weight;
                        base *= minus[i][q] * plus[j][q];
                        pts[i] = node_m[q];
                        pts[j] = node_p[q];
                    }
                    if base.norm_sqr() != 0.0 || !term.kernels.is_empty() {
                        let mut ot = vec![0usize; m];
                        let sector = &mut out.sectors[m];
                        loop {
                            let mut flat = 0usize;
                            for &o in &ot {
                                flat = flat * nn + o;
                            }
                            let mut acc = C::new(0.0, 0.0);
                            for perm in &perms {
                                let mut v = base;
                                for (k, &s) in matching.singles.iter().enumerate() {
                                    let o = ot[perm[k]];
                                    v *= plus[s][o];
                                    pts[s] = node_p[o];
                                }
                                for ker in &term.kernels {
                                    v *= ker.eval(&pts);
                                }
                                acc += v;
                            }
                            sector[flat] += acc * wq * inv_sqrt_mfact;
                            if !advance(&mut ot, nn) {
                                break;
                            }
                        }
                    }
                    if !advance(&mut qt, nn) {
                        break;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sequentially applies deformed fields for each degree-1 factor list,
    /// left to right, to the vacuum.
    pub fn apply_fields(
        &self,
        def: &MultiplicativeDeformation,
        fs: &[&TestFunction],
    ) -> Result<FockVector> {
        let mut v = self.vacuum();
        for f in fs.iter().rev() {
            v = self.field_apply(def, f, &v)?;
        }
        Ok(v)
    }

    /// One-parameter boost in the rapidity parametrisation: every slot's
    /// profile is translated by the boost rapidity via cubic Lagrange
    /// resampling on the node set (mass outside the covered patch is lost).
    pub fn boost(&self, rapidity: f64, psi: &FockVector) -> FockVector {
        let matrix = self.resample_matrix(rapidity);
        let mut out = self.zero_vector();
        out.sectors[0][0] = psi.sectors[0][0];
        let nn = self.nodes();
        for n in 1..=self.n_max {
            let mut cur = psi.sectors[n].clone();
            for axis in 0..n {
                cur = apply_axis_matrix(&cur, &matrix, nn, n, axis);
            }
            out.sectors[n] = cur;
        }
        out
    }

    /// Spacetime translation: multiplies sector entries by
    /// `prod_k exp(i p_k . a)`.
    pub fn translate(&self, a: &Vfield, psi: &FockVector) -> FockVector {
        let nn = self.nodes();
        let phases: Vec<C> = self
            .rule
            .nodes()
            .iter()
            .map(|node| {
                let ph = node.momentum.mdot(a);
                C::new(ph.cos(), ph.sin())
            })
            .collect();
        let mut out = psi.clone();
        for n in 1..=self.n_max {
            let mut tuple = vec![0usize; n];
            for flat in 0..out.sectors[n].len() {
                let mut ph = C::new(1.0, 0.0);
                for &i in &tuple {
                    ph *= phases[i];
                }
                out.sectors[n][flat] *= ph;
                advance(&mut tuple, nn);
            }
        }
        out
    }

    /// One-sided multiplicative shift: multiplies sector entries by
    /// `prod_k R(x . p_k)`. The factors have unit modulus on the shell, so
    /// the map is unitary, and its adjoint and inverse are both the
    /// opposite shift `-x`.
    pub fn r_shift(&self, r: &DeformationFunction, x: &Vfield, psi: &FockVector) -> FockVector {
        let nn = self.nodes();
        let factors: Vec<C> = self
            .rule
            .nodes()
            .iter()
            .map(|node| r.eval(x.mdot(&node.momentum)))
            .collect();
        let mut out = psi.clone();
        for n in 1..=self.n_max {
            let mut tuple = vec![0usize; n];
            for flat in 0..out.sectors[n].len() {
                let mut ph = C::new(1.0, 0.0);
                for &i in &tuple {
                    ph *= factors[i];
                }
                out.sectors[n][flat] *= ph;
                advance(&mut tuple, nn);
            }
        }
        out
    }

    /// The antiunitary spacetime reflection: plain conjugation of all
    /// sector entries (node momenta are fixed since `j` maps the shell to
    /// itself through `p -> -jp = p`).
    pub fn reflect(&self, psi: &FockVector) -> FockVector {
        FockVector {
            sectors: psi
                .sectors
                .iter()
                .map(|s| s.iter().map(|v| v.conj()).collect())
                .collect(),
        }
    }

    fn resample_matrix(&self, shift: f64) -> Vec<f64> {
        let nn = self.nodes();
        let thetas: Vec<f64> = self.rule.nodes().iter().map(|n| n.rapidity).collect();
        let mut m = vec![0.0; nn * nn];
        for i in 0..nn {
            let x = thetas[i] - shift;
            if x < thetas[0] - 1e-12 || x > thetas[nn - 1] + 1e-12 {
                continue;
            }
            // Window of four nearest nodes (clamped at the ends).
            let mut hi = thetas.partition_point(|&t| t < x);
            hi = hi.clamp(2, nn - 2);
            let base = hi - 2;
            let window = &thetas[base..base + 4];
            for k in 0..4 {
                let mut w = 1.0;
                for l in 0..4 {
                    if l != k {
                        w *= (x - window[l]) / (window[k] - window[l]);
                    }
                }
                m[i * nn + base + k] = w;
            }
        }
        m
    }

    /// Residual of boost covariance on the one-particle vector of `f`:
    /// compares the boosted vector against the exact momentum-space pullback
    /// profile, isolating the resampling error.
    pub fn boost_covariance_residual(&self, f: &TestFunction, rapidity: f64) -> Result<f64> {
        let (plus, _) = self.shell_profiles(f)?;
        let triv = MultiplicativeDeformation::trivial(2)?;
        let one = self.create(&triv, &plus, &self.vacuum())?;
        let boosted = self.boost(rapidity, &one);
        // Exact pullback profile: (alpha f)~(q) = f~(L^{-1} q).
        let inv = PoincareTransform::boost01(2, rapidity).inverse();
        let exact_profile: Vec<C> = self
            .rule
            .nodes()
            .iter()
            .map(|node| f.fourier_at(&inv.lorentz.apply(&node.momentum)))
            .collect();
        let exact = self.create(&triv, &exact_profile, &self.vacuum())?;
        let diff = boosted.sub(&exact);
        Ok(self.norm(&diff) / self.norm(&exact).max(1e-300))
    }

    /// Relative covariance residual of the deformed field under a proper
    /// Poincaré transformation `T = (a, boost01(chi))`:
    /// `||U field(f) U^{-1} psi - field_{conj Q}(pullback f) psi||` over the
    /// norm of the right side, with `U = translate(a) . boost(chi)`. Only
    /// translations and 0-1 boosts have a lattice representation here; any
    /// other Lorentz part is rejected.
    pub fn covariance_residual(
        &self,
        def: &MultiplicativeDeformation,
        t: &PoincareTransform,
        f: &TestFunction,
        psi: &FockVector,
    ) -> Result<f64> {
        let d = t.dim();
        let chi = t.lorentz.get(0, 1).asinh();
        let boost = crate::poincare::LorentzMatrix::boost01(d, chi);
        let defect = (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| (t.lorentz.get(i, j) - boost.get(i, j)).abs())
            .fold(0.0, f64::max);
        if t.antilinear || defect > 1e-12 {
            return Err(Error::ConfigInvalid(
                "only translations and 0-1 boosts act on the Fock layer".into(),
            ));
        }
        let moved = self.boost(-chi, &self.translate(&t.translation.neg(), psi));
        let applied = self.field_apply(def, f, &moved)?;
        let lhs = self.translate(&t.translation, &self.boost(chi, &applied));
        let transported = def.with_conjugated_q(&t.lorentz)?;
        let rhs = self.field_apply(&transported, &f.poincare_pullback(t)?, psi)?;
        Ok(self.norm(&lhs.sub(&rhs)) / self.norm(&rhs).max(1e-300))
    }

    /// Two-particle scattering overlap: the inner product of the
    /// opposite-order twisted pair states,
    /// `< a*(g) a*(f) vac , a*(f) a*(g) vac >`, where `f` is the faster
    /// packet of an ordered pair.
    pub fn scattering_overlap(
        &self,
        def: &MultiplicativeDeformation,
        fast: &[C],
        slow: &[C],
    ) -> Result<C> {
        let ordered = self.create(def, fast, &self.create(def, slow, &self.vacuum())?)?;
        let swapped = self.create(def, slow, &self.create(def, fast, &self.vacuum())?)?;
        Ok(self.inner(&swapped, &ordered))
    }

    /// Two-particle scattering element between an outgoing pair built with
    /// the deformation and an incoming pair built with its opposite:
    /// `< a*_{R,Q}(f) a*(g) vac , a*_{R,-Q}(h) a*(k) vac >`.
    ///
    /// `f` and `h` must be strictly faster than `g` and `k` respectively;
    /// the essential-support gap is checked and a
    /// [`Error::VelocityOrderViolation`] is returned otherwise. The ordering
    /// suppresses the mispaired contraction `<f,k><g,h>`, leaving the
    /// kernel-weighted product of slot overlaps.
    pub fn smatrix_element(
        &self,
        def: &MultiplicativeDeformation,
        f: &[C],
        g: &[C],
        h: &[C],
        k: &[C],
    ) -> Result<C> {
        rapidity_support_gap(&self.rule, f, g, 1e-6)?;
        rapidity_support_gap(&self.rule, h, k, 1e-6)?;
        let opp = def.opposite();
        let out = self.create(def, f, &self.create(def, g, &self.vacuum())?)?;
        let inc = self.create(&opp, h, &self.create(&opp, k, &self.vacuum())?)?;
        Ok(self.inner(&out, &inc))
    }

    /// Relative distance between the deformed and undeformed field actions
    /// on a vector: `||(phi_def - phi_0)(f) psi|| / ||phi_0(f) psi||`.
    /// Vanishes as the deformation function is scaled towards the constant
    /// function one.
    pub fn lambda_limit_residual(
        &self,
        def: &MultiplicativeDeformation,
        f: &TestFunction,
        psi: &FockVector,
    ) -> Result<f64> {
        let triv = MultiplicativeDeformation::trivial(def.dim())?;
        let deformed = self.field_apply(def, f, psi)?;
        let plain = self.field_apply(&triv, f, psi)?;
        let diff = deformed.sub(&plain);
        Ok(self.norm(&diff) / self.norm(&plain).max(1e-300))
    }

    /// Relative norm of the one-particle vector of the lattice
    /// Klein-Gordon image of `f`; vanishes as the lattice symbol approaches
    /// the mass shell under spacing refinement.
    pub fn kg_vacuum_residual(
        &self,
        def: &MultiplicativeDeformation,
        f: &TestFunction,
    ) -> Result<f64> {
        let kg = f.klein_gordon(self.rule.mass())?;
        let num = self.field_apply(def, &kg, &self.vacuum())?;
        let den = self.field_apply(def, f, &self.vacuum())?;
        Ok(self.norm(&num) / self.norm(&den).max(1e-300))
    }

    /// Operator-route sandwich
    /// `< field(h) vac, [field_{def_f}(f), field_{def_g}(g)] field(k) vac >`.
    pub fn commutator_sandwich(
        &self,
        h: &TestFunction,
        f: &TestFunction,
        def_f: &MultiplicativeDeformation,
        g: &TestFunction,
        def_g: &MultiplicativeDeformation,
        k: &TestFunction,
    ) -> Result<C> {
        let triv = MultiplicativeDeformation::trivial(2)?;
        let (hp, _) = self.shell_profiles(h)?;
        let left = self.create(&triv, &hp, &self.vacuum())?;
        let (kp, _) = self.shell_profiles(k)?;
        let right = self.create(&triv, &kp, &self.vacuum())?;
        let fg = self.field_apply(def_f, f, &self.field_apply(def_g, g, &right)?)?;
        let gf = self.field_apply(def_g, g, &self.field_apply(def_f, f, &right)?)?;
        Ok(self.inner(&left, &fg.sub(&gf)))
    }

    /// Norm of the commutator vector of opposite-wedge deformed fields,
    /// `||[field_def(f), field_{def.opposite()}(g)] psi||`. The support of
    /// `f` must lie in the right wedge shifted by `shift` and the support of
    /// `g` in the shifted left wedge; either violation is an error.
    pub fn wedge_commutator_residual(
        &self,
        def: &MultiplicativeDeformation,
        f: &TestFunction,
        g: &TestFunction,
        shift: &Vfield,
        psi: &FockVector,
    ) -> Result<f64> {
        if !f.box_inside_wedge(Wedge::Right, shift, 0.0) {
            return Err(Error::SupportViolation(
                "the deformed-field function must be supported in the shifted right wedge".into(),
            ));
        }
        if !g.box_inside_wedge(Wedge::Left, shift, 0.0) {
            return Err(Error::SupportViolation(
                "the opposite-field function must be supported in the shifted left wedge".into(),
            ));
        }
        let opp = def.opposite();
        let fg = self.field_apply(def, f, &self.field_apply(&opp, g, psi)?)?;
        let gf = self.field_apply(&opp, g, &self.field_apply(def, f, psi)?)?;
        Ok(self.norm(&fg.sub(&gf)))
    }
}

/// Advances a row-major odometer; returns `false` after the last tuple.
fn advance(tuple: &mut [usize], base: usize) -> bool {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Applies a dense `nn x nn` matrix along one axis of a row-major
/// `[nn; n]` array.
fn apply_axis_matrix(data: &[C], matrix: &[f64], nn: usize, n: usize, axis: usize) -> Vec<C> {
    let stride = nn.pow((n - 1 - axis) as u32);
    let outer = nn.pow(axis as u32);
    let mut out = vec![C::new(0.0, 0.0); data.len()];
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * nn * stride + inner;
            for i in 0..nn {
                let mut acc = C::new(0.0, 0.0);
                for j in 0..nn {
                    let w = matrix[i * nn + j];
                    if w != 0.0 {
                        acc += data[base + j * stride] * w;
                    }
                }
                out[base + i * stride] = acc;
            }
        }
    }
    out
}

/// One partial matching: disjoint ordered pairs plus leftover singleton
/// slots (ascending).
#[derive(Debug, Clone)]
pub struct PartialMatching {
    pub pairs: Vec<(usize, usize)>,
    pub singles: Vec<usize>,
}

/// All partial matchings of `{0..n-1}` into pairs `(i < j)` and singletons.
pub fn partial_matchings(n: usize) -> Vec<PartialMatching> {
    let mut out = Vec::new();
    let mut used = vec![false; n];
    fn recurse(
        n: usize,
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<PartialMatching>,
    ) {
        let i = match (0..n).find(|&i| !used[i]) {
            Some(i) => i,
            None => {
                out.push(PartialMatching {
                    pairs: pairs.clone(),
                    singles: Vec::new(),
                });
                return;
            }
        };
        used[i] = true;
        // Option 1: slot i stays a creator (singleton). Mark by recursing
        // and appending afterwards.
        let before = out.len();
        recurse(n, used, pairs, out);
        for m in &mut out[before..] {
            m.singles.push(i);
        }
        // Option 2: pair with each later unused slot.
        for j in (i + 1)..n {
            if used[j] {
                continue;
            }
            used[j] = true;
            pairs.push((i, j));
            recurse(n, used, pairs, out);
            pairs.pop();
            used[j] = false;
        }
        used[i] = false;
    }
    recurse(n, &mut used, &mut Vec::new(), &mut out);
    for m in &mut out {
        m.singles.sort_unstable();
    }
    out
}

/// All permutations of `{0..m-1}` (Heap's algorithm).
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    let mut items: Vec<usize> = (0..m).collect();
    let mut out = Vec::new();
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap(k - 1, items, out);
            if k % 2 == 0 {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }
    heap(m, &mut items, &mut out);
    out
}

/// Normalised Gaussian rapidity packet on the rule nodes.
pub fn gaussian_rapidity_profile(rule: &OnShellRule, center: f64, sigma: f64) -> Vec<C> {
    let mut v: Vec<C> = rule
        .nodes()
        .iter()
        .map(|n| {
            let u = (n.rapidity - center) / sigma;
            C::new((-0.5 * u * u).exp(), 0.0)
        })
        .collect();
    let norm: f64 = rule
        .nodes()
        .iter()
        .zip(&v)
        .map(|(n, x)| n.weight * x.norm_sqr())
        .sum();
    let s = 1.0 / norm.sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    v
}

/// Single-node packet, normalised to unit shell norm.
pub fn sharp_profile(rule: &OnShellRule, index: usize) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); rule.len()];
    v[index] = C::new(1.0 / rule.nodes()[index].weight.sqrt(), 0.0);
    v
}

/// Gap between the essential rapidity supports of a fast and a slow packet;
/// errors when the supports overlap or are mis-ordered.
pub fn rapidity_support_gap(
    rule: &OnShellRule,
    fast: &[C],
    slow: &[C],
    threshold: f64,
) -> Result<f64> {
    let cutoff = |v: &[C]| {
        let max = v.iter().map(|x| x.norm()).fold(0.0f64, f64::max);
        max * threshold
    };
    let cf = cutoff(fast);
    let cs = cutoff(slow);
    let min_fast = rule
        .nodes()
        .iter()
        .zip(fast)
        .filter(|(_, v)| v.norm() > cf)
        .map(|(n, _)| n.rapidity)
        .fold(f64::INFINITY, f64::min);
    let max_slow = rule
        .nodes()
        .iter()
        .zip(slow)
        .filter(|(_, v)| v.norm() > cs)
        .map(|(n, _)| n.rapidity)
        .fold(f64::NEG_INFINITY, f64::max);
    let gap = min_fast - max_slow;
    if gap <= 0.0 {
        return Err(Error::VelocityOrderViolation(format!(
            "rapidity supports overlap or are mis-ordered (gap {gap:.3})"
        )));
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpacetimeGrid;
    use crate::qmatrix::QMatrix;

    fn rule() -> OnShellRule {
        OnShellRule::uniform_rapidity(1.0, 33, 3.0).unwrap()
    }

    fn space() -> FockSpace {
        FockSpace::new(rule(), 3).unwrap()
    }

    fn shipped() -> MultiplicativeDeformation {
        let r = DeformationFunction::new(
            0.25,
            vec![C::new(0.0, 2.0), C::new(1.0, 0.5), C::new(-1.0, 0.5)],
        )
        .unwrap();
        MultiplicativeDeformation::new(r, QMatrix::new(2, 1.0, 0.0).unwrap())
    }

    fn grid() -> SpacetimeGrid {
        SpacetimeGrid::new(2, 32, 6.0, 4).unwrap()
    }

    fn packet(c: [f64; 2], k: [f64; 2]) -> TestFunction {
        TestFunction::bump(
            grid(),
            &Vfield::new(&c),
            &Vfield::new(&[1.4, 1.4]),
            &Vfield::new(&k),
        )
        .unwrap()
    }

    #[test]
    fn canonical_commutation_relations_on_smeared_operators() {
        let fs = space();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let phi = gaussian_rapidity_profile(fs.rule(), 0.4, 0.5);
        let psi = gaussian_rapidity_profile(fs.rule(), -0.3, 0.7);
        // A generic two-particle test vector.
        let v = fs
            .create(
                &triv,
                &gaussian_rapidity_profile(fs.rule(), 0.1, 0.9),
                &fs.create(&triv, &gaussian_rapidity_profile(fs.rule(), -0.6, 0.4), &fs.vacuum())
                    .unwrap(),
            )
            .unwrap();
        let a_adag = fs.annihilate(&triv, &phi, &fs.create(&triv, &psi, &v).unwrap());
        let adag_a = fs.create(&triv, &psi, &fs.annihilate(&triv, &phi, &v)).unwrap();
        let mut pairing = C::new(0.0, 0.0);
        for (i, n) in fs.rule().nodes().iter().enumerate() {
            pairing += phi[i].conj() * psi[i] * n.weight;
        }
        let expected = v.scale(pairing);
        let diff = a_adag.sub(&adag_a).sub(&expected);
        assert!(
            fs.norm(&diff) < 1e-10 * fs.norm(&v),
            "CCR residual {}",
            fs.norm(&diff)
        );
    }

    #[test]
    fn creators_are_adjoint_to_annihilators_twisted_included() {
        let fs = space();
        let def = shipped();
        let phi = gaussian_rapidity_profile(fs.rule(), 0.5, 0.4);
        let a = fs
            .create(
                &def,
                &gaussian_rapidity_profile(fs.rule(), -0.2, 0.6),
                &fs.vacuum(),
            )
            .unwrap();
        let b = fs
            .create(
                &def,
                &gaussian_rapidity_profile(fs.rule(), 0.7, 0.5),
                &fs.create(&def, &gaussian_rapidity_profile(fs.rule(), -0.5, 0.5), &fs.vacuum())
                    .unwrap(),
            )
            .unwrap();
        let lhs = fs.inner(&fs.create(&def, &phi, &a).unwrap(), &b);
        let rhs = fs.inner(&a, &fs.annihilate(&def, &phi, &b));
        assert!((lhs - rhs).norm() < 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn creation_past_the_cap_errors() {
        let fs = space();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let phi = gaussian_rapidity_profile(fs.rule(), 0.0, 0.5);
        let mut v = fs.vacuum();
        for _ in 0..3 {
            v = fs.create(&triv, &phi, &v).unwrap();
        }
        assert!(matches!(
            fs.create(&triv, &phi, &v),
            Err(Error::TruncationOverflow { degree: 4, cap: 3 })
        ));
    }

    #[test]
    fn one_particle_vectors_ignore_the_deformation() {
        let fs = space();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let def = shipped();
        let f = packet([0.0, 0.4], [0.4, -0.3]);
        let a = fs.field_apply(&triv, &f, &fs.vacuum()).unwrap();
        let b = fs.field_apply(&def, &f, &fs.vacuum()).unwrap();
        for n in 0..=fs.n_max() {
            assert_eq!(a.sector(n), b.sector(n), "sector {n} must match exactly");
        }
    }

    #[test]
    fn gns_vector_matches_operator_route() {
        let fs = space();
        let def = std::sync::Arc::new(shipped());
        let f = packet([0.0, 0.4], [0.4, -0.3]);
        let g = packet([0.3, -0.5], [-0.2, 0.5]);
        let h = packet([-0.4, 0.2], [0.1, 0.6]);
        // Degree 3 fully deformed product.
        let ef = TensorElement::from_single(f.clone());
        let eg = TensorElement::from_single(g.clone());
        let eh = TensorElement::from_single(h.clone());
        let prod = crate::deform::deformed_product(
            &def,
            &crate::deform::deformed_product(&def, &ef, &eg).unwrap(),
            &eh,
        )
        .unwrap();
        let combinatorial = fs.gns_vector(&prod).unwrap();
        let operator = fs.apply_fields(&def, &[&f, &g, &h]).unwrap();
        let diff = combinatorial.sub(&operator);
        assert!(
            fs.norm(&diff) < 1e-10 * fs.norm(&operator),
            "GNS mismatch {}",
            fs.norm(&diff)
        );
    }

    #[test]
    fn gns_zero_sector_agrees_with_quasifree_state() {
        let fs = space();
        let def = std::sync::Arc::new(shipped());
        let st = crate::states::QuasiFreeState::new(rule());
        let f = TensorElement::from_single(packet([0.0, 0.4], [0.4, -0.3]));
        let g = TensorElement::from_single(packet([0.3, -0.5], [-0.2, 0.5]));
        let e = crate::deform::deformed_product(&def, &f, &g).unwrap();
        let vec = fs.gns_vector(&e).unwrap();
        let omega = st.evaluate(&e).unwrap();
        assert!((vec.sector(0)[0] - omega).norm() < 1e-12 * (1.0 + omega.norm()));
    }

    #[test]
    fn boost_resampling_converges_with_resolution() {
        // A rapidity profile with compact essential support inside the
        // patch, so the residual isolates the interpolation error.
        let gauss = |rule: &OnShellRule, center: f64| -> Vec<C> {
            rule.nodes()
                .iter()
                .map(|n| {
                    let u = (n.rapidity - center) / 0.5;
                    C::new((-0.5 * u * u).exp(), 0.0)
                })
                .collect()
        };
        let run = |nn: usize| -> f64 {
            let rule = OnShellRule::uniform_rapidity(1.0, nn, 3.0).unwrap();
            let fs = FockSpace::new(rule, 1).unwrap();
            let triv = MultiplicativeDeformation::trivial(2).unwrap();
            let one = fs.create(&triv, &gauss(fs.rule(), 0.2), &fs.vacuum()).unwrap();
            let boosted = fs.boost(0.35, &one);
            let exact = fs
                .create(&triv, &gauss(fs.rule(), 0.2 + 0.35), &fs.vacuum())
                .unwrap();
            fs.norm(&boosted.sub(&exact)) / fs.norm(&exact)
        };
        let coarse = run(33);
        let fine = run(65);
        assert!(
            fine < coarse / 2.0,
            "boost resampling residual: coarse {coarse}, fine {fine}"
        );
        // On a test function the same comparison additionally carries the
        // patch-boundary truncation, so only a loose bound is asserted.
        let fs = space();
        let r = fs
            .boost_covariance_residual(&packet([0.0, 0.4], [0.3, -0.2]), 0.35)
            .unwrap();
        assert!(r < 0.05, "one-particle covariance residual {r}");
    }

    #[test]
    fn translations_and_reflection_are_exact_symmetries() {
        let fs = space();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let f = packet([0.0, 0.4], [0.4, -0.3]);
        let g = grid();
        let a = Vfield::new(&[2.0 * g.dx(), -3.0 * g.dx()]);
        let one = fs.field_apply(&triv, &f, &fs.vacuum()).unwrap();
        // U(a) field(f) vac = field(translated f) vac.
        let lhs = fs.translate(&a, &one);
        let moved = f
            .poincare_pullback(&PoincareTransform::translation_by(a))
            .unwrap();
        let rhs = fs.field_apply(&triv, &moved, &fs.vacuum()).unwrap();
        assert!(fs.norm(&lhs.sub(&rhs)) < 1e-12 * fs.norm(&one));
        // Reflection: J field(f) vac = field(j f) vac.
        let jf = f
            .poincare_pullback(&PoincareTransform::reflection_j(2))
            .unwrap();
        let lhs_j = fs.reflect(&one);
        let rhs_j = fs.field_apply(&triv, &jf, &fs.vacuum()).unwrap();
        assert!(fs.norm(&lhs_j.sub(&rhs_j)) < 1e-12 * fs.norm(&one));
    }

    #[test]
    fn operator_commutator_matches_state_formula() {
        let fs = space();
        let st = crate::states::QuasiFreeState::new(rule());
        let def = shipped();
        let opp = def.opposite();
        let h = packet([0.2, -0.1], [0.3, 0.2]);
        let f = packet([0.0, 2.5], [0.0, -0.5]);
        let g = packet([0.0, -2.5], [0.4, 0.1]);
        let k = packet([-0.3, 0.4], [-0.2, 0.6]);
        let fock_fg = fs.commutator_sandwich(&h, &f, &def, &g, &opp, &k).unwrap();
        let st_fg = st.mixed_four_point(&h, &f, &def, &g, &opp, &k)
            - st.mixed_four_point(&h, &g, &opp, &f, &def, &k);
        assert!(
            (fock_fg - st_fg).norm() < 1e-11 * (1.0 + st_fg.norm()),
            "fock {fock_fg} vs state {st_fg}"
        );
    }

    #[test]
    fn matching_and_permutation_counts() {
        // Involution numbers: 1, 2, 4, 10, 26.
        assert_eq!(partial_matchings(1).len(), 1);
        assert_eq!(partial_matchings(2).len(), 2);
        assert_eq!(partial_matchings(3).len(), 4);
        assert_eq!(partial_matchings(4).len(), 10);
        assert_eq!(permutations(3).len(), 6);
        let gap = rapidity_support_gap(
            &rule(),
            &gaussian_rapidity_profile(&rule(), 1.0, 0.12),
            &gaussian_rapidity_profile(&rule(), -1.0, 0.12),
            1e-4,
        )
        .unwrap();
        assert!(gap > 0.5);
        assert!(rapidity_support_gap(
            &rule(),
            &gaussian_rapidity_profile(&rule(), -1.0, 0.12),
            &gaussian_rapidity_profile(&rule(), 1.0, 0.12),
            1e-4,
        )
        .is_err());
    }

    #[test]
    fn multiplicative_shift_is_unitary_with_opposite_inverse() {
        let fs = space();
        let r = shipped().r().clone();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let psi = fs
            .create(
                &triv,
                &gaussian_rapidity_profile(fs.rule(), 0.7, 0.4),
                &fs.create(&triv, &gaussian_rapidity_profile(fs.rule(), -0.2, 0.6), &fs.vacuum())
                    .unwrap(),
            )
            .unwrap();
        let x = Vfield::new(&[0.4, 1.1]);

        // Zero shift is exactly inert: R(0) = 1 and the multiply is exact.
        let inert = fs.r_shift(&r, &Vfield::zero(2), &psi);
        for n in 0..=fs.n_max() {
            assert_eq!(inert.sector(n), psi.sector(n));
        }

        let shifted = fs.r_shift(&r, &x, &psi);
        let norm = fs.norm(&psi);
        assert!((fs.norm(&shifted) - norm).abs() / norm < 1e-12);

        // The opposite shift inverts...
        let back = fs.r_shift(&r, &x.neg(), &shifted);
        assert!(fs.norm(&back.sub(&psi)) / norm < 1e-12);
        // ... and is the adjoint.
        let chi = fs
            .create(
                &triv,
                &gaussian_rapidity_profile(fs.rule(), 0.1, 0.8),
                &fs.create(&triv, &gaussian_rapidity_profile(fs.rule(), -0.5, 0.5), &fs.vacuum())
                    .unwrap(),
            )
            .unwrap();
        let lhs = fs.inner(&shifted, &chi);
        let rhs = fs.inner(&psi, &fs.r_shift(&r, &x.neg(), &chi));
        assert!(
            (lhs - rhs).norm() / lhs.norm() < 1e-12,
            "lhs {lhs} rhs {rhs} rel {:e}",
            (lhs - rhs).norm() / lhs.norm()
        );
    }

    #[test]
    fn field_distance_from_free_falls_with_the_scaling_parameter() {
        let fs = space();
        let def = shipped();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let f = packet([0.0, 0.5], [0.0, 0.3]);
        let psi = fs
            .apply_fields(&triv, &[&packet([0.2, -0.3], [0.1, 0.2]), &packet([-0.4, 0.1], [0.0, -0.2])])
            .unwrap();
        let mut last = f64::INFINITY;
        for lambda in [1.0, 0.3, 0.1, 0.03] {
            let r = fs
                .lambda_limit_residual(&def.scaled(lambda), &f, &psi)
                .unwrap();
            assert!(r < last, "residual must fall: {r} after {last}");
            last = r;
        }
        assert!(last < 0.1, "smallest-strength residual {last}");
        // The unscaled trivial deformation is exactly inert.
        let zero = fs.lambda_limit_residual(&triv, &f, &psi).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn covariance_residual_vanishes_for_lattice_translations_and_identity() {
        let fs = space();
        let def = shipped();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let f = packet([0.2, 0.4], [0.0, 0.3]);
        let psi = fs
            .create(
                &triv,
                &gaussian_rapidity_profile(fs.rule(), 0.3, 0.6),
                &fs.create(
                    &triv,
                    &gaussian_rapidity_profile(fs.rule(), -0.4, 0.5),
                    &fs.vacuum(),
                )
                .unwrap(),
            )
            .unwrap();

        let id = PoincareTransform::identity(2);
        assert_eq!(fs.covariance_residual(&def, &id, &f, &psi).unwrap(), 0.0);

        // On-lattice translations act by exact index shifts on one side and
        // exact node phases on the other.
        let dx = grid().dx();
        let t = PoincareTransform::translation_by(Vfield::new(&[dx, -2.0 * dx]));
        let r = fs.covariance_residual(&def, &t, &f, &psi).unwrap();
        assert!(r < 1e-10, "translation covariance residual {r:.3e}");

        // The antilinear reflection has no linear lattice representation.
        let j = PoincareTransform::reflection_j(2);
        assert!(matches!(
            fs.covariance_residual(&def, &j, &f, &psi),
            Err(Error::ConfigInvalid(_))
        ));
    }

    #[test]
    fn covariance_residual_for_a_small_boost_shrinks_under_refinement() {
        let def = shipped();
        let chi = 0.1;
        let t = PoincareTransform::translation_by(Vfield::new(&[0.0, 0.375]))
            .compose(&PoincareTransform::boost01(2, chi));
        let residual = |m: usize, nodes: usize, w: f64| -> f64 {
            let sg = SpacetimeGrid::new(2, m, 6.0, 4).unwrap();
            let f = TestFunction::bump(
                sg,
                &Vfield::new(&[0.2, 0.4]),
                &Vfield::new(&[w, w]),
                &Vfield::new(&[0.0, 0.3]),
            )
            .unwrap();
            let rule = OnShellRule::uniform_rapidity(1.0, nodes, 3.0).unwrap();
            let fs = FockSpace::new(rule, 3).unwrap();
            let triv = MultiplicativeDeformation::trivial(2).unwrap();
            let psi = fs
                .create(
                    &triv,
                    &gaussian_rapidity_profile(fs.rule(), 0.3, 0.6),
                    &fs.vacuum(),
                )
                .unwrap();
            fs.covariance_residual(&def, &t, &f, &psi).unwrap()
        };
        let coarse = residual(32, 33, 1.8);
        let fine = residual(64, 65, 1.8);
        let finest = residual(256, 65, 1.8);
        let wide = residual(128, 65, 2.4);
        eprintln!(
            "boost covariance residuals: coarse {coarse:.6e} fine {fine:.6e} finest {finest:.6e} wide {wide:.6e}"
        );
        assert!(coarse < 1e-1, "coarse boost covariance residual {coarse:.3e}");
        assert!(
            fine <= coarse / 2.0,
            "residual must halve: coarse {coarse:.3e} fine {fine:.3e}"
        );
    }

    #[test]
    fn opposite_wedge_fields_commute_and_misplaced_supports_are_rejected() {
        let def = shipped();
        let triv = MultiplicativeDeformation::trivial(2).unwrap();
        let f = TestFunction::bump(
            grid(),
            &Vfield::new(&[0.0, 2.0]),
            &Vfield::new(&[0.8, 1.2]),
            &Vfield::new(&[0.0, 0.3]),
        )
        .unwrap();
        let g = TestFunction::bump(
            grid(),
            &Vfield::new(&[0.1, -2.0]),
            &Vfield::new(&[0.8, 1.2]),
            &Vfield::new(&[0.2, -0.1]),
        )
        .unwrap();
        let zero = Vfield::zero(2);
        let residual = |rule: OnShellRule, d: &MultiplicativeDeformation| -> f64 {
            let fs = FockSpace::new(rule, 3).unwrap();
            fs.wedge_commutator_residual(d, &f, &g, &zero, &fs.vacuum())
                .unwrap()
        };

        // Free-field oracle: with a constant deformation function the
        // commutator on the vacuum is the smeared causal commutator.
        let free = residual(rule(), &triv);
        let coarse = residual(rule(), &def);
        let fine = residual(rule().refined_double().unwrap(), &def);
        eprintln!("wedge commutator: free {free:.6e} coarse {coarse:.6e} fine {fine:.6e}");
        assert!(free < 1e-6, "free-field residual {free:.3e}");
        assert!(coarse < 1e-5, "deformed residual {coarse:.3e}");
        assert!(
            fine <= coarse / 2.0,
            "residual must halve: coarse {coarse:.3e} fine {fine:.3e}"
        );

        let fs = space();
        // Wrong pairing: both fields twisted with the same matrix direction
        // must visibly break the commutator.
        let fg = fs
            .field_apply(&def, &f, &fs.field_apply(&def, &g, &fs.vacuum()).unwrap())
            .unwrap();
        let gf = fs
            .field_apply(&def, &g, &fs.field_apply(&def, &f, &fs.vacuum()).unwrap())
            .unwrap();
        let wrong = fs.norm(&fg.sub(&gf));
        eprintln!("wrong pairing {wrong:.6e}");
        assert!(
            wrong >= 10.0 * coarse,
            "same-direction pairing {wrong:.3e} vs residual {coarse:.3e}"
        );

        // One-particle state: deeper channels still cancel.
        let psi = fs
            .create(
                &triv,
                &gaussian_rapidity_profile(fs.rule(), 0.2, 0.7),
                &fs.vacuum(),
            )
            .unwrap();
        let one = fs
            .wedge_commutator_residual(&def, &f, &g, &zero, &psi)
            .unwrap();
        eprintln!("one-particle {one:.6e}");
        assert!(one < 1e-4, "one-particle residual {one:.3e}");

        // Support preconditions: swapped wedges and an over-shifted wedge
        // pair are both rejected.
        assert!(matches!(
            fs.wedge_commutator_residual(&def, &g, &f, &zero, &fs.vacuum()),
            Err(Error::SupportViolation(_))
        ));
        assert!(matches!(
            fs.wedge_commutator_residual(&def, &f, &g, &Vfield::new(&[0.0, 2.0]), &fs.vacuum()),
            Err(Error::SupportViolation(_))
        ));
    }
}
