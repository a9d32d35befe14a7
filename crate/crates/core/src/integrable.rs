//! Two-dimensional integrable-model kinematics and the scattering function
//! attached to a multiplicative deformation.
//!
//! On the two-dimensional mass shell, parametrised by rapidity through
//! `p(theta) = m (cosh theta, sinh theta)`, the two-point multiplier of an
//! admissible deformation depends only on rapidity differences, and the
//! exchange factor of the twisted node operators is
//!
//! ```text
//!   S(theta) = R(a sinh theta)^2,      a = kappa lambda m^2 >= 0.
//! ```
//!
//! `S` inherits unitarity, hermitian analyticity and crossing symmetry from
//! the defining relations of `R`, and its poles in the extended strip
//! `-eps < Im zeta < pi + eps` are the images of the poles of `R` under the
//! two `arcsinh` branches. A scattering function without such poles is
//! classified as regular at that margin.

use num_complex::Complex64;

use crate::deform::MultiplicativeDeformation;
use crate::error::{Error, Result};
use crate::fock::{sharp_profile, FockSpace, FockVector};
use crate::grid::Vfield;
use crate::quadrature::OnShellRule;
use crate::rfunc::DeformationFunction;

type C = Complex64;

/// Mass-shell parametrisation of two-dimensional momenta by rapidity.
#[derive(Debug, Clone, Copy)]
pub struct RapidityKinematics {
    mass: f64,
}

impl RapidityKinematics {
    pub fn new(mass: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::ConfigInvalid("mass must be positive".into()));
        }
        Ok(RapidityKinematics { mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn momentum(&self, theta: f64) -> Vfield {
        Vfield::new(&[self.mass * theta.cosh(), self.mass * theta.sinh()])
    }

    /// The invariant `p(theta1) . Q p(theta2) = kappa m^2 sinh(theta2 - theta1)`
    /// for the standard admissible matrix with parameter `kappa`.
    pub fn pair_invariant(&self, kappa: f64, theta1: f64, theta2: f64) -> f64 {
        kappa * self.mass * self.mass * (theta2 - theta1).sinh()
    }
}

/// The scattering function `S(theta) = R(a sinh theta)^2`.
#[derive(Debug, Clone)]
pub struct ScatteringFunction {
    r: DeformationFunction,
    coupling: f64,
}

impl ScatteringFunction {
    pub fn new(r: DeformationFunction, coupling: f64) -> Result<Self> {
        if !(coupling.is_finite() && coupling >= 0.0) {
            return Err(Error::ConfigInvalid(
                "scattering coupling must be finite and nonnegative".into(),
            ));
        }
        Ok(ScatteringFunction { r, coupling })
    }

    /// The scattering function of a deformation at strength `lambda` on the
    /// shell of the given mass. Requires an admissible two-dimensional
    /// matrix part.
    pub fn from_deformation(
        def: &MultiplicativeDeformation,
        mass: f64,
        lambda: f64,
    ) -> Result<Self> {
        if def.dim() != 2 {
            return Err(Error::Unsupported(
                "scattering functions are a two-dimensional construction".into(),
            ));
        }
        if !def.q().is_admissible() {
            return Err(Error::ConfigInvalid(
                "the matrix part must be admissible (kappa >= 0)".into(),
            ));
        }
        ScatteringFunction::new(def.r().clone(), def.q().kappa() * lambda * mass * mass)
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn r(&self) -> &DeformationFunction {
        &self.r
    }

    pub fn eval(&self, theta: f64) -> C {
        let v = self.r.eval(self.coupling * theta.sinh());
        v * v
    }

    pub fn eval_complex(&self, zeta: C) -> Result<C> {
        let v = self.r.eval_complex(zeta.sinh() * self.coupling)?;
        Ok(v * v)
    }

    /// Log-spaced sample set `|theta| in [lo, hi]`, both signs.
    pub fn sample_thetas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * n);
        for k in 0..n {
            let t = lo * (hi / lo).powf(k as f64 / (n - 1) as f64);
            out.push(t);
            out.push(-t);
        }
        out
    }

    /// Maximum residual of the defining relations over the samples:
    /// `S(0) = 1`, `|S| = 1`, `S(theta) S(-theta) = 1`,
    /// `conj S(theta) = S(-theta)`, and crossing `S(i pi - zeta) = S(zeta)`.
    pub fn relation_residual(&self, thetas: &[f64]) -> Result<f64> {
        let one = C::new(1.0, 0.0);
        let mut worst = (self.eval(0.0) - one).norm();
        for &t in thetas {
            let s = self.eval(t);
            let sm = self.eval(-t);
            worst = worst.max((s.norm() - 1.0).abs());
            worst = worst.max((s * sm - one).norm());
            worst = worst.max((s.conj() - sm).norm());
            let z = C::new(0.0, std::f64::consts::PI) - C::new(t, 0.0);
            let crossed = self.eval_complex(z)?;
            worst = worst.max((crossed - s).norm());
        }
        Ok(worst)
    }

    /// Poles of `S` in the closed strip `0 <= Im zeta <= pi` extended by
    /// `margin` on both sides. Each pole of `R` at `-z` contributes the two
    /// `arcsinh` branches of `sinh zeta = -z / a`.
    pub fn strip_poles(&self, margin: f64) -> Vec<C> {
        let mut out = Vec::new();
        if self.coupling == 0.0 {
            return out;
        }
        for z in self.r.zeros() {
            let w = -z / self.coupling;
            let principal = w.asinh();
            for zeta in [principal, C::new(0.0, std::f64::consts::PI) - principal] {
                if zeta.im > -margin && zeta.im < std::f64::consts::PI + margin {
                    out.push(zeta);
                }
            }
        }
        out
    }

    /// Pole-based regularity classification with a sampled bound on the
    /// strip-boundary modulus.
    pub fn regularity(&self, margin: f64, re_span: f64, n_boundary: usize) -> Result<RegularityReport> {
        if !(margin.is_finite() && margin > 0.0) {
            return Err(Error::ConfigInvalid("strip margin must be positive".into()));
        }
        let poles = self.strip_poles(margin);
        let mut sup = 0.0f64;
        for line in [-margin, std::f64::consts::PI + margin] {
            for k in 0..n_boundary {
                let x = -re_span + 2.0 * re_span * k as f64 / (n_boundary - 1) as f64;
                match self.eval_complex(C::new(x, line)) {
                    Ok(v) => sup = sup.max(v.norm()),
                    Err(Error::PoleHit(_)) => sup = f64::INFINITY,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(RegularityReport {
            regular: poles.is_empty(),
            poles_in_strip: poles,
            boundary_sup: sup,
        })
    }

    /// Largest distance of `S` from the undeformed value over the samples.
    pub fn distance_from_free(&self, thetas: &[f64]) -> f64 {
        thetas
            .iter()
            .map(|&t| (self.eval(t) - C::new(1.0, 0.0)).norm())
            .fold(0.0, f64::max)
    }

    /// CSV evaluation table with columns `theta, re, im`; deterministic
    /// bytes for given samples.
    pub fn csv_table(&self, thetas: &[f64]) -> String {
        let mut out = String::from("theta,re,im\n");
        for &t in thetas {
            let v = self.eval(t);
            out.push_str(&format!("{t:.16e},{:.16e},{:.16e}\n", v.re, v.im));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub regular: bool,
    pub poles_in_strip: Vec<C>,
    pub boundary_sup: f64,
}

impl RegularityReport {
    /// JSON form: the verdict, the first offending pole (or null), every
    /// strip pole, and the sampled boundary bound.
    pub fn to_json(&self) -> String {
        let zeta_star = self
            .poles_in_strip
            .first()
            .map(|z| serde_json::json!([z.re, z.im]))
            .unwrap_or(serde_json::Value::Null);
        let poles: Vec<serde_json::Value> = self
            .poles_in_strip
            .iter()
            .map(|z| serde_json::json!([z.re, z.im]))
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "regular": self.regular,
            "zeta_star": zeta_star,
            "poles_in_strip": poles,
            "sup_bound": self.boundary_sup,
        }))
        .expect("report serialises")
    }
}

/// Quadrature route for the two-packet scattering overlap of an ordered
/// pair (`fast` ahead of `slow` in rapidity):
/// `sum_{ij} w_i w_j S(theta_j - theta_i) |fast_i|^2 |slow_j|^2`.
pub fn scattering_integral(
    rule: &OnShellRule,
    s: &ScatteringFunction,
    fast: &[C],
    slow: &[C],
) -> C {
    let mut acc = C::new(0.0, 0.0);
    for (i, ni) in rule.nodes().iter().enumerate() {
        if fast[i].norm_sqr() == 0.0 {
            continue;
        }
        for (j, nj) in rule.nodes().iter().enumerate() {
            if slow[j].norm_sqr() == 0.0 {
                continue;
            }
            acc += s.eval(nj.rapidity - ni.rapidity)
                * (ni.weight * fast[i].norm_sqr())
                * (nj.weight * slow[j].norm_sqr());
        }
    }
    acc
}

/// Quadrature route for the two-particle scattering element with four
/// independent packets: the double node sum of the squared pair kernel
/// against `conj(f g) h k`, with the faster packets (`f`, `h`) in the first
/// slot and the slower ones (`g`, `k`) in the second,
/// `sum_{ij} w_i w_j S(theta_i - theta_j) conj(f_i) h_i conj(g_j) k_j`.
/// With the constant scattering function this reduces to `<f,h><g,k>`.
///
/// The kernel orientation is opposite to [`scattering_integral`] because the
/// conjugated (outgoing) state carries the faster packet first, whereas the
/// two-packet overlap conjugates the swapped state.
pub fn smatrix_integral(
    rule: &OnShellRule,
    s: &ScatteringFunction,
    f: &[C],
    g: &[C],
    h: &[C],
    k: &[C],
) -> C {
    let mut acc = C::new(0.0, 0.0);
    for (i, ni) in rule.nodes().iter().enumerate() {
        let fh = f[i].conj() * h[i];
        if fh.norm_sqr() == 0.0 {
            continue;
        }
        for (j, nj) in rule.nodes().iter().enumerate() {
            let gk = g[j].conj() * k[j];
            if gk.norm_sqr() == 0.0 {
                continue;
            }
            acc += s.eval(ni.rapidity - nj.rapidity) * (ni.weight * nj.weight) * fh * gk;
        }
    }
    acc
}

/// Residual of the exchange relation of two twisted node annihilators,
/// `z_i z_j = S(theta_j - theta_i) z_j z_i`, applied to a test vector.
pub fn zf_annihilator_residual(
    fs: &FockSpace,
    def: &MultiplicativeDeformation,
    s: &ScatteringFunction,
    i: usize,
    j: usize,
    v: &FockVector,
) -> f64 {
    let zi = sharp_profile(fs.rule(), i);
    let zj = sharp_profile(fs.rule(), j);
    let lhs = fs.annihilate(def, &zi, &fs.annihilate(def, &zj, v));
    let rhs = fs
        .annihilate(def, &zj, &fs.annihilate(def, &zi, v))
        .scale(s.eval(fs.rule().nodes()[j].rapidity - fs.rule().nodes()[i].rapidity));
    let scale = fs.norm(v).max(1e-300);
    fs.norm(&lhs.sub(&rhs)) / scale
}

/// Residual of the mixed exchange relation
/// `z_i z*_j = S(theta_i - theta_j) z*_j z_i + delta_ij`, with unit-norm
/// sharp packets so the contraction term is exactly the identity.
pub fn zf_mixed_residual(
    fs: &FockSpace,
    def: &MultiplicativeDeformation,
    s: &ScatteringFunction,
    i: usize,
    j: usize,
    v: &FockVector,
) -> Result<f64> {
    let zi = sharp_profile(fs.rule(), i);
    let zj = sharp_profile(fs.rule(), j);
    let lhs = fs.annihilate(def, &zi, &fs.create(def, &zj, v)?);
    let mut rhs = fs
        .create(def, &zj, &fs.annihilate(def, &zi, v))?
        .scale(s.eval(fs.rule().nodes()[i].rapidity - fs.rule().nodes()[j].rapidity));
    if i == j {
        rhs = rhs.add(v);
    }
    let scale = fs.norm(v).max(1e-300);
    Ok(fs.norm(&lhs.sub(&rhs)) / scale)
}
