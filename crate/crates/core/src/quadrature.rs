//! Quadrature rules on the upper mass shell at `d = 2`.
//!
//! The invariant measure on the shell `p = (eps_p, p^1)`,
//! `eps_p = sqrt(m^2 + (p^1)^2)`, is `dmu = dp^1 / eps_p = dtheta` in the
//! rapidity parametrisation `p = m (cosh theta, sinh theta)`. Two
//! interchangeable node families are provided: Gauss-Legendre in the spatial
//! momentum over `[-P, P]`, and uniformly spaced rapidities over
//! `[-T, T]` with trapezoid weights. Both are built mirror-symmetrically, so
//! node `i` and node `n-1-i` carry exactly opposite spatial momenta.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Vfield;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendreMomentum,
    UniformRapidity,
}

#[derive(Debug, Clone, Copy)]
pub struct OnShellNode {
    /// On-shell two-momentum `(eps, p^1)`.
    pub momentum: Vfield,
    pub rapidity: f64,
    /// Quadrature weight with respect to `dmu`.
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct OnShellRule {
    mass: f64,
    kind: RuleKind,
    /// Half-width of the covered range: `P` in momentum or `T` in rapidity.
    span: f64,
    nodes: Vec<OnShellNode>,
}

impl OnShellRule {
    /// Gauss-Legendre nodes in the spatial momentum on `[-p_max, p_max]`.
    pub fn gauss_legendre(mass: f64, n: usize, p_max: f64) -> Result<Self> {
        if !(mass > 0.0) || !(p_max > 0.0) || n < 2 {
            return Err(Error::ConfigInvalid(
                "mass and momentum range must be positive, n >= 2".into(),
            ));
        }
        let (xs, ws) = legendre_nodes(n);
        let nodes = xs
            .iter()
            .zip(&ws)
            .map(|(&x, &w)| {
                let p = p_max * x;
                let eps = (mass * mass + p * p).sqrt();
                OnShellNode {
                    momentum: Vfield::new(&[eps, p]),
                    rapidity: (p / mass).asinh(),
                    weight: p_max * w / eps,
                }
            })
            .collect();
        Ok(OnShellRule {
            mass,
            kind: RuleKind::GaussLegendreMomentum,
            span: p_max,
            nodes,
        })
    }

    /// Uniformly spaced rapidities on `[-theta_max, theta_max]` with
    /// trapezoid weights.
    pub fn uniform_rapidity(mass: f64, n: usize, theta_max: f64) -> Result<Self> {
        if !(mass > 0.0) || !(theta_max > 0.0) || n < 2 {
            return Err(Error::ConfigInvalid(
                "mass and rapidity range must be positive, n >= 2".into(),
            ));
        }
        let delta = 2.0 * theta_max / (n - 1) as f64;
        let center = (n - 1) as f64 / 2.0;
        let nodes = (0..n)
            .map(|i| {
                let theta = (i as f64 - center) * delta;
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                OnShellNode {
                    momentum: Vfield::new(&[mass * theta.cosh(), mass * theta.sinh()]),
                    rapidity: theta,
                    weight: w * delta,
                }
            })
            .collect();
        Ok(OnShellRule {
            mass,
            kind: RuleKind::UniformRapidity,
            span: theta_max,
            nodes,
        })
    }

    /// The same rule at doubled resolution over the same range.
    pub fn refined_double(&self) -> Result<OnShellRule> {
        match self.kind {
            RuleKind::GaussLegendreMomentum => {
                Self::gauss_legendre(self.mass, 2 * self.nodes.len(), self.span)
            }
            RuleKind::UniformRapidity => {
                Self::uniform_rapidity(self.mass, 2 * self.nodes.len() - 1, self.span)
            }
        }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[OnShellNode] {
        &self.nodes
    }

    /// `integral dmu(p) f(p)` over the covered shell patch.
    pub fn integrate(&self, mut f: impl FnMut(&OnShellNode) -> C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for node in &self.nodes {
            acc += f(node) * node.weight;
        }
        acc
    }

    /// CSV serialisation, one node per row: the momentum components, the
    /// rapidity, and the weight. Deterministic bytes for a given rule.
    pub fn to_csv(&self) -> String {
        let d = self
            .nodes
            .first()
            .map(|n| n.momentum.dim())
            .unwrap_or(2);
        let mut out = String::new();
        for a in 0..d {
            out.push_str(&format!("p{a},"));
        }
        out.push_str("rapidity,weight\n");
        for n in &self.nodes {
            for a in 0..d {
                out.push_str(&format!("{:.16e},", n.momentum.get(a)));
            }
            out.push_str(&format!("{:.16e},{:.16e}\n", n.rapidity, n.weight));
        }
        out
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, mirror-symmetric by
/// construction (Newton iteration on the positive half, reflected).
pub fn legendre_nodes(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Tricomi-style initial guess for the i-th root from the top.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            let step = p / d;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_eval(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x from the cosine guess descends from +1; store symmetric pairs.
        xs[i] = x;
        xs[n - 1 - i] = -x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
        let (_, d) = legendre_eval(n, 0.0);
        ws[n / 2] = 2.0 / (d * d);
    }
    // Ascending order is more natural for a momentum axis.
    xs.reverse();
    ws.reverse();
    (xs, ws)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x`.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
