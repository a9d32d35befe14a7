//! Admissible deformation matrices.
//!
//! A deformation matrix `Q` is an antisymmetric linear map of Minkowski
//! space, `(Qp).q = -p.(Qq)`, drawn from the standard family adapted to the
//! right wedge. At `d = 2` it is `kappa` times the swap of the two light-cone
//! components, `Qp = kappa (p^1, p^0)`; at `d = 4` an extra rotation block
//! `kappa'` couples the two transverse axes. Admissibility (`kappa >= 0`)
//! makes the induced momentum-transfer function `p -> p.Qq` nonnegative on
//! ordered pairs from the forward mass shell half associated with the right
//! wedge, which is what wedge locality of the deformed fields rests on.

use crate::error::{Error, Result};
use crate::grid::{Vfield, MAX_D};
use crate::poincare::LorentzMatrix;

/// Tolerance for recognising a conjugated matrix as a member of the family.
const FAMILY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QMatrix {
    d: usize,
    kappa: f64,
    kappa_prime: f64,
}

impl QMatrix {
    pub fn new(d: usize, kappa: f64, kappa_prime: f64) -> Result<Self> {
        if d != 2 && d != 4 {
            return Err(Error::Unsupported(format!(
                "deformation matrices are defined for d = 2 or d = 4, got {d}"
            )));
        }
        if d == 2 && kappa_prime != 0.0 {
            return Err(Error::ConfigInvalid(
                "the transverse coefficient kappa' only exists at d = 4".into(),
            ));
        }
        if !kappa.is_finite() || !kappa_prime.is_finite() {
            return Err(Error::ConfigInvalid("Q coefficients must be finite".into()));
        }
        Ok(QMatrix {
            d,
            kappa,
            kappa_prime,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_prime(&self) -> f64 {
        self.kappa_prime
    }

    /// Whether this matrix is admissible for the right wedge.
    pub fn is_admissible(&self) -> bool {
        self.kappa >= 0.0
    }

    /// Applies `Q` to a vector: `(Qp)^0 = kappa p^1`, `(Qp)^1 = kappa p^0`,
    /// and at `d = 4` additionally `(Qp)^2 = kappa' p^3`, `(Qp)^3 = -kappa' p^2`.
    pub fn apply(&self, p: &Vfield) -> Vfield {
        let mut out = Vfield::zero(self.d);
        out.set(0, self.kappa * p.get(1));
        out.set(1, self.kappa * p.get(0));
        if self.d == 4 {
            out.set(2, self.kappa_prime * p.get(3));
            out.set(3, -self.kappa_prime * p.get(2));
        }
        out
    }

    /// The Minkowski pairing `p.(Qq)`, antisymmetric under `p <-> q`.
    pub fn pairing(&self, p: &Vfield, q: &Vfield) -> f64 {
        p.mdot(&self.apply(q))
    }

    /// Flips the wedge: the opposite deformation uses `-Q`.
    pub fn negate(&self) -> QMatrix {
        QMatrix {
            d: self.d,
            kappa: -self.kappa,
            kappa_prime: -self.kappa_prime,
        }
    }

    /// Scales both coefficients (used for deformation-strength ladders).
    pub fn scale(&self, lambda: f64) -> QMatrix {
        QMatrix {
            d: self.d,
            kappa: lambda * self.kappa,
            kappa_prime: lambda * self.kappa_prime,
        }
    }

    /// Dense matrix of the map `p -> Qp` in vector components.
    pub fn matrix(&self) -> [[f64; MAX_D]; MAX_D] {
        let mut m = [[0.0; MAX_D]; MAX_D];
        m[0][1] = self.kappa;
        m[1][0] = self.kappa;
        if self.d == 4 {
            m[2][3] = self.kappa_prime;
            m[3][2] = -self.kappa_prime;
        }
        m
    }

    /// Conjugation by a Lorentz transformation with the time-orientation
    /// sign: `Q -> sgn(L) L Q L^{-1}`, where `sgn = +1` for orthochronous
    /// `L` and `-1` otherwise. Errors when the result leaves the family.
    pub fn lorentz_conjugate(&self, l: &LorentzMatrix) -> Result<QMatrix> {
        if l.dim() != self.d {
            return Err(Error::GridMismatch(
                "Lorentz matrix dimension differs from Q dimension".into(),
            ));
        }
        let sign = if l.is_orthochronous() { 1.0 } else { -1.0 };
        let inv = l.inverse();
        let q = self.matrix();
        let d = self.d;
        let mut out = [[0.0; MAX_D]; MAX_D];
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        acc += l.get(i, a) * q[a][b] * inv.get(b, j);
                    }
                }
                out[i][j] = sign * acc;
            }
        }
        let candidate = QMatrix {
            d,
            kappa: out[0][1],
            kappa_prime: if d == 4 { out[2][3] } else { 0.0 },
        };
        let model = candidate.matrix();
        let scale = 1.0 + self.kappa.abs() + self.kappa_prime.abs();
        for i in 0..d {
            for j in 0..d {
                if (out[i][j] - model[i][j]).abs() > FAMILY_TOL * scale {
                    return Err(Error::Unsupported(format!(
                        "conjugated matrix leaves the wedge-adapted family at entry ({i}, {j})"
                    )));
                }
            }
        }
        Ok(candidate)
    }
}
