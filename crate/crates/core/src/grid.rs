//! Finite spacetime lattice and its dual momentum lattice.
//!
//! A grid covers the box `[-L, L)^d` with `M` points per axis and spacing
//! `dx = 2L/M`. Axis coordinates are `x_i = -L + i*dx`. The dual lattice
//! holds the momenta `p_k = k * pi/L` for integer `k in [-M/2, M/2)`; plane
//! waves `exp(i p.x)` with `p` on the dual lattice are periodic over the box.
//!
//! Throughout the crate the Minkowski inner product uses signature
//! `(+, -, ..., -)`: `p.x = p0 x0 - p1 x1 - ...`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum supported spacetime dimension.
pub const MAX_D: usize = 4;

/// A spacetime vector in up to `MAX_D` dimensions. Component 0 is time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vfield {
    d: usize,
    x: [f64; MAX_D],
}

impl Vfield {
    pub fn new(components: &[f64]) -> Self {
        assert!(!components.is_empty() && components.len() <= MAX_D);
        let mut x = [0.0; MAX_D];
        x[..components.len()].copy_from_slice(components);
        Vfield {
            d: components.len(),
            x,
        }
    }

    pub fn zero(d: usize) -> Self {
        assert!(d >= 1 && d <= MAX_D);
        Vfield { d, x: [0.0; 4] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn comps(&self) -> &[f64] {
        &self.x[..self.d]
    }

    pub fn get(&self, i: usize) -> f64 {
        debug_assert!(i < self.d);
        self.x[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        debug_assert!(i < self.d);
        self.x[i] = v;
    }

    /// Minkowski inner product with signature `(+, -, ..., -)`.
    pub fn mdot(&self, other: &Vfield) -> f64 {
        debug_assert_eq!(self.d, other.d);
        let mut s = self.x[0] * other.x[0];
        for i in 1..self.d {
            s -= self.x[i] * other.x[i];
        }
        s
    }

    pub fn add(&self, other: &Vfield) -> Vfield {
        debug_assert_eq!(self.d, other.d);
        let mut out = *self;
        for i in 0..self.d {
            out.x[i] += other.x[i];
        }
        out
    }

    pub fn sub(&self, other: &Vfield) -> Vfield {
        debug_assert_eq!(self.d, other.d);
        let mut out = *self;
        for i in 0..self.d {
            out.x[i] -= other.x[i];
        }
        out
    }

    pub fn neg(&self) -> Vfield {
        let mut out = *self;
        for i in 0..self.d {
            out.x[i] = -out.x[i];
        }
        out
    }

    pub fn scale(&self, s: f64) -> Vfield {
        let mut out = *self;
        for i in 0..self.d {
            out.x[i] *= s;
        }
        out
    }

    /// Spatial reflection combined with time reversal: negates components 0
    /// and 1, fixes the rest.
    pub fn reflect01(&self) -> Vfield {
        let mut out = *self;
        out.x[0] = -out.x[0];
        out.x[1] = -out.x[1];
        out
    }

    /// Euclidean norm, used only for diagnostics and tolerances.
    pub fn euclid_norm(&self) -> f64 {
        self.comps().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Which wedge a support statement refers to: the right wedge
/// `W0 = { x : x1 > |x0| }` or its causal complement `W0' = -W0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Wedge {
    Right,
    Left,
}

impl Wedge {
    /// Whether `x` lies strictly inside the (shifted) wedge `self + a`.
    pub fn contains(&self, x: &Vfield, shift: &Vfield) -> bool {
        let t = x.get(0) - shift.get(0);
        let s = x.get(1) - shift.get(1);
        match self {
            Wedge::Right => s > t.abs(),
            Wedge::Left => -s > t.abs(),
        }
    }

    pub fn opposite(&self) -> Wedge {
        match self {
            Wedge::Right => Wedge::Left,
            Wedge::Left => Wedge::Right,
        }
    }
}

/// An even-dimensional periodic spacetime lattice together with the
/// truncation cap for graded algebra elements living on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimeGrid {
    d: usize,
    m: usize,
    l: f64,
    n_trunc: usize,
}

impl SpacetimeGrid {
    /// Default truncation cap for graded elements.
    pub const DEFAULT_N_TRUNC: usize = 4;

    pub fn new(d: usize, m: usize, l: f64, n_trunc: usize) -> Result<Self> {
        if d < 2 || d % 2 != 0 || d > MAX_D {
            return Err(Error::ConfigInvalid(format!(
                "dimension must be even and in [2, {MAX_D}], got {d}"
            )));
        }
        if m < 8 || m % 2 != 0 {
            return Err(Error::ConfigInvalid(format!(
                "points per axis must be even and >= 8, got {m}"
            )));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::ConfigInvalid(format!("extent must be positive, got {l}")));
        }
        if n_trunc == 0 {
            return Err(Error::ConfigInvalid("truncation cap must be >= 1".into()));
        }
        Ok(SpacetimeGrid { d, m, l, n_trunc })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Points per axis.
    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    /// Half-extent `L`; the box is `[-L, L)` per axis.
    pub fn extent(&self) -> f64 {
        self.l
    }

    pub fn n_trunc(&self) -> usize {
        self.n_trunc
    }

    /// Lattice spacing `dx = 2L/M`.
    pub fn dx(&self) -> f64 {
        2.0 * self.l / self.m as f64
    }

    /// Dual lattice spacing `dp = pi/L`.
    pub fn dp(&self) -> f64 {
        std::f64::consts::PI / self.l
    }

    /// Total number of lattice points `M^d`.
    pub fn volume(&self) -> usize {
        self.m.pow(self.d as u32)
    }

    /// Coordinate of axis index `i`: `-L + i*dx`.
    pub fn axis_coord(&self, i: i64) -> f64 {
        -self.l + i as f64 * self.dx()
    }

    /// Position vector of a full lattice multi-index.
    pub fn coord(&self, idx: &[i64]) -> Vfield {
        debug_assert_eq!(idx.len(), self.d);
        let mut v = Vfield::zero(self.d);
        for (a, &i) in idx.iter().enumerate() {
            v.set(a, self.axis_coord(i));
        }
        v
    }

    /// Signed dual index for flat axis index `k in [0, M)`: maps the upper
    /// half to negative frequencies, giving `k_signed in [-M/2, M/2)`.
    pub fn dual_signed(&self, k: usize) -> i64 {
        debug_assert!(k < self.m);
        if k < self.m / 2 {
            k as i64
        } else {
            k as i64 - self.m as i64
        }
    }

    /// Momentum component of dual axis index `k in [0, M)`.
    pub fn dual_coord(&self, k: usize) -> f64 {
        self.dual_signed(k) as f64 * self.dp()
    }

    /// Momentum vector of a dual multi-index.
    pub fn dual_momentum(&self, idx: &[usize]) -> Vfield {
        debug_assert_eq!(idx.len(), self.d);
        let mut v = Vfield::zero(self.d);
        for (a, &k) in idx.iter().enumerate() {
            v.set(a, self.dual_coord(k));
        }
        v
    }

    /// Checks that two grids (including truncation caps) agree.
    pub fn ensure_same(&self, other: &SpacetimeGrid) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }

    /// Largest momentum representable per axis (Nyquist limit `pi/dx`).
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }
}

/// Iterates over all multi-indices `0 <= idx[a] < shape[a]` in row-major
/// order. Used for small dense loops over boxes and dual lattices.
pub struct MultiIndexIter {
    shape: Vec<usize>,
    idx: Vec<usize>,
    done: bool,
}

impl MultiIndexIter {
    pub fn new(shape: &[usize]) -> Self {
        let done = shape.iter().any(|&s| s == 0);
        MultiIndexIter {
            shape: shape.to_vec(),
            idx: vec![0; shape.len()],
            done,
        }
    }
}

impl Iterator for MultiIndexIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        // Row-major increment: last axis fastest.
        for a in (0..self.shape.len()).rev() {
            self.idx[a] += 1;
            if self.idx[a] < self.shape[a] {
                return Some(out);
            }
            self.idx[a] = 0;
        }
        self.done = true;
        Some(out)
    }
}
