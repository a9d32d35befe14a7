//! Numerical laboratory for multiplicative deformations of free quantum
//! fields on a spacetime lattice.
//!
//! The crate builds a truncated graded algebra of test functions, deforms its
//! tensor product with a two-point multiplier built from a boundary function
//! `R` and an admissible matrix `Q`, evaluates quasi-free states on the
//! result, represents the deformed fields on a truncated Fock space, and
//! exposes the induced 2D two-particle scattering function. Every identity
//! the construction promises (involutivity, associativity, state
//! compatibility, twisted commutation relations, wedge locality, scattering
//! unitarity and crossing) is checkable at desk scale through the `suites`
//! verification runner.

pub mod config;
pub mod container;
pub mod deform;
pub mod element;
pub mod error;
pub mod fock;
pub mod grid;
pub mod integrable;
pub mod poincare;
pub mod qmatrix;
pub mod quadrature;
pub mod rfunc;
pub mod states;
pub mod suites;
pub mod testfn;

pub use error::{Error, Result};
