//! Decision procedures for Einstein nilradicals.
//!
//! A nilpotent Lie algebra is an Einstein nilradical when it is the nilradical
//! of a solvable Lie algebra carrying an Einstein inner product. This crate
//! decides that property and constructs the certifying data:
//!
//! - the pre-Einstein derivation, computed over exact rationals
//!   ([`pre_einstein`]);
//! - the nice-basis certificate of the positivity test `Y Yᵗ α = [1]`,
//!   together with its convex-geometry counterpart ([`nice`]);
//! - the nilsoliton inner product, either in closed form or as the limit of a
//!   gradient flow on a reductive group orbit ([`flow`]);
//! - two-step algebras presented by tuples of skew-symmetric matrices, their
//!   duals, and randomized surveys ([`two_step`]).
//!
//! Everything upstream of the flow is exact: structure constants, kernels,
//! the positivity LP and the projections are all big-rational arithmetic.
//! Floating point enters only where square roots or matrix exponentials do.

pub mod algebra;
pub mod classify;
pub mod corpus;
pub mod flow;
pub mod linalg;
pub mod mat;
pub mod nice;
pub mod pre_einstein;
pub mod ricci;
pub mod two_step;

/// Exact rational scalar used throughout the structure-constant layer.
pub type Q = num_rational::BigRational;

pub use algebra::{Derivation, LieAlgebra, Subspace};
pub use linalg::RationalMatrix;
