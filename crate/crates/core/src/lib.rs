//! Numerical laboratory for the harmonic Dirichlet space `D(𝕋)`.
//!
//! Functions on the unit circle are represented by equispaced boundary samples
//! ([`GridFunction`]) or by symmetric Fourier coefficient blocks
//! ([`FourierSeries`]). On top of these the crate provides
//!
//! * spectral and double-integral (Douglas) Dirichlet norms, local Dirichlet
//!   integrals and fractional variants ([`norms`]),
//! * outer functions with prescribed boundary modulus and the certificate
//!   multipliers `p_ε`, `F_ε` ([`outer`]),
//! * closed subsets of the circle, their complementary arcs, the counting
//!   function `N_E(t)` and the Carleson integral ([`geometry`]),
//! * logarithmic and α-energies, equilibrium measures and capacities
//!   ([`capacity`]),
//! * end-to-end cyclicity certificates along an ε-schedule ([`certify`]).
//!
//! All reductions over grids use pairwise summation in a fixed order, so
//! results do not depend on the number of worker threads.

pub mod capacity;
pub mod certify;
pub mod circle_fn;
pub mod cli;
mod error;
pub mod geometry;
pub mod norms;
pub mod numeric;
pub mod outer;

pub use circle_fn::{FourierSeries, GridFunction};
pub use error::{Error, Result};
