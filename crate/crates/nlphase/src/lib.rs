//! Nonlocal phase-field energies with singular interaction kernels.
//!
//! The crate evaluates energies of the form
//! `F_ε(u) = (1/4ε) ∬ J_ε(y−x)|u(y)−u(x)|² dy dx + (1/ε) ∫ W(u)` on grid
//! fields, computes the anisotropic surface tension ψ through a 1D profile
//! problem, and provides numerical studies of the sharp-interface limit.

pub mod quad;
pub mod kernels;
pub mod potentials;
pub mod fields;
pub mod energy;
pub mod cell;
pub mod gamma;
pub mod integralgeom;
pub mod config;
