//! Random Fourier feature classification primitives.
//!
//! This crate implements the computational core for studying how many random
//! Fourier features a Lipschitz-loss classifier needs before it matches the
//! exact kernel machine:
//!
//! * [`kernel`] — shift-invariant kernels, their spectral densities, the
//!   bounded cosine feature ψ(v,x) and exact Gram matrices.
//! * [`features`] — plain and leverage-weighted random feature maps and the
//!   n×s feature matrix Φ with rows φ(xᵢ)ᵀ.
//! * [`leverage`] — empirical ridge leverage scores τ̂_λ(v), effective degrees
//!   of freedom d̂(λ), and the feature-budget formulas.
//! * [`erm`] — regularized empirical risk minimization with hinge or logistic
//!   loss, in the feature parameterization and the exact kernel
//!   parameterization, with certified suboptimality.
//! * [`diagnostics`] — spectral decay reports, the local Rademacher fixed
//!   point, operator approximation error, and ridge approximation of a target
//!   function.
//! * [`synthdata`] — synthetic classification problems with a chosen source
//!   condition, Massart label noise, and controlled Gram-spectrum decay.
//!
//! The crate is `no_std` (with `alloc`); all randomness is externalized
//! through `u64` seeds, and every operation is deterministic given its
//! inputs. IO, file formats and the experiment runner live in the companion
//! `rff-bench` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod erm;
mod error;
pub mod features;
pub mod kernel;
pub mod leverage;
pub mod linalg;
pub(crate) mod rng;
pub mod synthdata;

pub use error::{CoreError, Result};
