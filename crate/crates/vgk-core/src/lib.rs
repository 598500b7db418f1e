//! Numerics for a voltage-conductance kinetic population model.
//!
//! The density `p(t, v, g)` lives on a periodic voltage interval `(0, V_F)`
//! and the whole conductance line. Conductance relaxes towards a drift
//! `g_in = g0 + g1 N` with diffusion `a = a0 + a1 N`, where `N(t)` is the
//! flux through the threshold. Four solvers share one parameter set:
//!
//! * [`ode`]: the closed moment system for Gaussian solutions,
//! * [`modes`]: semi-explicit Fourier-in-voltage mode formulas,
//! * [`grid`]: a finite-volume splitting scheme for the full equation,
//! * [`fcl`]: the fast-conductance limit transport model.
//!
//! The crate is `no_std` with `alloc`.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` is the NaN-rejecting form used throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod error;
pub mod fcl;
pub mod firing;
pub mod grid;
pub mod modes;
pub mod ode;
pub mod params;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
pub use firing::GaussianState;
pub use params::{InitialData, ModelParams};

pub use num_complex::Complex64;
