//! Numerical core for nonlocal Schrödinger operators with a fractional Hardy
//! potential `V(x) = κ|x|^{-α}`.
//!
//! The crate is `no_std` (with `alloc`) so it can be embedded anywhere a
//! float library is available; the `std` feature (on by default) only swaps
//! in the platform math routines and runtime CPU dispatch for matrix
//! products. All file formats, configuration and the command line live in
//! the companion `hardy-kernels` crate.
//!
//! Layout:
//!
//! * [`special`], [`quad`], [`linalg`]: Gamma/Bessel functions, quadrature
//!   rules (Gauss–Legendre, double exponential, Ooura–Mori Fourier rules) and
//!   small dense linear algebra.
//! * [`levy`]: the catalog of Lévy symbols and densities.
//! * [`hardy`]: the κ ↔ δ correspondence and the comparison factor `H(t,x)`.
//! * [`grid`], [`kernel`]: radial grids, free heat kernels, resolvent kernels
//!   and their structural identities.
//! * [`duhamel`]: the Duhamel perturbation by the Hardy potential.
//! * [`spectral`]: quadratic forms and the Birman–Schwinger ground-state solver.
//! * [`audit`]: empirical checks of two-sided kernel and eigenfunction bounds.
//!
//! Every radial problem is reduced to a one-dimensional problem on the
//! half-line: radial functions in `d = 1` are even functions of one variable,
//! and radial functions `f` in `d = 3` become odd functions through
//! `g(r) = r f(r)`. Both share the one-dimensional kernel with the same symbol.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::needless_range_loop, clippy::too_many_arguments, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod audit;
pub mod cells;
pub mod duhamel;
mod error;
pub mod grid;
pub mod hardy;
pub mod identities;
pub mod kernel;
pub mod levy;
pub mod linalg;
pub mod quad;
pub mod spectral;
pub mod table;
pub mod special;

pub use error::{Error, Result};
pub use grid::{Dim, Mesh, Parity, RadialGrid};
pub use hardy::HardyCoupling;
pub use levy::{LevyKind, LevyModel};
