//! Interaction-based remote tomography.
//!
//! A system mode in an unknown pure state interacts with two apparatus modes
//! through the Arthurs-Kelly coupling `K (q p1 + p p2)`. Expectations of
//! apparatus observables after the interaction reproduce the rotated
//! quadrature densities of the system's initial state, which are then inverted
//! to its Wigner function and density matrix.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod interaction;
pub mod interp;
pub mod io;
pub mod quadrature;
pub mod states;
pub mod tomography;
pub mod transit;
pub mod verify;

pub use error::{Result, TomoError};
pub use grid::{Grid1D, QuadratureAngle};
