//! Coherent states, heat kernels and the Segal–Bargmann transform for a quantum particle
//! on the sphere `S^d`, `d = 1, 2, 3`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bargmann;
pub mod basis;
pub mod coherent;
pub mod error;
pub mod flat;
pub mod harmonics;
pub mod kernels;
pub mod model;
pub mod quadrature;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
