//! Heat equation with dynamic (Wentzell) boundary conditions on an interval or a disk.
//!
//! The crate assembles the coupled operator `A = [[Δ, 0], [−∂_ν, Δ_Γ]]` on the product space
//! `L²(Ω) × L²(Γ)`, propagates it in time, checks the weighted frequency-function machinery
//! (energy identity, Carleman commutator, differential and interpolation inequalities,
//! observability fit) and synthesizes single-impulse approximate null controls.
//!
//! Only `alloc` is required; the `std` feature (on by default) adds `std::error::Error` plumbing.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod control;
pub mod discretize;
mod error;
pub mod evolve;
pub mod geometry;
pub mod linalg;
pub mod logconvexity;
pub mod quadrature;

pub use error::{Error, Result};
