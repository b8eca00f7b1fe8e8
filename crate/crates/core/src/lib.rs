//! Numerical toolkit for the stochastic heat equation on ℝᵈ driven by noise
//! that is white in time and spatially colored.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod coefficient;
pub mod dalang;
pub mod error;
pub mod kernel;
pub mod lattice;
pub mod montecarlo;
pub mod noise;
pub mod quadrature;
pub mod rng;
pub mod series;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
