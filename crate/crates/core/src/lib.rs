//! Pseudo-spectral zero-Mach number solver and Littlewood-Paley toolkit on
//! the periodic torus `[0, 2π)^d`, `d ∈ {2, 3}`.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the usual `f64` choice.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod field;
pub mod grid;
pub mod heat;
pub mod lp;
pub mod ops;
pub mod pressure;
pub mod random;
pub mod scalar;
pub mod snapshot;
pub mod solver;
pub mod vorticity;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid64 = grid::Grid<f64>;
pub type ScalarField64 = field::ScalarField<f64>;
pub type VectorField64 = field::VectorField<f64>;
pub type Spectrum64 = field::Spectrum<f64>;
pub type FilterBank64 = lp::FilterBank<f64>;
pub type State64 = solver::State<f64>;
pub type Solver64 = solver::Solver<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type ScalarField32 = field::ScalarField<f32>;
pub type VectorField32 = field::VectorField<f32>;
pub type Spectrum32 = field::Spectrum<f32>;
pub type FilterBank32 = lp::FilterBank<f32>;
pub type State32 = solver::State<f32>;
pub type Solver32 = solver::Solver<f32>;
