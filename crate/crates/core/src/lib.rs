//! Finite-volume solver for the barotropic compressible Navier–Stokes
//! equations on periodic Cartesian grids.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cases;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod flux;
pub mod grid;
pub mod model;
pub mod operators;
pub mod solver;
pub mod sparse;
pub mod study;

pub use error::{Error, Result};
pub use grid::Mesh;
pub use model::{Forcing, GasModel};
pub use solver::{Solver, SolverConfig, State};
