//! Simulator and verification harness for the diffusive Leslie-Gower
//! prey-predator model whose predator habitat is bounded by two Stefan-type
//! free boundaries.
//!
//! - [`model`]: parameters, reaction kernels, initial data, derived constants
//! - [`transform`]: front-fixing coordinates and the Stefan front-speed law
//! - [`solver`]: IMEX time integration and the simulation time series
//! - [`analysis`]: spreading/vanishing classification and theory cross-checks
//! - [`sweep`]: threshold bisection in `beta` and parameter grids
//! - [`io`]: configuration, output files and the command-line interface

// NaN-rejecting guards are written as `!(x < y)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod io;
pub mod model;
pub mod solver;
pub mod sweep;
pub mod transform;
pub mod tridiag;

pub use model::{
    derived_constants, reaction_rates, validate_params, DerivedConstants, InitialData,
    ModelParams, PredatorProfile, PreyProfile, ReactionKernel, Table, ValidatedModel,
};
pub use solver::{simulate, Discretization, SeriesRecord, SimState, SolverError};
