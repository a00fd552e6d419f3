//! Nuclear fuel reloading patterns as QUBO/Ising problems.
//!
//! The pipeline is: build a [`geometry::CoreLayout`], [`encoder::encode`] the
//! placement rules for given fuel counts into a [`model::QuboModel`], run one
//! of the registered [`solvers`], then [`feasibility::decode`] and
//! [`feasibility::check`] the result. [`benchmark`] measures time-to-solution
//! and [`studies`] runs count sweeps and reload-cycle searches.

pub mod benchmark;
pub mod encoder;
pub mod error;
pub mod feasibility;
pub mod geometry;
pub mod model;
pub mod presets;
pub mod rng;
pub mod solvers;
pub mod studies;

pub use encoder::{encode, EncodeOptions, FuelCounts, PenaltyWeights};
pub use error::{Error, Result};
pub use feasibility::{check, decode, FeasibilityReport, LoadingPattern};
pub use geometry::{CoreLayout, SymmetryGroup};
pub use model::{IsingModel, QuboModel};
pub use solvers::{SolveOutcome, SolveParams, Solver, SolverRegistry};
