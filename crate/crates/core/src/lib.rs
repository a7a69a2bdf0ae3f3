//! Multi-swarm cellular particle swarm optimization with per-cell clustering
//! and coordinate local search, for static and dynamic landscapes.
//!
//! The crate is organised bottom-up:
//!
//! - [`space`] and [`random`]: bounded points and the seeded random source.
//! - [`benchmarks`]: static test functions, the moving parabola and the
//!   moving peaks benchmark behind the [`benchmarks::Problem`] trait.
//! - [`grid`]: cellular partitioning of the search space with a sparse
//!   occupancy index.
//! - [`localsearch`]: per-dimension pattern search.
//! - [`swarm`]: the cellular multi-swarm engine.
//! - [`baseline`]: plain global-best PSO for comparisons.
//! - [`metrics`]: offline error tracking and aggregation.
//! - [`harness`]: configuration, multi-run experiments and report files.

pub mod baseline;
pub mod benchmarks;
pub mod error;
pub mod grid;
pub mod harness;
pub mod localsearch;
pub mod metrics;
pub mod random;
pub mod space;
pub mod swarm;

pub use error::{Error, Result};
