//! Physarum polycephalum solver for shortest path trees on directed graphs.
//!
//! The slime mold model treats a weighted directed graph as a network of
//! tubes. Each edge carries a conductivity `D` that adapts to the flux `Q`
//! flowing through it: pressures come from a Kirchhoff (network Poisson)
//! system, flux follows pressure drops, and conductivity grows on edges
//! that carry flow while starving everywhere else. At equilibrium the flow
//! concentrates on shortest paths, so the surviving edges form a shortest
//! path tree (a DAG when ties exist).
//!
//! The crate provides:
//! - [`graph`]: the directed weighted graph model, a seeded G(n,p)
//!   generator, and batched edge-weight updates,
//! - [`linsolve`]: the grounded Laplacian solver behind the pressure step,
//! - [`physarum`]: the adaptive solver in two-terminal and tree modes,
//!   including warm-start continuation after edge-weight changes,
//! - [`trace`]: per-iteration flux recording across update events,
//! - [`baselines`]: label-setting (Dijkstra) and Bellman-Ford references.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision variants used by the CLI and
//! benchmark harness.

pub mod baselines;
pub mod error;
pub mod graph;
pub mod linsolve;
pub mod physarum;
pub mod report;
pub mod scalar;
pub mod trace;

pub use error::{GraphError, PhysarumError, SolveError};
pub use scalar::Scalar;

/// Double-precision graph, the default everywhere outside the core library.
pub type Graph64 = graph::DirectedGraph<f64>;
/// Double-precision update batch.
pub type UpdateSet64 = graph::UpdateSet<f64>;
/// Double-precision solver configuration.
pub type SolverConfig64 = physarum::SolverConfig<f64>;
/// Double-precision solver state.
pub type State64 = physarum::PhysarumState<f64>;
/// Double-precision solver result.
pub type SptResult64 = physarum::SptResult<f64>;
/// Double-precision baseline result.
pub type BaselineResult64 = baselines::BaselineResult<f64>;
