//! Simulator and closed-form oracles for synchronous dispersion processes.
//!
//! `M` particles start on the origin vertex of a graph. At every step each
//! particle that shares its vertex with another particle jumps to a uniform
//! random neighbour; lone particles stay put. The process ends when every
//! vertex holds at most one particle.
//!
//! * [`topology`] describes the graph families and answers local queries.
//! * [`engine`] runs the process (standard and lazy variants).
//! * [`oracles`] evaluates the closed-form expectations and bounds the
//!   simulations are checked against. Float-valued oracles are generic over
//!   [`Scalar`] (`f32`/`f64`); lattice-walk probabilities are exact rationals.
//! * [`harness`] runs replicated experiments, scans and the validation suite.

pub mod engine;
pub mod harness;
pub mod oracles;
pub mod rng;
pub mod scalar;
pub mod topology;

pub use engine::{ParticleSystem, RunResult, RunStatus, StepReport, Variant, WalkMode};
pub use scalar::Scalar;
pub use topology::{Family, Topology, TopologySpec, VertexAddress};

/// Exact rational used by the lattice-walk oracles.
pub type Rational = num_rational::BigRational;

pub type KnExpectationsF64 = oracles::KnExpectations<f64>;
pub type KnExpectationsF32 = oracles::KnExpectations<f32>;
pub type LazyOccupancyProfileF64 = oracles::LazyOccupancyProfile<f64>;
pub type LazyRangeChangesF64 = oracles::LazyRangeChanges<f64>;
pub type LazyRangeChangesF32 = oracles::LazyRangeChanges<f32>;
pub type TreeConstantsF64 = oracles::TreeConstants<f64>;
pub type TreeConstantsF32 = oracles::TreeConstants<f32>;
pub type DepthBoundsF64 = oracles::DepthBounds<f64>;
pub type PathBoundsF64 = oracles::PathBounds<f64>;
pub type LineTailF64 = oracles::LineTail<f64>;
