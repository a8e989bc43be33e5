//! Two-phase relay-node deployment for wireless sensor networks whose
//! devices sit on the vertices of a 3-D grid.
//!
//! Phase 1 ([`backbone`]) greedily connects the cluster heads and the base
//! station into a connected backbone, inserting first-phase relay nodes on
//! grid vertices where direct links are out of radio range. Phase 2
//! ([`abc`]) runs an artificial bee colony over binary candidate-activation
//! vectors to place second-phase relays that minimise the spectral Wiener
//! index of the network while keeping its algebraic connectivity inside a
//! configured window.
//!
//! Supporting modules: [`topology`] (grid geometry and instance files),
//! [`spectral`] (Laplacian, eigenvalues, distance metrics), [`energy`]
//! (per-round radio energy and lifetime), and [`harness`] (experiment
//! runner, baseline, CSV outputs) behind the `ildcc` CLI.
//!
//! The numeric core is generic over the scalar type via [`Real`]; the
//! crate root exports `f64` aliases for the common entry points.

// Validators use `!(x > 0)` so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abc;
pub mod backbone;
pub mod energy;
pub mod error;
pub mod harness;
pub mod spectral;
pub mod topology;

pub use error::{Error, Result};

/// Floating-point scalar the numeric core is generic over.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + rand::distributions::uniform::SampleUniform
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// `f64` aliases for the generic core types.
pub type Spectrum64 = spectral::Spectrum<f64>;
pub type DistanceMetrics64 = spectral::DistanceMetrics<f64>;
pub type GridInstance64 = topology::GridInstance<f64>;
pub type EnergyParams64 = energy::EnergyParams<f64>;
pub type LifetimeReport64 = energy::LifetimeReport<f64>;
pub type ColonyConfig64 = abc::ColonyConfig<f64>;
pub type AbcResult64 = abc::AbcResult<f64>;
pub type PlacementProblem64 = abc::PlacementProblem<f64>;
