//! Unit-commitment MILP toolkit.
//!
//! Builds five unit-commitment formulations over clusters of identical
//! generating units (individual, classic clustered, and the slot-ordered
//! clustered formulation with optional startup/shutdown and per-unit ramp
//! blocks), serializes them to MPS, drives an external MILP solver, and
//! cross-validates solutions against an enumeration oracle.

pub mod formulation;
pub mod instance;
pub mod milp;

#[cfg(not(target_arch = "wasm32"))]
pub mod harness;
#[cfg(not(target_arch = "wasm32"))]
pub mod oracle;
#[cfg(not(target_arch = "wasm32"))]
pub mod solver;

pub use formulation::{build_formulation, BuildOptions, Schedule, Variant};
pub use instance::{ClusterSpec, GeneratorConfig, SystemInstance};
pub use milp::{MilpModel, ModelStats};
