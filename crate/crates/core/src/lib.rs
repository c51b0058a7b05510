//! One-way wave-packet transport in one-dimensional lattices with engineered
//! band dispersion and long-range hopping, and the self-imaging optical ring
//! resonator whose round-trip map emulates them.
//!
//! * [`band`]: dispersion curves, hopping tables, symmetry diagnostics.
//! * [`lattice`]: dense and split-step propagation plus transport observables.
//! * [`cavity`]: free and driven-damped round-trip maps of the 4-f resonator.
//! * [`ensemble`]: seeded, parallel disorder ensembles.
//! * [`scenario`]: JSON configuration, orchestration and file export.

pub mod band;
pub mod cavity;
pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod scenario;

pub use band::{DispersionSpec, HoppingSet};
pub use cavity::{CavityConfig, CavityField, InjectionSpec};
pub use error::{Error, Result};
pub use lattice::{LatticeState, PotentialProfile, Trajectory};
pub use scenario::{parse_config, run_scenario, ScenarioConfig, ScenarioKind};
