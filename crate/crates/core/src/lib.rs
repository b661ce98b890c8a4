//! Mobile reaction networks on the unit square.
//!
//! Nodes carry one of `L` local states, interact inside lattice regions and
//! random-walk between neighboring regions until they hit the absorbing
//! boundary. The crate simulates the resulting continuous-time Markov chain
//! exactly ([`ctmc`]) and integrates its deterministic limits: the spatial
//! ODE system on the lattice ([`ode`]) and the reaction-diffusion PDE via
//! explicit finite differences ([`pde`]).

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ctmc;
pub mod error;
pub mod exec;
pub mod expr;
pub mod field;
pub mod io;
pub mod lattice;
pub mod network;
pub mod ode;
pub mod pde;
pub mod replicas;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod sweep;
pub mod walk;

pub use ctmc::{build_initial_state, run_replicas, simulate, Ctmc, PopulationState, Trajectory};
pub use error::{Error, Result};
pub use exec::Exec;
pub use lattice::{LatticeGrid, Region};
pub use network::{parse_spec, serialize_spec, NetworkSpec};
pub use ode::{integrate_euler, DensityField};
pub use pde::{solve_pde, FdConfig};
pub use replicas::{ReplicaPolicy, ReplicaReport};
pub use scenario::Scenario;
pub use stats::ReplicaEstimate;
