//! Distributed generalized Nash equilibrium seeking by operator splitting.
//!
//! The core is `no_std` with `alloc`. Instances are built from per-agent
//! oracles ([`model`]), dual consensus runs over a [`graph::CommGraph`], and
//! three fixed-point methods live in [`solvers`]. [`distsim`] replays the
//! same iterations as message passing between agents, and [`cournot`]
//! generates the networked Cournot benchmark.

#![no_std]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod cournot;
pub mod distsim;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod splitting;

pub use error::{Error, Result};
pub use graph::CommGraph;
pub use model::{GameInstance, KktResidual};
pub use solvers::{Problem, SolveOptions, SolveStatus, SolverKind, StopRule};
pub use splitting::{ConstantsBundle, Iterate, StepConfig};
