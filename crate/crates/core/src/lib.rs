//! Sound upper bounds on the finite-horizon failure probability of a ReLU
//! control policy under probabilistic actuator faults.
//!
//! The pipeline tiles the initial region into boxes, decomposes each box
//! into regions where the policy's action is fixed, steps those regions
//! through an interval abstraction of the environment under every fault
//! outcome, and solves the resulting layered MDP by backward induction.
//! Unsafe initial boxes are split and rebuilt until they are safe or
//! narrower than the configured precision.

pub mod abstraction;
pub mod cli;
pub mod config;
pub mod environment;
pub mod error;
pub mod extraction;
pub mod faults;
pub mod geometry;
pub mod mdp;
pub mod model_check;
pub mod network;
pub mod par;
pub mod refinement;
pub mod results;
pub mod spatial_index;

#[cfg(test)]
pub(crate) mod test_util;

pub use abstraction::{build_mdp, initial_grid, BuildOptions, ChoiceGranularity};
pub use environment::{Cartpole, Environment, EnvironmentSpec, Pendulum};
pub use error::{Error, Result};
pub use faults::{FaultConfig, FaultModel, Outcome};
pub use geometry::{HyperBox, Interval};
pub use mdp::AbstractMdp;
pub use model_check::{concrete_reach, max_reach};
pub use network::{BoundMethod, Network};
pub use refinement::{refine, RegionResult, Verdict};
