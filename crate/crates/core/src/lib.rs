//! Singularity-robust inverse kinematics for serial manipulators.
//!
//! The crate is layered bottom-up: [`kinematics`] (models, FK, Jacobians,
//! pose error), [`resolvers`] (twist to joint-velocity maps), [`controller`]
//! (the discrete proportional loop and its stability checks) and
//! [`simulator`] (scenarios and trajectory logs).

pub mod error;
pub mod controller;
pub mod kinematics;
pub mod resolvers;
pub mod simulator;

pub use error::{Error, Result};
