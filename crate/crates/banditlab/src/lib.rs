//! Simulation workbench for linear bandits that are robust to corruption and
//! to fully adversarial losses.
//!
//! The crate implements the doubling-block algorithm REOLB, the epoch-based
//! best-of-three-worlds algorithm BOTW with GeometricHedge.P as its
//! adversarial black box, the optimal-design programs they rely on, and a
//! deterministic experiment harness.

pub mod algo;
pub mod design;
pub mod env;
pub mod error;
pub mod harness;
pub mod instance;
pub mod linalg;
pub mod rng;
pub mod robust;
pub mod trace;

pub use error::{BanditError, Result};
pub use instance::{make_instance, validate_action_set, ActionSet, ArmDistribution, BanditInstance};
