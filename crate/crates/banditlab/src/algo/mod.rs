//! Learners: REOLB (doubling blocks driven by OP), the GeometricHedge.P
//! variant, and BOTW which wraps the latter as its adversarial black box.

mod botw;
mod ghp;
mod reolb;

pub use botw::{
    phase1_termination, phase2_distribution, phase2_estimates, phase2_gap_stat, phase2_termination, BlackBoxAudit,
    Botw, BotwEvent, Phase, Phase1Outcome,
};
pub use ghp::{ghp_eta, ghp_params, GhpLearner, GhpParams, GhpState};
pub use reolb::{unbiased_estimate, Reolb};

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::Result;
use crate::rng::RngStream;

/// What a learner did in one round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub arm: usize,
    pub y: f64,
    pub phase: u8,
    pub block_or_epoch: usize,
}

/// A sequential learner. `rng` drives the learner's own randomization and
/// `noise` the environment's observation noise, so the two never interleave.
pub trait Learner: Send {
    fn name(&self) -> &'static str;

    /// Plays 1-based round `t`.
    fn step(&mut self, t: usize, env: &Environment, rng: &mut RngStream, noise: &mut RngStream) -> Result<Step>;
}

/// Named constant settings.
///
/// `paper` keeps the 2^15 factors; `demo` scales them by 2^-15, which puts
/// β_t at ln(t|X|/δ) and C_1 at d·ln(T|X|/δ).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Paper,
    #[default]
    Demo,
}

impl Preset {
    pub fn constant_scale(self) -> f64 {
        match self {
            Preset::Paper => 1.0,
            Preset::Demo => 1.0 / 32768.0,
        }
    }
}
