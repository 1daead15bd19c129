//! Loss generation: stochastic, corrupted and oblivious adversarial
//! environments, plus the lower-bound construction and its KL diagnostics.
//!
//! Every environment is fully realized before the learner acts: the corruption
//! vectors and adversarial loss vectors are pure functions of the generator,
//! its parameters, the seed and T. Only the observation noise is drawn during
//! the run, lazily and for the pulled arm only.

mod corruption;
mod lowerbound;
mod sequence;

pub use corruption::{corruption_totals, CorruptionGenerator, CorruptionSchedule};
pub use lowerbound::{
    estimate_interval_designs, interval_schedule, interval_starts, kl_bernoulli, make_lowerbound_pair, select_switch,
    trajectory_kl, LowerBoundPair,
};
pub use sequence::{AdversarialGenerator, AdversarialSequence};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instance::{ActionSet, BanditInstance};
use crate::linalg::dot;
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// y = ±1 with P(+1) = (1 + mean)/2.
    #[default]
    Bernoulli,
    /// y = mean + u with u uniform on [−(1−|mean|), 1−|mean|].
    UniformBounded,
}

impl NoiseModel {
    pub fn sample(&self, mean: f64, rng: &mut RngStream) -> f64 {
        let u = rng.uniform();
        let y = match self {
            NoiseModel::Bernoulli => {
                if u < 0.5 + 0.5 * mean {
                    1.0
                } else {
                    -1.0
                }
            }
            NoiseModel::UniformBounded => {
                let w = 1.0 - mean.abs();
                (mean + w * (2.0 * u - 1.0)).clamp(-1.0, 1.0)
            }
        };
        assert!((-1.0..=1.0).contains(&y), "observation {y} outside [-1, 1]");
        y
    }
}

pub fn observe_stochastic(instance: &BanditInstance, arm: usize, noise: NoiseModel, rng: &mut RngStream) -> f64 {
    noise.sample(instance.means[arm], rng)
}

pub fn observe_corrupted(
    instance: &BanditInstance,
    schedule: &CorruptionSchedule,
    t: usize,
    arm: usize,
    noise: NoiseModel,
    rng: &mut RngStream,
) -> f64 {
    let mean = instance.means[arm] + schedule.shift(t, instance.action_set.arm(arm));
    noise.sample(mean, rng)
}

pub fn observe_adversarial(
    sequence: &AdversarialSequence,
    action_set: &ActionSet,
    t: usize,
    arm: usize,
    noise: NoiseModel,
    rng: &mut RngStream,
) -> f64 {
    noise.sample(dot(action_set.arm(arm), sequence.loss(t)), rng)
}

/// A realized environment as seen by the simulator.
#[derive(Clone, Debug)]
pub enum Environment {
    Stochastic { instance: BanditInstance, noise: NoiseModel },
    Corrupted { instance: BanditInstance, schedule: CorruptionSchedule, noise: NoiseModel },
    Adversarial { instance: BanditInstance, sequence: AdversarialSequence, noise: NoiseModel },
}

impl Environment {
    pub fn instance(&self) -> &BanditInstance {
        match self {
            Environment::Stochastic { instance, .. }
            | Environment::Corrupted { instance, .. }
            | Environment::Adversarial { instance, .. } => instance,
        }
    }

    pub fn action_set(&self) -> &ActionSet {
        &self.instance().action_set
    }

    /// Gaps for pseudo-regret, when a fixed θ governs the losses.
    pub fn gaps(&self) -> Option<&[f64]> {
        match self {
            Environment::Adversarial { .. } => None,
            _ => Some(&self.instance().gaps),
        }
    }

    /// ⟨x, ℓ_t⟩ for every arm at 1-based round t.
    pub fn means(&self, t: usize) -> Vec<f64> {
        match self {
            Environment::Stochastic { instance, .. } => instance.means.clone(),
            Environment::Corrupted { instance, schedule, .. } => instance
                .means
                .iter()
                .zip(instance.action_set.actions())
                .map(|(m, x)| m + schedule.shift(t, x))
                .collect(),
            Environment::Adversarial { instance, sequence, .. } => {
                instance.action_set.actions().iter().map(|x| dot(x, sequence.loss(t))).collect()
            }
        }
    }

    pub fn observe(&self, t: usize, arm: usize, rng: &mut RngStream) -> f64 {
        match self {
            Environment::Stochastic { instance, noise } => observe_stochastic(instance, arm, *noise, rng),
            Environment::Corrupted { instance, schedule, noise } => {
                observe_corrupted(instance, schedule, t, arm, *noise, rng)
            }
            Environment::Adversarial { instance, sequence, noise } => {
                observe_adversarial(sequence, &instance.action_set, t, arm, *noise, rng)
            }
        }
    }
}

/// Declarative environment description, realized per (seed, T).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvSpec {
    Stochastic {
        #[serde(default)]
        noise: NoiseModel,
    },
    Corrupted {
        #[serde(default)]
        noise: NoiseModel,
        #[serde(flatten)]
        generator: CorruptionGenerator,
    },
    Adversarial {
        #[serde(default)]
        noise: NoiseModel,
        #[serde(flatten)]
        generator: AdversarialGenerator,
    },
}

impl Default for EnvSpec {
    fn default() -> Self {
        EnvSpec::Stochastic { noise: NoiseModel::Bernoulli }
    }
}

impl EnvSpec {
    pub fn realize(&self, instance: &BanditInstance, seed: u64, horizon: usize) -> Result<Environment> {
        Ok(match self {
            EnvSpec::Stochastic { noise } => Environment::Stochastic { instance: instance.clone(), noise: *noise },
            EnvSpec::Corrupted { noise, generator } => Environment::Corrupted {
                instance: instance.clone(),
                schedule: generator.realize(instance, horizon)?,
                noise: *noise,
            },
            EnvSpec::Adversarial { noise, generator } => Environment::Adversarial {
                instance: instance.clone(),
                sequence: generator.generate(instance, seed, horizon)?,
                noise: *noise,
            },
        })
    }

    /// Short label used in file names and summary rows.
    pub fn label(&self) -> String {
        match self {
            EnvSpec::Stochastic { .. } => "stochastic".into(),
            EnvSpec::Corrupted { generator, .. } => format!("corrupted-{}", generator.label()),
            EnvSpec::Adversarial { generator, .. } => format!("adversarial-{}", generator.label()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_bernoulli() {
        let mut rng = RngStream::new(1, 2);
        for _ in 0..100 {
            assert_eq!(NoiseModel::Bernoulli.sample(1.0, &mut rng), 1.0);
            assert_eq!(NoiseModel::Bernoulli.sample(-1.0, &mut rng), -1.0);
        }
    }

    #[test]
    fn noise_means() {
        let mut rng = RngStream::new(5, 2);
        let n = 1_000_000;
        let fair: f64 = (0..n).map(|_| NoiseModel::Bernoulli.sample(0.0, &mut rng)).sum::<f64>() / n as f64;
        assert!(fair.abs() < 0.004);
        for model in [NoiseModel::Bernoulli, NoiseModel::UniformBounded] {
            let m: f64 = (0..n).map(|_| model.sample(0.3, &mut rng)).sum::<f64>() / n as f64;
            // standard error ≤ 1/√n = 0.001
            assert!((m - 0.3).abs() < 0.004, "{model:?} {m}");
        }
    }
}
