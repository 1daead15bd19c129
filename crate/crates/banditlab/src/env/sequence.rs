use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::instance::BanditInstance;
use crate::linalg::dot;
use crate::rng::{streams, RngStream};

/// Oblivious loss-sequence generators built around the instance's θ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum AdversarialGenerator {
    /// θ for t ≤ at, −θ afterwards; `at` defaults to T/2.
    Switch {
        #[serde(default)]
        at: Option<usize>,
    },
    /// amplitude · sin(2πt/period) · θ / max_x |⟨x,θ⟩|.
    Sinusoid { period: f64, amplitude: f64 },
    /// ±θ with an independent fair sign per block of rounds, drawn from the seed.
    RandomSign { block: usize },
    /// θ before `switch_round`, θ′ from it on.
    LowerBound { theta_prime: Vec<f64>, switch_round: usize },
}

impl AdversarialGenerator {
    pub fn label(&self) -> String {
        match self {
            AdversarialGenerator::Switch { at } => match at {
                Some(a) => format!("switch-{a}"),
                None => "switch".into(),
            },
            AdversarialGenerator::Sinusoid { period, amplitude } => format!("sinusoid-{period}-{amplitude}"),
            AdversarialGenerator::RandomSign { block } => format!("random_sign-{block}"),
            AdversarialGenerator::LowerBound { switch_round, .. } => format!("lowerbound-{switch_round}"),
        }
    }

    pub fn generate(&self, instance: &BanditInstance, seed: u64, horizon: usize) -> Result<AdversarialSequence> {
        let theta = &instance.theta;
        let neg: Vec<f64> = theta.iter().map(|v| -v).collect();
        let losses: Vec<Vec<f64>> = match self {
            AdversarialGenerator::Switch { at } => {
                let at = at.unwrap_or(horizon / 2);
                (1..=horizon).map(|t| if t <= at { theta.clone() } else { neg.clone() }).collect()
            }
            AdversarialGenerator::Sinusoid { period, amplitude } => {
                if !(*period > 0.0) || !(0.0..=1.0).contains(amplitude) {
                    return Err(BanditError::DomainError(format!(
                        "sinusoid needs period > 0 and amplitude in [0, 1], got {period}, {amplitude}"
                    )));
                }
                let top = instance.means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
                (1..=horizon)
                    .map(|t| {
                        let s = amplitude * (2.0 * std::f64::consts::PI * t as f64 / period).sin() / top;
                        theta.iter().map(|v| v * s).collect()
                    })
                    .collect()
            }
            AdversarialGenerator::RandomSign { block } => {
                let block = (*block).max(1);
                let mut rng = RngStream::new(seed, streams::GENERATOR);
                let mut sign = 1.0;
                (0..horizon)
                    .map(|i| {
                        if i % block == 0 {
                            sign = if rng.uniform() < 0.5 { 1.0 } else { -1.0 };
                        }
                        theta.iter().map(|v| v * sign).collect()
                    })
                    .collect()
            }
            AdversarialGenerator::LowerBound { theta_prime, switch_round } => {
                if theta_prime.len() != theta.len() {
                    return Err(BanditError::LengthMismatch { expected: theta.len(), got: theta_prime.len() });
                }
                (1..=horizon).map(|t| if t < *switch_round { theta.clone() } else { theta_prime.clone() }).collect()
            }
        };
        for (t, l) in losses.iter().enumerate() {
            for (i, x) in instance.action_set.actions().iter().enumerate() {
                let m = dot(x, l);
                if m.abs() > 1.0 + 1e-12 {
                    return Err(BanditError::AdmissibilityViolation { t: t + 1, index: i, value: m });
                }
            }
        }
        Ok(AdversarialSequence { losses })
    }
}

/// Realized loss vectors ℓ_1, …, ℓ_T.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialSequence {
    losses: Vec<Vec<f64>>,
}

impl AdversarialSequence {
    pub fn new(losses: Vec<Vec<f64>>) -> Self {
        Self { losses }
    }

    /// ℓ_t for 1-based t.
    pub fn loss(&self, t: usize) -> &[f64] {
        &self.losses[t - 1]
    }

    pub fn losses(&self) -> &[Vec<f64>] {
        &self.losses
    }

    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_instance, validate_action_set};

    fn inst() -> BanditInstance {
        let x = validate_action_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        make_instance(x, vec![-0.5, 0.1]).unwrap()
    }

    #[test]
    fn switch_midpoint() {
        let s = AdversarialGenerator::Switch { at: None }.generate(&inst(), 0, 10).unwrap();
        assert_eq!(s.loss(5), &[-0.5, 0.1]);
        assert_eq!(s.loss(6), &[0.5, -0.1]);
    }

    #[test]
    fn sinusoid_is_admissible() {
        let s = AdversarialGenerator::Sinusoid { period: 7.0, amplitude: 1.0 }.generate(&inst(), 0, 50).unwrap();
        assert!(s.losses().iter().all(|l| l.iter().all(|v| v.abs() <= 1.0 + 1e-12)));
        assert!(AdversarialGenerator::Sinusoid { period: 7.0, amplitude: 1.5 }.generate(&inst(), 0, 5).is_err());
    }

    #[test]
    fn oblivious_double_generation() {
        let g = AdversarialGenerator::RandomSign { block: 3 };
        assert_eq!(g.generate(&inst(), 9, 100).unwrap(), g.generate(&inst(), 9, 100).unwrap());
        assert_ne!(g.generate(&inst(), 9, 100).unwrap(), g.generate(&inst(), 10, 100).unwrap());
    }
}
