use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::instance::BanditInstance;
use crate::linalg::dot;

/// Corruption generators. Budgets are totals of max_x |⟨x, c_t⟩| over rounds.
///
/// `front_loaded` and `periodic` reverse the losses (c_t = −2θ, scaled down on
/// the round that exhausts the budget); `target_optimal` raises the optimal
/// arm's mean by Δ_min along x*.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum CorruptionGenerator {
    FrontLoaded { budget: f64 },
    Periodic { budget: f64, period: usize },
    TargetOptimal { budget: f64 },
}

impl CorruptionGenerator {
    pub fn label(&self) -> String {
        match self {
            CorruptionGenerator::FrontLoaded { budget } => format!("front_loaded-{budget}"),
            CorruptionGenerator::Periodic { budget, period } => format!("periodic-{budget}-{period}"),
            CorruptionGenerator::TargetOptimal { budget } => format!("target_optimal-{budget}"),
        }
    }

    pub fn budget(&self) -> f64 {
        match self {
            CorruptionGenerator::FrontLoaded { budget }
            | CorruptionGenerator::Periodic { budget, .. }
            | CorruptionGenerator::TargetOptimal { budget } => *budget,
        }
    }

    pub fn realize(&self, instance: &BanditInstance, horizon: usize) -> Result<CorruptionSchedule> {
        let x = instance.action_set.actions();
        let budget = self.budget();
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(BanditError::DomainError(format!("corruption budget {budget}")));
        }
        let direction: Vec<f64> = match self {
            CorruptionGenerator::TargetOptimal { .. } => {
                let star = instance.action_set.arm(instance.optimal_index);
                let s = instance.delta_min / dot(star, star);
                star.iter().map(|v| v * s).collect()
            }
            _ => instance.theta.iter().map(|v| -2.0 * v).collect(),
        };
        let full = x.iter().map(|a| dot(a, &direction).abs()).fold(0.0, f64::max);
        let active = |t: usize| match self {
            CorruptionGenerator::Periodic { period, .. } => *period > 0 && t % period == 0,
            _ => true,
        };
        let mut vectors = vec![None; horizon];
        let mut remaining = budget;
        for t in 1..=horizon {
            if remaining <= 0.0 || full == 0.0 {
                break;
            }
            if !active(t) {
                continue;
            }
            let s = (remaining / full).min(1.0);
            let c: Vec<f64> = direction.iter().map(|v| v * s).collect();
            remaining -= s * full;
            for (i, a) in x.iter().enumerate() {
                let m = instance.means[i] + dot(a, &c);
                if m.abs() > 1.0 + 1e-12 {
                    return Err(BanditError::AdmissibilityViolation { t, index: i, value: m });
                }
            }
            vectors[t - 1] = Some(c);
        }
        Ok(CorruptionSchedule::new(vectors, instance))
    }
}

/// Realized per-round corruption vectors c_t (`None` = zero).
#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionSchedule {
    vectors: Vec<Option<Vec<f64>>>,
    /// max_x |⟨x, c_t⟩| per round.
    amounts: Vec<f64>,
}

impl CorruptionSchedule {
    pub fn new(vectors: Vec<Option<Vec<f64>>>, instance: &BanditInstance) -> Self {
        let amounts = vectors
            .iter()
            .map(|c| match c {
                Some(c) => instance.action_set.actions().iter().map(|a| dot(a, c).abs()).fold(0.0, f64::max),
                None => 0.0,
            })
            .collect();
        Self { vectors, amounts }
    }

    pub fn zero(horizon: usize) -> Self {
        Self { vectors: vec![None; horizon], amounts: vec![0.0; horizon] }
    }

    pub fn vector(&self, t: usize) -> Option<&[f64]> {
        self.vectors.get(t.wrapping_sub(1)).and_then(|c| c.as_deref())
    }

    /// ⟨x, c_t⟩.
    pub fn shift(&self, t: usize, x: &[f64]) -> f64 {
        self.vector(t).map_or(0.0, |c| dot(x, c))
    }

    pub fn amounts(&self) -> &[f64] {
        &self.amounts
    }

    pub fn total(&self) -> f64 {
        self.amounts.iter().sum()
    }
}

/// Total corruption and its split over blocks. `block_starts` are the
/// 1-based first rounds of consecutive blocks, beginning with 1.
pub fn corruption_totals(schedule: &CorruptionSchedule, block_starts: &[usize]) -> (f64, Vec<f64>) {
    let n = schedule.amounts.len();
    let per_block: Vec<f64> = block_starts
        .iter()
        .enumerate()
        .map(|(k, &start)| {
            let end = block_starts.get(k + 1).copied().unwrap_or(n + 1).min(n + 1);
            let lo = start.clamp(1, n + 1) - 1;
            schedule.amounts[lo..(end - 1).max(lo)].iter().sum()
        })
        .collect();
    (per_block.iter().sum(), per_block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_instance, validate_action_set};

    fn inst() -> BanditInstance {
        let x = validate_action_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        make_instance(x, vec![-0.15, 0.25]).unwrap()
    }

    #[test]
    fn front_loaded_budget() {
        let s = CorruptionGenerator::FrontLoaded { budget: 0.5 }.realize(&inst(), 10).unwrap();
        let c = s.vector(1).unwrap();
        assert!((c[0] - 0.3).abs() < 1e-15 && (c[1] + 0.5).abs() < 1e-15);
        assert!(s.vector(2).is_none());
        assert!((s.total() - 0.5).abs() < 1e-15);
        let (total, blocks) = corruption_totals(&s, &[1, 2, 4, 8]);
        assert_eq!(blocks.iter().sum::<f64>(), total);
        assert!((blocks[0] - 0.5).abs() < 1e-15 && blocks[1..].iter().all(|b| *b == 0.0));
    }

    #[test]
    fn partial_last_round() {
        let s = CorruptionGenerator::FrontLoaded { budget: 1.2 }.realize(&inst(), 10).unwrap();
        assert!((s.total() - 1.2).abs() < 1e-12);
        assert!((s.amounts()[2] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn target_optimal_raises_best_arm() {
        let i = inst();
        let s = CorruptionGenerator::TargetOptimal { budget: 10.0 }.realize(&i, 5).unwrap();
        let shifted = i.means[0] + s.shift(1, i.action_set.arm(0));
        assert!((shifted - (i.means[0] + i.delta_min)).abs() < 1e-15);
    }

    #[test]
    fn zero_schedule() {
        let (c, blocks) = corruption_totals(&CorruptionSchedule::zero(7), &[1, 2, 4]);
        assert_eq!(c, 0.0);
        assert!(blocks.iter().all(|b| *b == 0.0));
    }
}
