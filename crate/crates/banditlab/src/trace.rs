//! Per-round records and regret accounting.

use crate::error::{BanditError, Result};
use crate::instance::{ActionSet, BanditInstance};
use crate::linalg::dot;

#[derive(Clone, Debug, PartialEq)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub arm: usize,
    pub y: f64,
    /// 0 for single-phase learners, 1 or 2 for BOTW.
    pub phase: u8,
    /// REOLB block index or BOTW epoch index.
    pub block_or_epoch: usize,
    /// Cumulative pseudo-regret; `None` when no fixed θ defines gaps.
    pub pseudo_regret_cum: Option<f64>,
    pub adv_regret_cum: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<RoundRecord>,
}

impl Trace {
    pub fn arms(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.arm).collect()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_pseudo_regret(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.pseudo_regret_cum)
    }

    pub fn final_adv_regret(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.adv_regret_cum)
    }

    /// Pseudo-regret at the end of round `t` (1-based); 0 before the first round.
    pub fn pseudo_regret_at(&self, t: usize) -> Option<f64> {
        if t == 0 {
            return Some(0.0);
        }
        self.records.get(t - 1).and_then(|r| r.pseudo_regret_cum)
    }
}

/// Prefix sums of Δ_{x_t}.
pub fn pseudo_regret(arms: &[usize], instance: &BanditInstance) -> Vec<f64> {
    let mut acc = 0.0;
    arms.iter()
        .map(|&a| {
            acc += instance.gaps[a];
            acc
        })
        .collect()
}

/// max_x Σ_t ⟨x_t − x, ℓ_t⟩.
pub fn adversarial_regret(arms: &[usize], losses: &[Vec<f64>], action_set: &ActionSet) -> Result<f64> {
    if arms.len() != losses.len() {
        return Err(BanditError::LengthMismatch { expected: arms.len(), got: losses.len() });
    }
    let mut tracker = RegretTracker::new(action_set.len());
    for (&a, l) in arms.iter().zip(losses) {
        let means: Vec<f64> = action_set.actions().iter().map(|x| dot(x, l)).collect();
        tracker.push(a, &means);
    }
    Ok(tracker.regret())
}

/// Running learner loss and per-comparator cumulative losses.
#[derive(Clone, Debug)]
pub struct RegretTracker {
    learner: f64,
    comparators: Vec<f64>,
}

impl RegretTracker {
    pub fn new(n_arms: usize) -> Self {
        Self { learner: 0.0, comparators: vec![0.0; n_arms] }
    }

    /// `means[x]` is ⟨x, ℓ_t⟩ for every arm.
    pub fn push(&mut self, arm: usize, means: &[f64]) {
        self.learner += means[arm];
        for (c, m) in self.comparators.iter_mut().zip(means) {
            *c += m;
        }
    }

    pub fn regret(&self) -> f64 {
        let best = self.comparators.iter().copied().fold(f64::INFINITY, f64::min);
        self.learner - best
    }

    pub fn learner_loss(&self) -> f64 {
        self.learner
    }

    pub fn comparator_loss(&self, arm: usize) -> f64 {
        self.comparators[arm]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_instance, validate_action_set};

    fn basis2() -> ActionSet {
        validate_action_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn pseudo_regret_examples() {
        let inst = make_instance(basis2(), vec![-0.5, 0.1]).unwrap();
        assert_eq!(pseudo_regret(&[0, 0, 0], &inst), vec![0.0, 0.0, 0.0]);
        let r = pseudo_regret(&[0, 1], &inst);
        assert!((r[1] - 0.6).abs() < 1e-15);
        let x = validate_action_set(vec![vec![1.0], vec![0.5]]).unwrap();
        let inst = make_instance(x, vec![-0.5]).unwrap();
        assert!((inst.gaps[1] - 0.25).abs() < 1e-15);
        let r = pseudo_regret(&vec![1; 100], &inst);
        assert!((r[99] - 25.0).abs() < 1e-12);
    }

    #[test]
    fn adversarial_examples() {
        let x = basis2();
        let l = vec![vec![0.2, 0.7]; 5];
        assert_eq!(adversarial_regret(&[0; 5], &l, &x).unwrap(), 0.0);
        let l = vec![vec![1.0, 0.0]; 2];
        assert_eq!(adversarial_regret(&[0, 0], &l, &x).unwrap(), 2.0);
        let l = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(adversarial_regret(&[0, 1], &l, &x).unwrap(), 1.0);
        assert!(matches!(adversarial_regret(&[0], &l, &x), Err(BanditError::LengthMismatch { .. })));
    }
}
