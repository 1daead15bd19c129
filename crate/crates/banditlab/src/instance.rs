//! Action sets, bandit instances and arm distributions.

use crate::error::{BanditError, Result};
use crate::linalg::{dot, gram, norm};

pub const TOL: f64 = 1e-9;
/// Two arms closer than this to the minimal mean make the optimum non-unique.
pub const OPT_TOL: f64 = 1e-12;

/// A finite spanning subset of the unit ball, arms addressed by index.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionSet {
    actions: Vec<Vec<f64>>,
    d: usize,
}

impl ActionSet {
    pub fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    pub fn arm(&self, i: usize) -> &[f64] {
        &self.actions[i]
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// True when the arms are exactly the d standard basis vectors up to order
    /// and sign-free orthonormality at 1e-9.
    pub fn is_orthonormal(&self) -> bool {
        if self.len() != self.d {
            return false;
        }
        for i in 0..self.len() {
            for j in 0..self.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot(&self.actions[i], &self.actions[j]) - want).abs() > TOL {
                    return false;
                }
            }
        }
        true
    }
}

/// Checks norms, duplicates and rank; the rank comes from a pivoted Cholesky
/// of the uniform design, whose range equals the span of the arms.
pub fn validate_action_set(actions: Vec<Vec<f64>>) -> Result<ActionSet> {
    let d = actions.first().map(Vec::len).ok_or(BanditError::EmptySubset)?;
    if d == 0 {
        return Err(BanditError::RankDeficient { rank: 0, d: 0 });
    }
    for a in &actions {
        if a.len() != d {
            return Err(BanditError::LengthMismatch { expected: d, got: a.len() });
        }
    }
    for (i, a) in actions.iter().enumerate() {
        let n = norm(a);
        if !n.is_finite() || n > 1.0 + OPT_TOL {
            return Err(BanditError::NormViolation { index: i, norm: n });
        }
    }
    for i in 0..actions.len() {
        for j in (i + 1)..actions.len() {
            if actions[i] == actions[j] {
                return Err(BanditError::DuplicateArm(i, j));
            }
        }
    }
    let w = vec![1.0 / actions.len() as f64; actions.len()];
    let rank = gram(&w, &actions).factor().rank();
    if rank < d {
        return Err(BanditError::RankDeficient { rank, d });
    }
    if actions.len() < 2 {
        return Err(BanditError::Config("action set needs at least two arms".into()));
    }
    Ok(ActionSet { actions, d })
}

/// An action set with a loss parameter θ and its derived gaps.
#[derive(Clone, Debug, PartialEq)]
pub struct BanditInstance {
    pub action_set: ActionSet,
    pub theta: Vec<f64>,
    pub means: Vec<f64>,
    pub gaps: Vec<f64>,
    pub optimal_index: usize,
    pub delta_min: f64,
}

impl BanditInstance {
    pub fn n_arms(&self) -> usize {
        self.action_set.len()
    }

    pub fn dim(&self) -> usize {
        self.action_set.dim()
    }
}

pub fn make_instance(action_set: ActionSet, theta: Vec<f64>) -> Result<BanditInstance> {
    if theta.len() != action_set.dim() {
        return Err(BanditError::LengthMismatch { expected: action_set.dim(), got: theta.len() });
    }
    let means: Vec<f64> = action_set.actions().iter().map(|x| dot(x, &theta)).collect();
    for (i, &m) in means.iter().enumerate() {
        if !m.is_finite() || m.abs() > 1.0 + OPT_TOL {
            return Err(BanditError::MeanOutOfRange { index: i, value: m });
        }
    }
    let best = (0..means.len()).fold(0, |b, i| if means[i] < means[b] { i } else { b });
    for i in 0..means.len() {
        if i != best && means[i] - means[best] <= OPT_TOL {
            return Err(BanditError::NonUniqueOptimum(best.min(i), best.max(i)));
        }
    }
    let gaps: Vec<f64> = action_set
        .actions()
        .iter()
        .map(|x| {
            let diff: Vec<f64> = x.iter().zip(action_set.arm(best)).map(|(a, b)| a - b).collect();
            dot(&diff, &theta).max(0.0)
        })
        .collect();
    let delta_min = gaps.iter().enumerate().filter(|(i, _)| *i != best).map(|(_, g)| *g).fold(f64::INFINITY, f64::min);
    Ok(BanditInstance { action_set, theta, means, gaps, optimal_index: best, delta_min })
}

/// A probability vector over arms.
#[derive(Clone, Debug, PartialEq)]
pub struct ArmDistribution {
    weights: Vec<f64>,
}

impl ArmDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(BanditError::EmptySubset);
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(BanditError::DomainError("negative or non-finite weight".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > TOL {
            return Err(BanditError::DomainError(format!("weights sum to {s}")));
        }
        Ok(Self { weights })
    }

    /// Normalizes nonnegative weights.
    pub fn normalized(mut weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(BanditError::DomainError("weights do not normalize".into()));
        }
        weights.iter_mut().for_each(|w| *w /= s);
        Self::new(weights)
    }

    pub fn uniform(n: usize) -> Self {
        Self { weights: vec![1.0 / n as f64; n] }
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Inverse-CDF sample from one uniform draw. Zero-weight arms are never
    /// returned; rounding slack at the top falls on the last positive arm.
    pub fn sample(&self, u: f64) -> usize {
        Self::sample_weights(&self.weights, u)
    }

    /// Inverse-CDF sample over raw weights that already sum to one.
    pub fn sample_weights(weights: &[f64], u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        v
    }

    #[test]
    fn validation_examples() {
        let x = validate_action_set(vec![e(2, 0), e(2, 1)]).unwrap();
        assert_eq!(x.dim(), 2);
        assert!(x.is_orthonormal());
        assert!(matches!(
            validate_action_set(vec![e(1, 0), vec![2.0]]),
            Err(BanditError::NormViolation { index: 1, .. })
        ));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(matches!(
            validate_action_set(vec![e(3, 0), vec![s, s, 0.0]]),
            Err(BanditError::RankDeficient { rank: 2, d: 3 })
        ));
        assert!(matches!(validate_action_set(vec![e(2, 0), e(2, 1), e(2, 0)]), Err(BanditError::DuplicateArm(0, 2))));
    }

    #[test]
    fn instance_examples() {
        let x = validate_action_set(vec![e(2, 0), e(2, 1)]).unwrap();
        let inst = make_instance(x.clone(), vec![-0.5, 0.1]).unwrap();
        assert_eq!(inst.optimal_index, 0);
        assert!((inst.gaps[1] - 0.6).abs() < 1e-15);
        assert!((inst.delta_min - 0.6).abs() < 1e-15);
        assert!(matches!(make_instance(x, vec![0.0, 0.0]), Err(BanditError::NonUniqueOptimum(0, 1))));

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x3 = validate_action_set(vec![e(2, 0), e(2, 1), vec![s, s]]).unwrap();
        let inst = make_instance(x3, vec![-0.5, 0.1]).unwrap();
        assert!((inst.gaps[2] - 0.21716).abs() < 1e-5);
    }

    #[test]
    fn mean_out_of_range() {
        let x = validate_action_set(vec![e(2, 0), e(2, 1)]).unwrap();
        assert!(matches!(make_instance(x, vec![-1.5, 0.0]), Err(BanditError::MeanOutOfRange { index: 0, .. })));
    }

    #[test]
    fn inverse_cdf() {
        assert_eq!(ArmDistribution::new(vec![1.0, 0.0]).unwrap().sample(0.999), 0);
        assert_eq!(ArmDistribution::new(vec![0.5, 0.5]).unwrap().sample(0.25), 0);
        assert_eq!(ArmDistribution::new(vec![0.5, 0.5]).unwrap().sample(0.75), 1);
        assert_eq!(ArmDistribution::new(vec![0.5, 0.5, 0.0]).unwrap().sample(1.0 - 1e-17), 1);
    }
}
