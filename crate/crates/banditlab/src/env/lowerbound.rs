//! The two-environment lower-bound construction: geometric interval schedule,
//! the perturbed parameter θ′ that makes some x′ beat x* from a chosen
//! interval on, and the KL bookkeeping between the two trajectories.

use crate::error::{BanditError, Result};
use crate::instance::{ActionSet, BanditInstance};
use crate::linalg::{dot, norm, DesignMatrix};

/// Interval lengths |I_1|, …, |I_S| summing to `horizon`.
///
/// |I_i| is ⌈(4/Δ_min)^{i−1} T^γ⌉, raised where rounding would break
/// |I_i| ≥ (3/Δ_min)·Σ_{j<i}|I_j|. The last interval is truncated at T.
pub fn interval_schedule(delta_min: f64, gamma: f64, horizon: usize) -> Result<Vec<usize>> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(BanditError::DomainError(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(delta_min > 0.0) || horizon == 0 {
        return Err(BanditError::DomainError(format!("need delta_min > 0 and T ≥ 1, got {delta_min}, {horizon}")));
    }
    let ratio = 4.0 / delta_min;
    let base = (horizon as f64).powf(gamma);
    let mut lengths: Vec<usize> = Vec::new();
    let mut total = 0usize;
    let mut i = 0;
    while total < horizon {
        let geometric = (ratio.powi(i) * base).ceil();
        let floor = (3.0 / delta_min * total as f64).ceil();
        let want = geometric.max(floor).max(1.0);
        let remaining = horizon - total;
        let len = if want >= remaining as f64 { remaining } else { want as usize };
        if len < remaining {
            assert!(len as f64 >= 3.0 / delta_min * total as f64, "interval {} too short", i + 1);
        }
        lengths.push(len);
        total += len;
        i += 1;
    }
    Ok(lengths)
}

/// First round (1-based) of each interval.
pub fn interval_starts(lengths: &[usize]) -> Vec<usize> {
    let mut start = 1;
    lengths
        .iter()
        .map(|l| {
            let s = start;
            start += l;
            s
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct LowerBoundPair {
    pub theta: Vec<f64>,
    pub theta_prime: Vec<f64>,
    pub gamma: f64,
    pub horizon: usize,
    pub intervals: Vec<usize>,
    /// 1-based index i of the first interval generated by θ′.
    pub switch_interval: usize,
    pub x_prime: usize,
    pub x_star: usize,
    pub c_reg: f64,
    /// Number of intervals S.
    pub s: usize,
    /// V = c_reg · ln T.
    pub v: f64,
    /// U = S · V.
    pub u: f64,
}

impl LowerBoundPair {
    /// First round generated by θ′.
    pub fn switch_round(&self) -> usize {
        1 + self.intervals[..self.switch_interval - 1].iter().sum::<usize>()
    }

    /// Replaces c_reg (default γ/256) and the derived U, V.
    pub fn with_c_reg(mut self, c_reg: f64) -> Self {
        self.c_reg = c_reg;
        self.v = c_reg * (self.horizon as f64).ln();
        self.u = self.s as f64 * self.v;
        self
    }
}

/// θ′ = θ − 2Δ_{x′} · G_i⁻¹(x′−x*) / ‖x′−x*‖²_{G_i⁻¹}.
pub fn make_lowerbound_pair(
    instance: &BanditInstance,
    gamma: f64,
    horizon: usize,
    gi: &DesignMatrix,
    x_prime: usize,
    switch_interval: usize,
) -> Result<LowerBoundPair> {
    let theta = &instance.theta;
    if norm(theta) > 0.25 + 1e-12 {
        return Err(BanditError::DomainError(format!("lower-bound construction needs ‖θ‖ ≤ 1/4, got {}", norm(theta))));
    }
    let star = instance.optimal_index;
    if x_prime == star || x_prime >= instance.n_arms() {
        return Err(BanditError::DomainError(format!("x′ must be a suboptimal arm, got {x_prime}")));
    }
    let intervals = interval_schedule(instance.delta_min, gamma, horizon)?;
    if switch_interval == 0 || switch_interval > intervals.len() {
        return Err(BanditError::DomainError(format!(
            "switch interval {switch_interval} outside 1..={}",
            intervals.len()
        )));
    }
    let f = gi.factor();
    if !f.is_full_rank() {
        return Err(BanditError::NotPd);
    }
    let diff: Vec<f64> =
        instance.action_set.arm(x_prime).iter().zip(instance.action_set.arm(star)).map(|(a, b)| a - b).collect();
    let g_inv_diff = f.solve(&diff)?;
    let nrm = dot(&diff, &g_inv_diff);
    let gap = instance.gaps[x_prime];
    let theta_prime: Vec<f64> = theta.iter().zip(&g_inv_diff).map(|(t, g)| t - g / nrm * 2.0 * gap).collect();

    let achieved = dot(&diff, &theta_prime);
    if (achieved + gap).abs() > 1e-10 {
        return Err(BanditError::DomainError(format!("⟨x′−x*, θ′⟩ = {achieved}, expected {}", -gap)));
    }
    for (i, x) in instance.action_set.actions().iter().enumerate() {
        let m = dot(x, &theta_prime);
        if m.abs() > 0.75 + 1e-12 {
            return Err(BanditError::MeanOutOfRange { index: i, value: m });
        }
    }
    let c_reg = gamma / 256.0;
    let v = c_reg * (horizon as f64).ln();
    let s = intervals.len();
    Ok(LowerBoundPair {
        theta: theta.clone(),
        theta_prime,
        gamma,
        horizon,
        s,
        intervals,
        switch_interval,
        x_prime,
        x_star: star,
        c_reg,
        v,
        u: s as f64 * v,
    })
}

/// kl(p, q) between ±1 variables with means p and q.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    if !(p.abs() < 1.0 && q.abs() < 1.0) {
        return Err(BanditError::DomainError(format!("kl needs means in (−1, 1), got {p}, {q}")));
    }
    let v = 0.5 * (1.0 + p) * ((1.0 + p) / (1.0 + q)).ln() + 0.5 * (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    Ok(v.max(0.0))
}

/// Σ_x E[T_i(x)] · kl(⟨x,θ⟩, ⟨x,θ′⟩).
pub fn trajectory_kl(counts: &[f64], action_set: &ActionSet, theta: &[f64], theta_prime: &[f64]) -> Result<f64> {
    if counts.len() != action_set.len() {
        return Err(BanditError::LengthMismatch { expected: action_set.len(), got: counts.len() });
    }
    let mut total = 0.0;
    for (c, x) in counts.iter().zip(action_set.actions()) {
        if *c > 0.0 {
            total += c * kl_bernoulli(dot(x, theta), dot(x, theta_prime))?;
        }
    }
    Ok(total)
}

/// Monte-Carlo G_i = E[Σ_{t∈I_i} x_t x_tᵀ] and E[T_i(x)] from arm sequences
/// of independent runs.
pub fn estimate_interval_designs(
    arm_runs: &[Vec<usize>],
    action_set: &ActionSet,
    intervals: &[usize],
) -> Result<Vec<(DesignMatrix, Vec<f64>)>> {
    if arm_runs.is_empty() {
        return Err(BanditError::EmptySamples);
    }
    let n = action_set.len();
    let runs = arm_runs.len() as f64;
    let starts = interval_starts(intervals);
    let mut out = Vec::with_capacity(intervals.len());
    for (start, len) in starts.iter().zip(intervals) {
        let mut counts = vec![0.0; n];
        for run in arm_runs {
            let lo = (start - 1).min(run.len());
            let hi = (start - 1 + len).min(run.len());
            for &a in &run[lo..hi] {
                counts[a] += 1.0;
            }
        }
        counts.iter_mut().for_each(|c| *c /= runs);
        let mut g = DesignMatrix::zeros(action_set.dim());
        for (c, x) in counts.iter().zip(action_set.actions()) {
            if *c > 0.0 {
                g.add_outer(*c, x);
            }
        }
        out.push((g, counts));
    }
    Ok(out)
}

/// The first interval i with some x ≠ x* satisfying
/// ‖x−x*‖²_{G_i⁻¹} ≥ Δ_x²/(8V), and the arm with the largest margin there.
/// Intervals whose G_i is singular along x−x* are skipped.
pub fn select_switch(designs: &[DesignMatrix], instance: &BanditInstance, v: f64) -> Option<(usize, usize)> {
    let star = instance.action_set.arm(instance.optimal_index);
    for (i, g) in designs.iter().enumerate() {
        let f = g.factor();
        if !f.is_full_rank() {
            continue;
        }
        let best = (0..instance.n_arms())
            .filter(|&x| x != instance.optimal_index)
            .filter_map(|x| {
                let diff: Vec<f64> = instance.action_set.arm(x).iter().zip(star).map(|(a, b)| a - b).collect();
                let q = f.quad_norm(&diff).ok()?;
                let need = instance.gaps[x].powi(2) / (8.0 * v);
                (q >= need).then_some((x, q / need))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((x, _)) = best {
            return Some((i + 1, x));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{make_instance, validate_action_set};

    fn pair_instance() -> BanditInstance {
        let x = validate_action_set(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        make_instance(x, vec![0.2, 0.0]).unwrap()
    }

    #[test]
    fn identity_design_example() {
        let inst = pair_instance();
        assert_eq!(inst.optimal_index, 1);
        let p = make_lowerbound_pair(&inst, 0.5, 1000, &DesignMatrix::identity(2), 0, 1).unwrap();
        assert!(p.theta_prime[0].abs() < 1e-15 && (p.theta_prime[1] - 0.2).abs() < 1e-15);
        let mut g = DesignMatrix::identity(2);
        g.scale(37.0);
        let q = make_lowerbound_pair(&inst, 0.5, 1000, &g, 0, 1).unwrap();
        for (a, b) in p.theta_prime.iter().zip(&q.theta_prime) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(make_lowerbound_pair(&inst, 0.5, 1000, &DesignMatrix::zeros(2), 0, 1).is_err());
    }

    #[test]
    fn kl_examples() {
        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        let want = 0.5 * (1.0f64 / 1.5).ln() + 0.5 * 2f64.ln();
        assert!((kl_bernoulli(0.0, 0.5).unwrap() - want).abs() < 1e-15);
        assert!((want - 0.143841).abs() < 1e-6);
        assert!(kl_bernoulli(1.0, 0.0).is_err());
    }

    #[test]
    fn schedule_growth() {
        let l = interval_schedule(0.2, 0.5, 100_000).unwrap();
        assert_eq!(l.iter().sum::<usize>(), 100_000);
        assert_eq!(l[0], 317);
        assert_eq!(l[1], 6325);
        for i in 1..l.len() - 1 {
            assert!(l[i] as f64 >= 15.0 * l[..i].iter().sum::<usize>() as f64);
        }
    }

    #[test]
    fn switch_round_counts_earlier_intervals() {
        let inst = pair_instance();
        let p = make_lowerbound_pair(&inst, 0.5, 100_000, &DesignMatrix::identity(2), 0, 2).unwrap();
        assert_eq!(p.switch_round(), 318);
        assert!((p.v - 0.5 / 256.0 * 100_000f64.ln()).abs() < 1e-15);
    }
}
