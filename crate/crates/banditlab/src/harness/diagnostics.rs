//! Lower-bound diagnostics: measure G_i from seeded reference runs, pick the
//! switching interval and x′, build θ′ and compare the trajectory KL with 64V.

use rayon::prelude::*;

use super::config::AlgorithmConfig;
use super::run::run_cell;
use crate::env::{
    estimate_interval_designs, interval_schedule, make_lowerbound_pair, select_switch, trajectory_kl, EnvSpec,
    LowerBoundPair,
};
use crate::error::{BanditError, Result};
use crate::instance::BanditInstance;

#[derive(Clone, Debug)]
pub struct LowerBoundReport {
    pub pair: LowerBoundPair,
    /// E[T_i(x)] in the switching interval.
    pub counts: Vec<f64>,
    /// Σ_x E[T_i(x)] kl(⟨x,θ⟩, ⟨x,θ′⟩).
    pub kl: f64,
    /// 64V.
    pub kl_bound: f64,
    pub runs: usize,
}

/// Plays `runs` stochastic trials of `algo` (seeds 1..=runs) to estimate
/// every G_i, then constructs the pair at the first interval that admits one.
pub fn lowerbound_report(
    instance: &BanditInstance,
    algo: &AlgorithmConfig,
    gamma: f64,
    horizon: usize,
    runs: usize,
) -> Result<LowerBoundReport> {
    if runs == 0 {
        return Err(BanditError::Config("runs must be at least 1".into()));
    }
    let intervals = interval_schedule(instance.delta_min, gamma, horizon)?;
    let env = EnvSpec::default();
    let arm_runs = (1..=runs as u64)
        .into_par_iter()
        .map(|seed| run_cell(algo, instance, &env, horizon, seed).map(|t| t.arms()))
        .collect::<Result<Vec<_>>>()?;
    let designs = estimate_interval_designs(&arm_runs, &instance.action_set, &intervals)?;
    let v = gamma / 256.0 * (horizon as f64).ln();
    let gs: Vec<_> = designs.iter().map(|(g, _)| g.clone()).collect();
    let (interval, x_prime) = select_switch(&gs, instance, v)
        .ok_or_else(|| BanditError::DomainError(format!("no interval has ‖x−x*‖²_(G_i⁻¹) ≥ Δ²/(8V) with V = {v}")))?;
    let pair = make_lowerbound_pair(instance, gamma, horizon, &designs[interval - 1].0, x_prime, interval)?;
    let counts = designs[interval - 1].1.clone();
    let kl = trajectory_kl(&counts, &instance.action_set, &pair.theta, &pair.theta_prime)?;
    Ok(LowerBoundReport { kl_bound: 64.0 * pair.v, pair, counts, kl, runs })
}
