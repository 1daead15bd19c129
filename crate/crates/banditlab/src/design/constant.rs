//! The instance constant c(X, θ): the cheapest allocation N ≥ 0 with
//! ‖x‖²_{H(N)⁻¹} ≤ Δ_x²/2 for every suboptimal arm.

use super::barrier::BarrierProblem;
use super::fw::{exploration_design, FwOptions};
use crate::error::{BanditError, Result};
use crate::instance::{ActionSet, BanditInstance};
use crate::linalg::gram;

/// Cost placed on N_{x*} so the barrier path stays bounded; its contribution
/// to the reported value is excluded.
const XSTAR_COST: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ConstantSolution {
    /// Σ_{x≠x*} N_xΔ_x.
    pub value: f64,
    pub n: Vec<f64>,
    /// Largest (‖x‖² − Δ_x²/2)/(Δ_x²/2) over suboptimal arms.
    pub max_violation: f64,
    /// Value of the grouped construction the solver started from.
    pub start_value: f64,
    pub newton_steps: usize,
}

fn violation(n: &[f64], instance: &BanditInstance) -> f64 {
    let f = gram(n, instance.action_set.actions()).factor();
    (0..instance.n_arms())
        .filter(|&i| i != instance.optimal_index)
        .map(|i| {
            let b = instance.gaps[i].powi(2) / 2.0;
            let v = f.quad_norm(instance.action_set.arm(i)).unwrap_or(f64::INFINITY);
            (v - b) / b
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn value(n: &[f64], instance: &BanditInstance) -> f64 {
    (0..instance.n_arms()).filter(|&i| i != instance.optimal_index).map(|i| n[i] * instance.gaps[i]).sum()
}

/// The grouped allocation N_x = Σ_j 4d q^{G_j,κ}_x / (2^{j−1}Δ_min²) with
/// G_j = {x : Δ_x² ∈ [2^{j−1}, 2^j)·Δ_min²} and κ = 1/(|X|·n·2^n). It is
/// feasible and costs at most 48d/Δ_min.
pub fn group_construction(instance: &BanditInstance) -> Result<Vec<f64>> {
    let x = instance.action_set.actions();
    let d = instance.dim() as f64;
    let dm2 = instance.delta_min.powi(2);
    let group = |i: usize| -> usize { ((instance.gaps[i].powi(2) / dm2).log2().floor() as usize) + 1 };
    let others: Vec<usize> = (0..x.len()).filter(|&i| i != instance.optimal_index).collect();
    let n_groups = others.iter().map(|&i| group(i)).max().ok_or(BanditError::Unbounded)?;
    let kappa = (1.0 / (x.len() as f64 * n_groups as f64 * 2f64.powi(n_groups as i32))).min(0.5);
    let mut n = vec![0.0; x.len()];
    for j in 1..=n_groups {
        let members: Vec<usize> = others.iter().copied().filter(|&i| group(i) == j).collect();
        if members.is_empty() {
            continue;
        }
        let q = exploration_design(&members, x, kappa, FwOptions::default())?;
        let scale = 4.0 * d / (2f64.powi(j as i32 - 1) * dm2);
        for (ni, qi) in n.iter_mut().zip(q) {
            *ni += scale * qi;
        }
    }
    Ok(n)
}

/// Solves the allocation program to relative accuracy `tol` by a barrier
/// method started from the grouped construction, rescaled to strict
/// feasibility. N_{x*} is capped at 10⁹/Δ_min².
pub fn instance_constant_c(instance: &BanditInstance, tol: f64) -> Result<ConstantSolution> {
    let x = instance.action_set.actions();
    let star = instance.optimal_index;
    let mut start = group_construction(instance)?;
    let ratio = violation(&start, instance) + 1.0;
    if !ratio.is_finite() {
        return Err(BanditError::Unbounded);
    }
    // ‖x‖² scales as 1/N, so this puts the tightest constraint at 1/1.05 of its bound
    start.iter_mut().for_each(|v| *v *= ratio * 1.05);
    let start_value = value(&start, instance);

    let mut cost: Vec<f64> = instance.gaps.clone();
    cost[star] = XSTAR_COST * instance.delta_min;
    let bounds = (0..x.len()).map(|i| (i != star).then(|| instance.gaps[i].powi(2) / 2.0)).collect();
    let problem = BarrierProblem { actions: x, cost, bounds, simplex: false };
    let r = problem.solve(start.clone(), (tol * 1e-3).min(1e-6))?;

    let mut n = r.weights;
    let cap = 1e9 / instance.delta_min.powi(2);
    if n[star] > cap {
        n[star] = cap;
    }
    let (n, steps) = if violation(&n, instance) <= 1e-6 { (n, r.newton_steps) } else { (start, 0) };
    Ok(ConstantSolution {
        value: value(&n, instance),
        max_violation: violation(&n, instance),
        n,
        start_value,
        newton_steps: steps,
    })
}

/// Σ_{x≠x*} 2/Δ_x, the closed form for orthonormal action sets.
pub fn orthonormal_oracle(action_set: &ActionSet, gaps: &[f64]) -> Result<f64> {
    if !action_set.is_orthonormal() {
        return Err(BanditError::NonOrthonormal);
    }
    if gaps.len() != action_set.len() {
        return Err(BanditError::LengthMismatch { expected: action_set.len(), got: gaps.len() });
    }
    Ok(gaps.iter().filter(|g| **g > 0.0).map(|g| 2.0 / g).sum())
}
