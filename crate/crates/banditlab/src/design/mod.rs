//! Optimal-design layer: the exploration mixture q^{G,κ}, the per-block
//! program OP, and the instance constant c(X, θ).

mod barrier;
mod constant;
mod fw;

pub use barrier::{BarrierProblem, BarrierResult};
pub use constant::{group_construction, instance_constant_c, orthonormal_oracle, ConstantSolution};
pub use fw::FwOptions;

use crate::error::{BanditError, Result};
use crate::instance::{ActionSet, ArmDistribution};
use crate::linalg::gram;

/// Relative tolerance for OP constraint verification.
pub const FEAS_TOL: f64 = 1e-6;
/// Relative duality gap requested from the barrier refinement.
const REFINE_GAP: f64 = 1e-8;

/// β_t = scale · 2^15 · ln(t|X|/δ).
pub fn beta_t(t: f64, n_arms: usize, delta: f64, scale: f64) -> f64 {
    scale * 32768.0 * (t * n_arms as f64 / delta).ln()
}

/// q^{G,κ} over the full action set.
pub fn exploration_design(subset: &[usize], action_set: &ActionSet, kappa: f64) -> Result<ArmDistribution> {
    let w = fw::exploration_design(subset, action_set.actions(), kappa, FwOptions::default())?;
    ArmDistribution::normalized(w)
}

#[derive(Clone, Debug)]
pub struct OpSolution {
    pub p: ArmDistribution,
    pub objective: f64,
    pub beta: f64,
    /// Smallest b_x − ‖x‖²_{S(p)⁻¹}.
    pub min_slack: f64,
    /// Largest (‖x‖² − b_x)/b_x; nonpositive when feasible.
    pub max_violation: f64,
    pub iterations: usize,
    /// Objective of the two-stage constructed point before refinement.
    pub constructed_objective: f64,
}

#[derive(Clone, Debug)]
pub struct FeasibilityReport {
    pub norms: Vec<f64>,
    pub bounds: Vec<f64>,
    /// b_x − ‖x‖²; −∞ when x leaves the range of S(p).
    pub slacks: Vec<f64>,
    pub max_violation: f64,
    pub pass: bool,
}

pub fn op_bounds(t: f64, gaps: &[f64], beta: f64, d: usize) -> Vec<f64> {
    gaps.iter().map(|g| t * g * g / beta + 4.0 * d as f64).collect()
}

pub fn op_feasibility_check(p: &[f64], t: f64, gaps: &[f64], beta: f64, action_set: &ActionSet) -> FeasibilityReport {
    let bounds = op_bounds(t, gaps, beta, action_set.dim());
    let f = gram(p, action_set.actions()).factor();
    let norms: Vec<f64> = action_set.actions().iter().map(|x| f.quad_norm(x).unwrap_or(f64::INFINITY)).collect();
    let slacks: Vec<f64> = norms.iter().zip(&bounds).map(|(n, b)| b - n).collect();
    let max_violation = norms.iter().zip(&bounds).map(|(n, b)| (n - b) / b).fold(f64::NEG_INFINITY, f64::max);
    FeasibilityReport { norms, bounds, slacks, max_violation, pass: max_violation <= FEAS_TOL }
}

/// A minimizer of Σ p_xΔ̂_x subject to ‖x‖²_{S(p)⁻¹} ≤ tΔ̂_x²/β + 4d.
///
/// First builds the certified point ½p* + ½q^{G,1/√t} from the log-det
/// surrogate, whose objective is at most (dβ+1)/√t, then polishes it with a
/// barrier method started at that point. The better of the two is returned.
pub fn solve_op(t: f64, gaps: &[f64], action_set: &ActionSet, beta: f64, tol: f64) -> Result<OpSolution> {
    let n = action_set.len();
    if gaps.len() != n {
        return Err(BanditError::LengthMismatch { expected: n, got: gaps.len() });
    }
    if gaps.iter().any(|g| !g.is_finite() || *g < 0.0) || !(t >= 1.0) || !(beta > 0.0) {
        return Err(BanditError::NonFiniteGaps);
    }
    let x = action_set.actions();
    let d = action_set.dim();
    let sqrt_t = t.sqrt();
    let kappa = (1.0 / sqrt_t).min(0.5);
    let xi = sqrt_t / beta;
    let opts = FwOptions { gap_tol: tol, ..FwOptions::default() };

    let (p_star, mut iterations) = fw::logdet_surrogate(gaps, x, 2.0 / xi, opts)?;
    let mut subset: Vec<usize> = (0..n).filter(|&i| gaps[i] <= 1.0 / sqrt_t).collect();
    if subset.is_empty() {
        let best = (0..n).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap();
        subset.push(best);
    }
    let q_g = fw::exploration_design(&subset, x, kappa, opts)?;
    let mut q: Vec<f64> = p_star.iter().zip(&q_g).map(|(a, b)| 0.5 * a + 0.5 * b).collect();

    let all: Vec<usize> = (0..n).collect();
    let q_x = fw::exploration_design(&all, x, kappa, opts)?;
    let mut report = op_feasibility_check(&q, t, gaps, beta, action_set);
    let mut halvings = 0;
    while !report.pass && halvings < 64 {
        q = q.iter().zip(&q_x).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        report = op_feasibility_check(&q, t, gaps, beta, action_set);
        halvings += 1;
    }
    if !report.pass {
        return Err(BanditError::Unbounded);
    }
    let constructed_objective = dot_gaps(&q, gaps);

    // Interior start for the barrier: pull toward q^{X,κ} until every slack is
    // strictly positive.
    let mut start = q.clone();
    let mut start_report = report.clone();
    let mut pulls = 0;
    while start_report.slacks.iter().zip(&start_report.bounds).any(|(s, b)| *s <= 1e-9 * b) && pulls < 64 {
        start = start.iter().zip(&q_x).map(|(a, b)| 0.5 * a + 0.5 * b).collect();
        start_report = op_feasibility_check(&start, t, gaps, beta, action_set);
        pulls += 1;
    }
    let mut best = q;
    if constructed_objective > 0.0 && start_report.slacks.iter().all(|s| *s > 0.0) {
        let problem = BarrierProblem {
            actions: x,
            cost: gaps.to_vec(),
            bounds: op_bounds(t, gaps, beta, d).into_iter().map(Some).collect(),
            simplex: true,
        };
        let refined = problem.solve(start, REFINE_GAP)?;
        iterations += refined.newton_steps;
        let r = op_feasibility_check(&refined.weights, t, gaps, beta, action_set);
        if r.pass && refined.objective < constructed_objective {
            best = refined.weights;
        }
    }
    let p = ArmDistribution::normalized(best)?;
    let report = op_feasibility_check(p.weights(), t, gaps, beta, action_set);
    let min_slack = report.slacks.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OpSolution {
        objective: dot_gaps(p.weights(), gaps),
        p,
        beta,
        min_slack,
        max_violation: report.max_violation,
        iterations,
        constructed_objective,
    })
}

fn dot_gaps(p: &[f64], gaps: &[f64]) -> f64 {
    p.iter().zip(gaps).map(|(a, b)| a * b).sum()
}
