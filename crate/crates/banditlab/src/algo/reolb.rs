//! REOLB: doubling blocks, each sampling from an OP solution built on the
//! previous block's robust gap estimates.

use super::{Learner, Step};
use crate::design::{beta_t, solve_op, OpSolution};
use crate::env::Environment;
use crate::error::Result;
use crate::instance::{ActionSet, ArmDistribution};
use crate::linalg::{dot, gram, Cholesky};
use crate::rng::RngStream;
use crate::robust::{alpha_block, clip, SampleBag};

/// ℓ̂_{t,x} = xᵀS_m⁻¹x_t·y.
pub fn unbiased_estimate(x: &[f64], x_t: &[f64], y: f64, s_m: &Cholesky) -> Result<f64> {
    Ok(dot(x, &s_m.solve(x_t)?) * y)
}

#[derive(Clone, Debug)]
pub struct Reolb {
    action_set: ActionSet,
    delta: f64,
    scale: f64,
    tol: f64,
    m: u32,
    block_start: usize,
    filled: usize,
    gap_estimates: Vec<f64>,
    rob_prev: Option<Vec<f64>>,
    op: OpSolution,
    /// K[x][y] = xᵀS_m⁻¹y, so ℓ̂_{t,x} = K[x][x_t]·y_t.
    kernel: Vec<Vec<f64>>,
    buffers: Vec<SampleBag>,
    last_estimates: Vec<f64>,
}

impl Reolb {
    /// `scale` multiplies β's 2^15 factor; `tol` goes to the OP solver.
    pub fn new(action_set: &ActionSet, delta: f64, scale: f64) -> Result<Self> {
        let n = action_set.len();
        let mut s = Self {
            action_set: action_set.clone(),
            delta,
            scale,
            tol: 1e-7,
            m: 0,
            block_start: 1,
            filled: 0,
            gap_estimates: vec![0.0; n],
            rob_prev: None,
            op: placeholder(n),
            kernel: Vec::new(),
            buffers: vec![SampleBag::new(); n],
            last_estimates: vec![0.0; n],
        };
        s.begin_block()?;
        Ok(s)
    }

    /// Δ̂_m from the previous block's robust means, then p_m = OP(2^m, Δ̂_m).
    fn begin_block(&mut self) -> Result<()> {
        if let Some(rob) = &self.rob_prev {
            let lo = rob.iter().copied().fold(f64::INFINITY, f64::min);
            self.gap_estimates = rob.iter().map(|r| r - lo).collect();
        }
        let t = self.block_len() as f64;
        let beta = beta_t(t, self.action_set.len(), self.delta, self.scale);
        self.op = solve_op(t, &self.gap_estimates, &self.action_set, beta, self.tol)?;
        let f = gram(self.op.p.weights(), self.action_set.actions()).factor();
        let solved = self.action_set.actions().iter().map(|x| f.solve(x)).collect::<Result<Vec<_>>>()?;
        self.kernel = self.action_set.actions().iter().map(|x| solved.iter().map(|s| dot(x, s)).collect()).collect();
        Ok(())
    }

    /// Rob_{m,x} = Clip(Catoni_{α_x}(block buffer)), then opens block m+1.
    fn end_block(&mut self) -> Result<()> {
        let n = self.action_set.len();
        let mut rob = Vec::with_capacity(n);
        for x in 0..n {
            let alpha = alpha_block(self.m, self.kernel[x][x], n, self.delta);
            rob.push(clip(self.buffers[x].catoni(alpha)?, -1.0, 1.0)?);
        }
        self.rob_prev = Some(rob);
        self.buffers.iter_mut().for_each(|b| *b = SampleBag::new());
        self.block_start += self.block_len();
        self.filled = 0;
        self.m += 1;
        self.begin_block()
    }

    pub fn block(&self) -> u32 {
        self.m
    }

    pub fn block_len(&self) -> usize {
        1usize << self.m
    }

    pub fn block_start(&self) -> usize {
        self.block_start
    }

    /// Δ̂_m for the current block.
    pub fn gap_estimates(&self) -> &[f64] {
        &self.gap_estimates
    }

    pub fn rob_prev(&self) -> Option<&[f64]> {
        self.rob_prev.as_deref()
    }

    pub fn distribution(&self) -> &ArmDistribution {
        &self.op.p
    }

    pub fn op_solution(&self) -> &OpSolution {
        &self.op
    }

    /// ‖x‖²_{S_m⁻¹}.
    pub fn norm_sq(&self, x: usize) -> f64 {
        self.kernel[x][x]
    }

    pub fn buffer(&self, x: usize) -> &SampleBag {
        &self.buffers[x]
    }

    pub fn last_estimates(&self) -> &[f64] {
        &self.last_estimates
    }

    pub fn choose_arm(&self, u: f64) -> usize {
        self.op.p.sample(u)
    }

    /// Records (x_t, y_t) into every arm's block buffer.
    pub fn observe(&mut self, arm: usize, y: f64) {
        for (x, bag) in self.buffers.iter_mut().enumerate() {
            let l = self.kernel[x][arm] * y;
            self.last_estimates[x] = l;
            bag.push(l);
        }
        self.filled += 1;
    }
}

fn placeholder(n: usize) -> OpSolution {
    OpSolution {
        p: ArmDistribution::uniform(n),
        objective: 0.0,
        beta: 0.0,
        min_slack: 0.0,
        max_violation: 0.0,
        iterations: 0,
        constructed_objective: 0.0,
    }
}

impl Learner for Reolb {
    fn name(&self) -> &'static str {
        "reolb"
    }

    fn step(&mut self, t: usize, env: &Environment, rng: &mut RngStream, noise: &mut RngStream) -> Result<Step> {
        if self.filled == self.block_len() {
            self.end_block()?;
        }
        let arm = self.choose_arm(rng.uniform());
        let y = env.observe(t, arm, noise);
        self.observe(arm, y);
        Ok(Step { arm, y, phase: 0, block_or_epoch: self.m as usize })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_action_set;

    fn basis(d: usize) -> ActionSet {
        validate_action_set((0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()).unwrap()
    }

    #[test]
    fn estimate_examples() {
        let x = basis(2);
        let f = gram(&[0.5, 0.5], x.actions()).factor();
        assert!((unbiased_estimate(x.arm(0), x.arm(0), 0.5, &f).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(unbiased_estimate(x.arm(1), x.arm(0), 0.5, &f).unwrap(), 0.0);
        assert_eq!(unbiased_estimate(x.arm(0), x.arm(0), 0.0, &f).unwrap(), 0.0);
    }

    #[test]
    fn first_block_has_zero_gaps() {
        let r = Reolb::new(&basis(3), 0.1, 1.0 / 32768.0).unwrap();
        assert_eq!(r.block(), 0);
        assert!(r.gap_estimates().iter().all(|g| *g == 0.0));
        assert!(r.op_solution().max_violation <= 1e-6);
    }

    #[test]
    fn gaps_from_previous_rob() {
        let mut r = Reolb::new(&basis(2), 0.1, 1.0 / 32768.0).unwrap();
        r.rob_prev = Some(vec![-0.2, 0.1]);
        r.begin_block().unwrap();
        assert_eq!(r.gap_estimates()[0], 0.0);
        assert!((r.gap_estimates()[1] - 0.3).abs() < 1e-15);
        r.rob_prev = Some(vec![0.4, 0.4]);
        r.begin_block().unwrap();
        assert_eq!(r.gap_estimates(), &[0.0, 0.0]);
    }

    #[test]
    fn block_end_uses_clipped_catoni() {
        let mut r = Reolb::new(&basis(2), 0.1, 1.0 / 32768.0).unwrap();
        r.buffers[0].push(0.4);
        r.buffers[1].push(1.7);
        r.filled = 1;
        r.end_block().unwrap();
        let rob = r.rob_prev().unwrap();
        assert!((rob[0] - 0.4).abs() < 1e-12 && rob[1] == 1.0);
        assert_eq!(r.block(), 1);
        assert_eq!(r.block_start(), 2);
    }
}
