//! BOTW: epochs of BOTW-SE. Phase 1 runs the adversarial black box until one
//! arm looks clearly best; Phase 2 exploits OP around that arm and restarts
//! the epoch as soon as the gap statistics drift or the regret against x̂
//! grows too large.

use super::ghp::{GhpParams, GhpState};
use super::{Learner, Step};
use crate::design::{beta_t, solve_op};
use crate::env::Environment;
use crate::error::Result;
use crate::instance::{ActionSet, ArmDistribution};
use crate::linalg::{dot, gram, Cholesky};
use crate::rng::RngStream;
use crate::robust::{alpha_phase2, clip, SampleBag};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    One,
    Two,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BotwEvent {
    /// Phase 1 ended at epoch-local round t₀ with the given x̂.
    EnterPhase2 { round: usize, epoch: usize, t0: usize, xhat: usize },
    /// Phase 2 failed a test; the next round opens a new epoch.
    Restart { round: usize, epoch: usize, t0: usize, gap_test: bool, regret_test: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Phase1Outcome {
    pub xhat: usize,
    /// Δ̂_x = (1/t₀)Σ_{s≤t₀}(ℓ̂_{s,x} − ℓ̂_{s,x̂}).
    pub gaps: Vec<f64>,
}

/// Tests the two jump conditions at epoch-local round t:
/// Σy − Σℓ̂_{x̂} ≥ −5√(f_T C_1 t) and Σy − Σℓ̂_x ≤ −25√(f_T C_1 t) for x ≠ x̂.
pub fn phase1_termination(
    t: usize,
    min_duration: usize,
    sum_y: f64,
    sum_lhat: &[f64],
    f_t: f64,
    c1: f64,
) -> Option<Phase1Outcome> {
    if t < min_duration {
        return None;
    }
    let r = (f_t * c1 * t as f64).sqrt();
    let margins: Vec<f64> = sum_lhat.iter().map(|l| sum_y - l).collect();
    let mut found = None;
    for (xhat, m) in margins.iter().enumerate() {
        if *m < -5.0 * r {
            continue;
        }
        if margins.iter().enumerate().all(|(x, mx)| x == xhat || *mx <= -25.0 * r) {
            assert!(found.is_none(), "two arms pass both jump conditions");
            found = Some(xhat);
        }
    }
    found.map(|xhat| Phase1Outcome { xhat, gaps: sum_lhat.iter().map(|l| (l - sum_lhat[xhat]) / t as f64).collect() })
}

/// p̃ = ½e_{x̂} + ½p.
pub fn phase2_distribution(p: &ArmDistribution, xhat: usize) -> ArmDistribution {
    let w = p.weights().iter().enumerate().map(|(i, v)| 0.5 * v + if i == xhat { 0.5 } else { 0.0 }).collect();
    ArmDistribution::normalized(w).expect("mixture of distributions")
}

/// ℓ̂_{t,x}: xᵀS̃⁻¹x_t·y for x ≠ x̂, and y·1{x_t = x̂}/p̃_{x̂} for x̂.
pub fn phase2_estimates(
    x: usize,
    arm: usize,
    y: f64,
    s_tilde: &Cholesky,
    p_tilde: &[f64],
    xhat: usize,
    action_set: &ActionSet,
) -> Result<f64> {
    if x == xhat {
        return Ok(if arm == xhat { y / p_tilde[xhat] } else { 0.0 });
    }
    Ok(dot(action_set.arm(x), &s_tilde.solve(action_set.arm(arm))?) * y)
}

/// Δ̂_{t,x} = (Σ_{s≤t₀}ℓ̂_{s,x} + (t−t₀)·Rob_{t,x} − Σ_{s≤t}ℓ̂_{s,x̂}) / t.
pub fn phase2_gap_stat(t: usize, t0: usize, phase1_sum: f64, rob: f64, sum_lhat_xhat: f64) -> f64 {
    (phase1_sum + (t - t0) as f64 * rob - sum_lhat_xhat) / t as f64
}

/// True when some Δ̂_{t,x} leaves [0.39Δ̂_x, 1.81Δ̂_x] (first flag) or when
/// Σ_{s>t₀}(y_s − ℓ̂_{s,x̂}) ≥ 20√(f_T C_1 t₀) (second flag).
pub fn phase2_termination(
    gap_stats: &[f64],
    gaps: &[f64],
    xhat: usize,
    regret_vs_xhat: f64,
    f_t: f64,
    c1: f64,
    t0: usize,
) -> (bool, bool) {
    let drift = gap_stats.iter().zip(gaps).enumerate().any(|(x, (s, g))| x != xhat && (*s < 0.39 * g || *s > 1.81 * g));
    let regret = regret_vs_xhat >= 20.0 * (f_t * c1 * t0 as f64).sqrt();
    (drift, regret)
}

#[derive(Clone, Debug)]
struct Phase2State {
    t0: usize,
    xhat: usize,
    gaps: Vec<f64>,
    phase1_sums: Vec<f64>,
    cache_k: u32,
    p_tilde: Vec<f64>,
    kernel: Vec<Vec<f64>>,
    bags: Vec<SampleBag>,
    cum_norm: Vec<f64>,
    /// Σ_{s≤t} ℓ̂_{s,x̂} over both phases.
    sum_lhat_xhat: f64,
    /// Σ_{s>t₀}(y_s − ℓ̂_{s,x̂}).
    regret_vs_xhat: f64,
    gap_stats: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Botw {
    action_set: ActionSet,
    delta: f64,
    scale: f64,
    params: GhpParams,
    f_t: f64,
    epoch: usize,
    min_duration: usize,
    t: usize,
    ghp: GhpState,
    sum_y: f64,
    sum_lhat: Vec<f64>,
    phase2: Option<Phase2State>,
    restart_pending: bool,
    last_estimates: Vec<f64>,
    events: Vec<BotwEvent>,
}

impl Botw {
    /// `params` configures both the black box and the test constants C_1, L_0;
    /// `scale` multiplies β's 2^15 factor inside OP.
    pub fn new(action_set: &ActionSet, delta: f64, scale: f64, params: GhpParams) -> Result<Self> {
        let n = action_set.len();
        Ok(Self {
            action_set: action_set.clone(),
            delta,
            scale,
            f_t: (params.horizon as f64).ln(),
            ghp: GhpState::new(action_set, params, None)?,
            params,
            epoch: 0,
            min_duration: params.l0,
            t: 0,
            sum_y: 0.0,
            sum_lhat: vec![0.0; n],
            phase2: None,
            restart_pending: false,
            last_estimates: vec![0.0; n],
            events: Vec::new(),
        })
    }

    pub fn phase(&self) -> Phase {
        if self.phase2.is_some() {
            Phase::Two
        } else {
            Phase::One
        }
    }

    /// 0-based index of the current epoch.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Minimum Phase-1 duration L of the current epoch.
    pub fn min_duration(&self) -> usize {
        self.min_duration
    }

    /// Epoch-local round counter.
    pub fn local_round(&self) -> usize {
        self.t
    }

    pub fn params(&self) -> &GhpParams {
        &self.params
    }

    pub fn f_t(&self) -> f64 {
        self.f_t
    }

    pub fn events(&self) -> &[BotwEvent] {
        &self.events
    }

    pub fn restarts(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, BotwEvent::Restart { .. })).count()
    }

    pub fn phase2_entries(&self) -> usize {
        self.events.iter().filter(|e| matches!(e, BotwEvent::EnterPhase2 { .. })).count()
    }

    pub fn xhat(&self) -> Option<usize> {
        self.phase2.as_ref().map(|p| p.xhat)
    }

    pub fn t0(&self) -> Option<usize> {
        self.phase2.as_ref().map(|p| p.t0)
    }

    /// Frozen Δ̂ from the end of Phase 1.
    pub fn frozen_gaps(&self) -> Option<&[f64]> {
        self.phase2.as_ref().map(|p| p.gaps.as_slice())
    }

    /// Most recent Δ̂_{t,x} (entry x̂ is 0).
    pub fn gap_stats(&self) -> Option<&[f64]> {
        self.phase2.as_ref().map(|p| p.gap_stats.as_slice())
    }

    /// Current p̃ in Phase 2.
    pub fn p_tilde(&self) -> Option<&[f64]> {
        self.phase2.as_ref().map(|p| p.p_tilde.as_slice())
    }

    pub fn last_estimates(&self) -> &[f64] {
        &self.last_estimates
    }

    pub fn phase1_sums(&self) -> (f64, &[f64]) {
        (self.sum_y, &self.sum_lhat)
    }

    fn new_epoch(&mut self, t0: usize) {
        self.epoch += 1;
        self.min_duration = 2 * t0;
        self.t = 0;
        self.ghp.reset();
        self.sum_y = 0.0;
        self.sum_lhat.iter_mut().for_each(|v| *v = 0.0);
        self.phase2 = None;
        self.restart_pending = false;
    }

    fn enter_phase2(&mut self, outcome: Phase1Outcome) {
        let n = self.action_set.len();
        self.phase2 = Some(Phase2State {
            t0: self.t,
            xhat: outcome.xhat,
            sum_lhat_xhat: self.sum_lhat[outcome.xhat],
            phase1_sums: self.sum_lhat.clone(),
            gaps: outcome.gaps,
            cache_k: u32::MAX,
            p_tilde: Vec::new(),
            kernel: Vec::new(),
            bags: vec![SampleBag::new(); n],
            cum_norm: vec![0.0; n],
            regret_vs_xhat: 0.0,
            gap_stats: vec![0.0; n],
        });
    }

    fn phase1_step(&mut self, t: usize, env: &Environment, rng: &mut RngStream, noise: &mut RngStream) -> Result<Step> {
        let arm = self.ghp.choose(rng.uniform());
        let y = env.observe(t, arm, noise);
        let lhat = self.ghp.update(arm, y)?;
        self.sum_y += y;
        for (s, l) in self.sum_lhat.iter_mut().zip(&lhat) {
            *s += l;
        }
        self.last_estimates = lhat;
        let step = Step { arm, y, phase: 1, block_or_epoch: self.epoch };
        if let Some(out) =
            phase1_termination(self.t, self.min_duration, self.sum_y, &self.sum_lhat, self.f_t, self.params.c1)
        {
            self.events.push(BotwEvent::EnterPhase2 { round: t, epoch: self.epoch, t0: self.t, xhat: out.xhat });
            self.enter_phase2(out);
        }
        Ok(step)
    }

    /// Re-solves OP when the epoch-local round enters [2^k, 2^{k+1}).
    fn refresh_design(&mut self) -> Result<()> {
        let k = usize::BITS - 1 - self.t.leading_zeros();
        let p2 = self.phase2.as_mut().expect("phase 2");
        if p2.cache_k == k {
            return Ok(());
        }
        let tk = (1usize << k) as f64;
        let beta = beta_t(tk, self.action_set.len(), self.delta, self.scale);
        let op = solve_op(tk, &p2.gaps, &self.action_set, beta, 1e-7)?;
        let p_tilde = phase2_distribution(&op.p, p2.xhat);
        let f = gram(p_tilde.weights(), self.action_set.actions()).factor();
        let solved = self.action_set.actions().iter().map(|x| f.solve(x)).collect::<Result<Vec<_>>>()?;
        p2.kernel = self.action_set.actions().iter().map(|x| solved.iter().map(|s| dot(x, s)).collect()).collect();
        p2.p_tilde = p_tilde.weights().to_vec();
        p2.cache_k = k;
        Ok(())
    }

    fn phase2_step(&mut self, t: usize, env: &Environment, rng: &mut RngStream, noise: &mut RngStream) -> Result<Step> {
        self.refresh_design()?;
        let n = self.action_set.len();
        let local = self.t;
        let delta = self.delta;
        let p2 = self.phase2.as_mut().expect("phase 2");
        let arm = ArmDistribution::sample_weights(&p2.p_tilde, rng.uniform());
        let y = env.observe(t, arm, noise);
        for x in 0..n {
            let l = if x == p2.xhat {
                if arm == p2.xhat {
                    y / p2.p_tilde[p2.xhat]
                } else {
                    0.0
                }
            } else {
                p2.kernel[x][arm] * y
            };
            self.last_estimates[x] = l;
            if x == p2.xhat {
                p2.sum_lhat_xhat += l;
                p2.regret_vs_xhat += y - l;
            } else {
                p2.bags[x].push(l);
                p2.cum_norm[x] += 2.0 * p2.kernel[x][x];
            }
        }
        for x in 0..n {
            if x == p2.xhat {
                p2.gap_stats[x] = 0.0;
                continue;
            }
            let alpha = alpha_phase2(local, p2.t0, p2.cum_norm[x], n, delta);
            let rob = clip(p2.bags[x].catoni(alpha)?, -1.0, 1.0)?;
            p2.gap_stats[x] = phase2_gap_stat(local, p2.t0, p2.phase1_sums[x], rob, p2.sum_lhat_xhat);
        }
        let (gap_test, regret_test) =
            phase2_termination(&p2.gap_stats, &p2.gaps, p2.xhat, p2.regret_vs_xhat, self.f_t, self.params.c1, p2.t0);
        if gap_test || regret_test {
            self.events.push(BotwEvent::Restart { round: t, epoch: self.epoch, t0: p2.t0, gap_test, regret_test });
            self.restart_pending = true;
        }
        Ok(Step { arm, y, phase: 2, block_or_epoch: self.epoch })
    }
}

impl Learner for Botw {
    fn name(&self) -> &'static str {
        "botw"
    }

    fn step(&mut self, t: usize, env: &Environment, rng: &mut RngStream, noise: &mut RngStream) -> Result<Step> {
        if self.restart_pending {
            let t0 = self.phase2.as_ref().map_or(self.t, |p| p.t0);
            self.new_epoch(t0);
        }
        self.t += 1;
        match self.phase() {
            Phase::One => self.phase1_step(t, env, rng, noise),
            Phase::Two => self.phase2_step(t, env, rng, noise),
        }
    }
}

/// Running check of the black-box contract
/// Σ(ℓ_{s,x_s} − ℓ_{s,x}) ≤ √(C_1 t) − C_2|Σ(ℓ_{s,x} − ℓ̂_{s,x})| for t ≥ L_0,
/// using the true mean losses known to the simulator.
#[derive(Clone, Debug)]
pub struct BlackBoxAudit {
    pub c1: f64,
    pub c2: f64,
    pub l0: usize,
    t: usize,
    regret: Vec<f64>,
    deviation: Vec<f64>,
    pub checks: usize,
    pub violations: usize,
    /// Smallest value of the right side minus the left side seen so far.
    pub worst_margin: f64,
    pub first_violation: Option<(usize, usize)>,
}

impl BlackBoxAudit {
    pub fn new(n_arms: usize, c1: f64, c2: f64, l0: usize) -> Self {
        Self {
            c1,
            c2,
            l0,
            t: 0,
            regret: vec![0.0; n_arms],
            deviation: vec![0.0; n_arms],
            checks: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            first_violation: None,
        }
    }

    /// One round: pulled arm, true means ⟨x, ℓ_t⟩, and the black box's ℓ̂_t.
    pub fn push(&mut self, arm: usize, means: &[f64], lhat: &[f64]) {
        self.t += 1;
        for x in 0..means.len() {
            self.regret[x] += means[arm] - means[x];
            self.deviation[x] += means[x] - lhat[x];
        }
        if self.t < self.l0 {
            return;
        }
        let budget = (self.c1 * self.t as f64).sqrt();
        for x in 0..means.len() {
            let margin = budget - self.c2 * self.deviation[x].abs() - self.regret[x];
            self.checks += 1;
            self.worst_margin = self.worst_margin.min(margin);
            if margin < 0.0 {
                self.violations += 1;
                self.first_violation.get_or_insert((self.t, x));
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}
