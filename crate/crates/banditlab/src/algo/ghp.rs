//! GeometricHedge.P with a design-based exploration distribution.

use super::{Learner, Step};
use crate::design::exploration_design;
use crate::env::Environment;
use crate::error::{BanditError, Result};
use crate::instance::{ActionSet, ArmDistribution};
use crate::linalg::{dot, gram};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GhpParams {
    pub gamma: f64,
    /// Learning rate from the d-based formula; the state may shrink it.
    pub eta: f64,
    pub delta_prime: f64,
    pub c1: f64,
    pub c2: f64,
    pub l0: usize,
    pub horizon: usize,
    /// √(ln(1/δ′)/(dT)), the per-unit optimism bonus.
    pub optimism: f64,
}

/// η = γ / (d + 2d·√(ln(1/δ′)/(dT))).
pub fn ghp_eta(gamma: f64, d: usize, horizon: usize, ln_inv_delta_prime: f64) -> f64 {
    let d = d as f64;
    gamma / (d + 2.0 * d * (ln_inv_delta_prime / (d * horizon as f64)).sqrt())
}

/// Tuning for horizon T with δ′ = δ/(|X| log₂T).
///
/// C_1 = scale·2^15·d·ln(T|X|/δ) and L_0 = ⌈scale·2^15·d·ln²(T/δ′)⌉; at
/// scale 1 these sit at the black-box contract's floor, and C_2 = 20.
pub fn ghp_params(d: usize, horizon: usize, n_arms: usize, delta: f64, scale: f64) -> Result<GhpParams> {
    if horizon < 2 {
        return Err(BanditError::DomainError(format!("GeometricHedge.P needs T ≥ 2, got {horizon}")));
    }
    let t = horizon as f64;
    let n = n_arms as f64;
    let delta_prime = delta / (n * t.log2());
    let ln_inv = (1.0 / delta_prime).ln();
    let gamma = (d as f64 * (n / delta_prime).ln() / t).sqrt().min(0.5);
    let lead = scale * 32768.0 * d as f64;
    Ok(GhpParams {
        gamma,
        eta: ghp_eta(gamma, d, horizon, ln_inv),
        delta_prime,
        c1: lead * (t * n / delta).ln(),
        c2: 20.0,
        l0: ((lead * (t / delta_prime).ln().powi(2)).ceil() as usize).max(1),
        horizon,
        optimism: (ln_inv / (d as f64 * t)).sqrt(),
    })
}

/// Log-domain exponential weights over the arms.
#[derive(Clone, Debug)]
pub struct GhpState {
    actions: Vec<Vec<f64>>,
    params: GhpParams,
    eta: f64,
    q: Vec<f64>,
    d_eff: f64,
    log_w: Vec<f64>,
    p: Vec<f64>,
    rounds: usize,
    sum_lhat: Vec<f64>,
    sum_ltilde: Vec<f64>,
}

impl GhpState {
    /// `kappa` is the uniform share inside the exploration design, by default
    /// 1/(2|X|). When that design leaves some ‖x‖²_{S(q)⁻¹} above d, η is
    /// scaled by d/max‖x‖² so that |ηℓ̃| ≤ 1 still holds.
    pub fn new(action_set: &ActionSet, params: GhpParams, kappa: Option<f64>) -> Result<Self> {
        let n = action_set.len();
        let all: Vec<usize> = (0..n).collect();
        let q = exploration_design(&all, action_set, kappa.unwrap_or(0.5 / n as f64))?;
        let f = gram(q.weights(), action_set.actions()).factor();
        let mut d_eff = 0.0f64;
        for x in action_set.actions() {
            d_eff = d_eff.max(f.quad_norm(x)?);
        }
        let d = action_set.dim() as f64;
        let eta = params.eta * (d / d_eff).min(1.0);
        let mut s = Self {
            actions: action_set.actions().to_vec(),
            params,
            eta,
            q: q.weights().to_vec(),
            d_eff,
            log_w: vec![0.0; n],
            p: vec![0.0; n],
            rounds: 0,
            sum_lhat: vec![0.0; n],
            sum_ltilde: vec![0.0; n],
        };
        s.refresh();
        Ok(s)
    }

    fn refresh(&mut self) {
        let m = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = self.log_w.iter().map(|l| (l - m).exp()).collect();
        let total: f64 = w.iter().sum();
        let g = self.params.gamma;
        for ((p, w), q) in self.p.iter_mut().zip(&w).zip(&self.q) {
            *p = (1.0 - g) * w / total + g * q;
        }
    }

    pub fn params(&self) -> &GhpParams {
        &self.params
    }

    /// The learning rate in use.
    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// max_x ‖x‖²_{S(q)⁻¹} of the exploration distribution.
    pub fn exploration_constant(&self) -> f64 {
        self.d_eff
    }

    pub fn exploration(&self) -> &[f64] {
        &self.q
    }

    /// p_t = (1−γ)w/W + γq.
    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn distribution(&self) -> ArmDistribution {
        ArmDistribution::normalized(self.p.clone()).expect("GHP probabilities are positive")
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_w
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn sum_lhat(&self) -> &[f64] {
        &self.sum_lhat
    }

    pub fn sum_ltilde(&self) -> &[f64] {
        &self.sum_ltilde
    }

    pub fn choose(&self, u: f64) -> usize {
        ArmDistribution::sample_weights(&self.p, u)
    }

    /// Feeds back (x_t, y_t) and returns ℓ̂_{t,x} for every arm.
    pub fn update(&mut self, arm: usize, y: f64) -> Result<Vec<f64>> {
        let f = gram(&self.p, &self.actions).factor();
        let s = f.solve(&self.actions[arm])?;
        let bonus = 2.0 * self.params.optimism;
        let mut lhat = Vec::with_capacity(self.actions.len());
        for (i, x) in self.actions.iter().enumerate() {
            let l = dot(x, &s) * y;
            let lt = l - bonus * f.quad_norm(x)?;
            assert!((self.eta * lt).abs() <= 1.0 + 1e-9, "|η·ℓ̃| = {} exceeds 1", (self.eta * lt).abs());
            self.log_w[i] -= self.eta * lt;
            self.sum_lhat[i] += l;
            self.sum_ltilde[i] += lt;
            lhat.push(l);
        }
        let m = self.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.log_w.iter_mut().for_each(|l| *l -= m);
        self.rounds += 1;
        self.refresh();
        Ok(lhat)
    }

    /// Back to uniform weights with the same tuning.
    pub fn reset(&mut self) {
        self.log_w.iter_mut().for_each(|l| *l = 0.0);
        self.sum_lhat.iter_mut().for_each(|l| *l = 0.0);
        self.sum_ltilde.iter_mut().for_each(|l| *l = 0.0);
        self.rounds = 0;
        self.refresh();
    }
}

/// GeometricHedge.P run on its own.
#[derive(Clone, Debug)]
pub struct GhpLearner {
    pub state: GhpState,
    /// ℓ̂ from the most recent round.
    pub last_estimates: Vec<f64>,
}

impl GhpLearner {
    pub fn new(action_set: &ActionSet, params: GhpParams) -> Result<Self> {
        Ok(Self { state: GhpState::new(action_set, params, None)?, last_estimates: vec![0.0; action_set.len()] })
    }
}

impl Learner for GhpLearner {
    fn name(&self) -> &'static str {
        "ghp"
    }

    fn step(&mut self, t: usize, env: &Environment, rng: &mut RngStream, noise: &mut RngStream) -> Result<Step> {
        let arm = self.state.choose(rng.uniform());
        let y = env.observe(t, arm, noise);
        self.last_estimates = self.state.update(arm, y)?;
        Ok(Step { arm, y, phase: 0, block_or_epoch: 0 })
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
    fn eta_spot_value() {
        // d = 2, T = 200, ln(1/δ′) = 4: denominator 2 + 4·√(4/400) = 2.4
        assert!((ghp_eta(0.3, 2, 200, 4.0) - 0.3 / 2.4).abs() < 1e-15);
    }

    #[test]
    fn gamma_branches() {
        let small = ghp_params(2, 4, 4, 0.1, 1.0).unwrap();
        assert_eq!(small.gamma, 0.5);
        let big = ghp_params(2, 1 << 30, 4, 0.1, 1.0).unwrap();
        let dp = 0.1 / (4.0 * 30.0);
        assert_eq!(big.delta_prime, dp);
        assert!((big.gamma - (2.0 * (4.0 / dp).ln() / 2f64.powi(30)).sqrt()).abs() < 1e-15);
        assert!(ghp_params(2, 1, 4, 0.1, 1.0).is_err());
    }

    #[test]
    fn uniform_start_mixes_exploration() {
        let x = basis(3);
        let p = ghp_params(3, 1000, 3, 0.1, 1.0 / 32768.0).unwrap();
        let s = GhpState::new(&x, p, None).unwrap();
        for (pi, qi) in s.probabilities().iter().zip(s.exploration()) {
            assert!((pi - ((1.0 - p.gamma) / 3.0 + p.gamma * qi)).abs() < 1e-15);
        }
    }

    #[test]
    fn update_arithmetic() {
        // ℓ̃ = ℓ̂ − 2‖x‖²·b and w ← w·exp(−ηℓ̃)
        let x = basis(2);
        let p = ghp_params(2, 200, 2, 0.1, 1.0).unwrap();
        let mut s = GhpState::new(&x, p, None).unwrap();
        let p0 = s.probabilities().to_vec();
        let lhat = s.update(0, 0.5).unwrap();
        assert!((lhat[0] - 0.5 / p0[0]).abs() < 1e-12);
        assert_eq!(lhat[1], 0.0);
        let lt0 = lhat[0] - 2.0 * p.optimism / p0[0];
        let lt1 = -2.0 * p.optimism / p0[1];
        let gap = s.log_weights()[0] - s.log_weights()[1];
        assert!((gap - (-s.eta() * lt0 + s.eta() * lt1)).abs() < 1e-12);
        assert!(s.sum_ltilde().iter().zip(s.sum_lhat()).all(|(a, b)| a <= b));
        let total: f64 = s.probabilities().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exploration_floor_survives_long_runs() {
        let x = basis(2);
        let p = ghp_params(2, 5000, 2, 0.1, 1.0).unwrap();
        let mut s = GhpState::new(&x, p, None).unwrap();
        for _ in 0..5000 {
            s.update(1, 1.0).unwrap();
        }
        for (pi, qi) in s.probabilities().iter().zip(s.exploration()) {
            assert!(*pi >= p.gamma * qi * (1.0 - 1e-12));
        }
        assert!(s.log_weights().iter().all(|l| l.is_finite()));
    }
}
