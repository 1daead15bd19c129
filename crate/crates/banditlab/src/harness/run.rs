use crate::algo::{ghp_params, Botw, GhpLearner, Learner, Reolb};
use crate::env::{EnvSpec, Environment};
use crate::error::{BanditError, Result};
use crate::instance::BanditInstance;
use crate::rng::{streams, RngStream};
use crate::trace::{RegretTracker, RoundRecord, Trace};

use super::config::{AlgorithmConfig, ExperimentConfig};

/// The learner named in `algo`, tuned for `horizon`.
pub fn build_learner(algo: &AlgorithmConfig, instance: &BanditInstance, horizon: usize) -> Result<Box<dyn Learner>> {
    let x = &instance.action_set;
    let scale = algo.scale();
    Ok(match algo.name.as_str() {
        "reolb" => Box::new(Reolb::new(x, algo.delta, scale)?),
        "ghp" => Box::new(GhpLearner::new(x, ghp_params(x.dim(), horizon, x.len(), algo.delta, scale)?)?),
        "botw" => Box::new(Botw::new(x, algo.delta, scale, ghp_params(x.dim(), horizon, x.len(), algo.delta, scale)?)?),
        other => return Err(BanditError::Config(format!("unknown algorithm '{other}'"))),
    })
}

/// Plays `horizon` rounds of `learner` against `env`. The learner and the
/// noise draw from separate streams of `seed`.
pub fn simulate(learner: &mut dyn Learner, env: &Environment, horizon: usize, seed: u64) -> Result<Trace> {
    let mut rng = RngStream::new(seed, streams::LEARNER);
    let mut noise = RngStream::new(seed, streams::NOISE);
    simulate_with(learner, env, horizon, &mut rng, &mut noise, |_, _| {})
}

/// As [`simulate`], calling `observe(t, learner)` after every round.
pub fn simulate_with<L, F>(
    learner: &mut L,
    env: &Environment,
    horizon: usize,
    rng: &mut RngStream,
    noise: &mut RngStream,
    mut observe: F,
) -> Result<Trace>
where
    L: Learner + ?Sized,
    F: FnMut(usize, &L),
{
    let gaps = env.gaps().map(|g| g.to_vec());
    let mut tracker = RegretTracker::new(env.action_set().len());
    let mut pseudo = 0.0;
    let mut records = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let step = learner.step(t, env, rng, noise)?;
        tracker.push(step.arm, &env.means(t));
        let pseudo_regret_cum = gaps.as_ref().map(|g| {
            pseudo += g[step.arm];
            pseudo
        });
        records.push(RoundRecord {
            t,
            arm: step.arm,
            y: step.y,
            phase: step.phase,
            block_or_epoch: step.block_or_epoch,
            pseudo_regret_cum,
            adv_regret_cum: tracker.regret(),
        });
        observe(t, learner);
    }
    Ok(Trace { records })
}

/// One trial of (algorithm, environment, T, seed).
pub fn run_cell(
    algo: &AlgorithmConfig,
    instance: &BanditInstance,
    env: &EnvSpec,
    horizon: usize,
    seed: u64,
) -> Result<Trace> {
    let env = env.realize(instance, seed, horizon)?;
    let mut learner = build_learner(algo, instance, horizon)?;
    simulate(learner.as_mut(), &env, horizon, seed)
}

/// The configured algorithm, environment and horizon under one seed.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<Trace> {
    config.validate()?;
    let spec = config.instance_spec()?;
    let instance = spec.build()?;
    run_cell(&config.algorithm, &instance, &config.environment(&spec), config.algorithm.horizon, seed)
}
