//! Seeds × horizons × environments, run on a rayon pool. Workers only
//! simulate; a single collector on the calling thread writes every file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::output::{headline_regret, render_svg, sample_curve, write_atomic, write_summary, write_trace_file};
use super::output::{RegretBand, SummaryRow};
use super::run::run_cell;
use crate::env::EnvSpec;
use crate::error::{BanditError, Result};
use crate::trace::Trace;

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Position of `env` in the sweep's environment list.
    pub env_index: usize,
    pub env: EnvSpec,
    pub horizon: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Default)]
pub struct SweepOutcome {
    pub summary: Vec<SummaryRow>,
    pub trace_files: Vec<PathBuf>,
}

pub fn trace_file_name(algorithm: &str, env_label: &str, horizon: usize, seed: u64) -> String {
    format!("{algorithm}_{env_label}_T{horizon}_seed{seed}.csv")
}

pub fn cells(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    let spec = config.instance_spec()?;
    let mut out = Vec::new();
    for (env_index, env) in config.sweep_environments(&spec).into_iter().enumerate() {
        for horizon in config.sweep_horizons() {
            for &seed in &config.seeds {
                out.push(Cell { env_index, env: env.clone(), horizon, seed });
            }
        }
    }
    Ok(out)
}

/// Runs the configured sweep into `out_dir` with `jobs` worker threads.
pub fn sweep(config: &ExperimentConfig, out_dir: &Path, jobs: usize) -> Result<SweepOutcome> {
    config.validate()?;
    let instance = config.instance_spec()?.build()?;
    sweep_with(config, out_dir, jobs, |cell| run_cell(&config.algorithm, &instance, &cell.env, cell.horizon, cell.seed))
}

#[derive(Default)]
struct CellAccumulator {
    label: String,
    regrets: Vec<f64>,
    curves: Vec<Vec<(usize, f64)>>,
}

/// As [`sweep`] with a caller-supplied trial runner. After the first failed
/// trial no new trials start; completed ones are still written, along with a
/// summary and plot over them, before the error is returned.
pub fn sweep_with<F>(config: &ExperimentConfig, out_dir: &Path, jobs: usize, runner: F) -> Result<SweepOutcome>
where
    F: Fn(&Cell) -> Result<Trace> + Sync,
{
    if jobs == 0 {
        return Err(BanditError::Config("jobs must be at least 1".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let cells = cells(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| BanditError::Config(format!("thread pool: {e}")))?;
    let algorithm = config.algorithm.name.clone();
    let failed = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel::<(usize, Result<Trace>)>();

    let mut outcome = SweepOutcome::default();
    let mut groups: BTreeMap<(usize, usize), CellAccumulator> = BTreeMap::new();
    let mut first_error: Option<BanditError> = None;

    std::thread::scope(|scope| {
        let cells = &cells;
        let failed = &failed;
        let runner = &runner;
        scope.spawn(move || {
            pool.install(|| {
                (0..cells.len()).into_par_iter().for_each_with(tx, |tx, i| {
                    if failed.load(Ordering::SeqCst) {
                        return;
                    }
                    let result = runner(&cells[i]);
                    if result.is_err() {
                        failed.store(true, Ordering::SeqCst);
                    }
                    let _ = tx.send((i, result));
                });
            });
        });

        for (i, result) in rx {
            let cell = &cells[i];
            let trace = match result {
                Ok(t) => t,
                Err(e) => {
                    first_error.get_or_insert(e);
                    continue;
                }
            };
            let label = cell.env.label();
            let path = out_dir.join(trace_file_name(&algorithm, &label, cell.horizon, cell.seed));
            if let Err(e) = write_trace_file(&trace, &path) {
                failed.store(true, Ordering::SeqCst);
                first_error.get_or_insert(e);
                continue;
            }
            outcome.trace_files.push(path);
            let acc = groups.entry((cell.env_index, cell.horizon)).or_default();
            acc.label = label;
            acc.regrets.push(headline_regret(&trace));
            acc.curves.push(sample_curve(&trace));
        }
    });

    outcome.trace_files.sort();
    let mut bands = Vec::new();
    for ((_, horizon), acc) in &groups {
        outcome.summary.push(SummaryRow::from_regrets(&algorithm, &acc.label, *horizon, &acc.regrets));
        bands.push(RegretBand::from_curves(&format!("{algorithm} {} T={horizon}", acc.label), &acc.curves));
    }
    let mut buf = Vec::new();
    write_summary(&outcome.summary, &mut buf)?;
    write_atomic(&out_dir.join("summary.csv"), &buf)?;
    write_atomic(&out_dir.join("regret.svg"), render_svg(&bands).as_bytes())?;

    match first_error {
        Some(e) => Err(e),
        None => Ok(outcome),
    }
}
