//! Python bindings. Errors map to `ValueError` (bad input or config),
//! `OSError` (files) and `ArithmeticError` (numerical failure).

use std::path::PathBuf;

use pyo3::exceptions::{PyArithmeticError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use banditlab::algo::Preset;
use banditlab::env::EnvSpec;
use banditlab::error::BanditError;
use banditlab::harness::{self, AlgorithmConfig, ExperimentConfig};
use banditlab::{design, env, robust};

fn py_err(e: BanditError) -> PyErr {
    match e {
        BanditError::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.exit_code() == 3 => PyArithmeticError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn action_set(actions: Vec<Vec<f64>>) -> PyResult<banditlab::ActionSet> {
    banditlab::validate_action_set(actions).map_err(py_err)
}

fn parse_preset(preset: &str) -> PyResult<Preset> {
    match preset {
        "demo" => Ok(Preset::Demo),
        "paper" => Ok(Preset::Paper),
        other => Err(PyValueError::new_err(format!("unknown preset '{other}'"))),
    }
}

/// A validated action set with a fixed loss vector θ.
#[pyclass(name = "Instance", frozen, skip_from_py_object)]
struct PyInstance {
    inner: banditlab::BanditInstance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(actions: Vec<Vec<f64>>, theta: Vec<f64>) -> PyResult<Self> {
        let inner = banditlab::make_instance(action_set(actions)?, theta).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn actions(&self) -> Vec<Vec<f64>> {
        self.inner.action_set.actions().to_vec()
    }

    #[getter]
    fn theta(&self) -> Vec<f64> {
        self.inner.theta.clone()
    }

    #[getter]
    fn means(&self) -> Vec<f64> {
        self.inner.means.clone()
    }

    #[getter]
    fn gaps(&self) -> Vec<f64> {
        self.inner.gaps.clone()
    }

    #[getter]
    fn optimal_index(&self) -> usize {
        self.inner.optimal_index
    }

    #[getter]
    fn delta_min(&self) -> f64 {
        self.inner.delta_min
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn __len__(&self) -> usize {
        self.inner.n_arms()
    }

    fn __repr__(&self) -> String {
        format!("Instance(d={}, arms={}, x*={})", self.inner.dim(), self.inner.n_arms(), self.inner.optimal_index)
    }
}

/// Per-round records of one trial, exposed column-wise.
#[pyclass(name = "Trace", frozen)]
struct PyTrace {
    inner: banditlab::trace::Trace,
}

#[pymethods]
impl PyTrace {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn arms(&self) -> Vec<usize> {
        self.inner.arms()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.y).collect()
    }

    #[getter]
    fn phase(&self) -> Vec<u8> {
        self.inner.records.iter().map(|r| r.phase).collect()
    }

    #[getter]
    fn block_or_epoch(&self) -> Vec<usize> {
        self.inner.records.iter().map(|r| r.block_or_epoch).collect()
    }

    /// `None` entries in adversarial environments.
    #[getter]
    fn pseudo_regret_cum(&self) -> Vec<Option<f64>> {
        self.inner.records.iter().map(|r| r.pseudo_regret_cum).collect()
    }

    #[getter]
    fn adv_regret_cum(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.adv_regret_cum).collect()
    }

    /// Pseudo-regret when defined, else adversarial regret, at the last round.
    fn final_regret(&self) -> f64 {
        harness::headline_regret(&self.inner)
    }

    fn to_csv(&self) -> PyResult<String> {
        harness::trace_to_string(&self.inner).map_err(py_err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(Self { inner: harness::read_trace(text.as_bytes()).map_err(py_err)? })
    }
}

/// An experiment config, from a TOML file or string.
#[pyclass(name = "Experiment", frozen)]
struct PyExperiment {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyExperiment {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::load(&path).map_err(py_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, base=None))]
    fn from_toml(text: &str, base: Option<PathBuf>) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::parse(text, base.as_deref()).map_err(py_err)? })
    }

    #[getter]
    fn seeds(&self) -> Vec<u64> {
        self.inner.seeds.clone()
    }

    fn run(&self, py: Python<'_>, seed: u64) -> PyResult<PyTrace> {
        let trace = py.detach(|| harness::run_experiment(&self.inner, seed)).map_err(py_err)?;
        Ok(PyTrace { inner: trace })
    }

    /// Writes traces, summary.csv and regret.svg; returns the summary rows.
    #[pyo3(signature = (out_dir, jobs=1))]
    fn sweep<'py>(&self, py: Python<'py>, out_dir: PathBuf, jobs: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let outcome = py.detach(|| harness::sweep(&self.inner, &out_dir, jobs)).map_err(py_err)?;
        outcome
            .summary
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("algorithm", &r.algorithm)?;
                d.set_item("env", &r.env)?;
                d.set_item("T", r.horizon)?;
                d.set_item("seed_count", r.seed_count)?;
                d.set_item("regret_median", r.median)?;
                d.set_item("regret_q10", r.q10)?;
                d.set_item("regret_q90", r.q90)?;
                Ok(d)
            })
            .collect()
    }
}

/// One trial of `algorithm` ("reolb", "botw" or "ghp") on `instance`.
/// `env` is a TOML table body such as `kind = "adversarial"\ngenerator = "switch"`.
#[pyfunction]
#[pyo3(signature = (algorithm, instance, horizon, seed, env=None, delta=0.1, preset="demo", constant_scale=None))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    algorithm: &str,
    instance: &PyInstance,
    horizon: usize,
    seed: u64,
    env: Option<&str>,
    delta: f64,
    preset: &str,
    constant_scale: Option<f64>,
) -> PyResult<PyTrace> {
    let spec: EnvSpec = match env {
        Some(text) => toml::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => EnvSpec::default(),
    };
    let algo = AlgorithmConfig {
        name: algorithm.into(),
        delta,
        preset: parse_preset(preset)?,
        constant_scale,
        horizon,
        blackbox: "ghp".into(),
    };
    let trace = py.detach(|| harness::run_cell(&algo, &instance.inner, &spec, horizon, seed)).map_err(py_err)?;
    Ok(PyTrace { inner: trace })
}

#[pyfunction]
#[pyo3(signature = (t, n_arms, delta, scale=1.0))]
fn beta_t(t: f64, n_arms: usize, delta: f64, scale: f64) -> f64 {
    design::beta_t(t, n_arms, delta, scale)
}

/// OP(t, Δ̂); returns a dict with the weights and feasibility certificates.
#[pyfunction]
#[pyo3(signature = (t, gaps, actions, beta, tol=1e-8))]
fn solve_op<'py>(
    py: Python<'py>,
    t: f64,
    gaps: Vec<f64>,
    actions: Vec<Vec<f64>>,
    beta: f64,
    tol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let x = action_set(actions)?;
    let sol = design::solve_op(t, &gaps, &x, beta, tol).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("p", sol.p.weights().to_vec())?;
    d.set_item("objective", sol.objective)?;
    d.set_item("beta", sol.beta)?;
    d.set_item("min_slack", sol.min_slack)?;
    d.set_item("max_violation", sol.max_violation)?;
    d.set_item("iterations", sol.iterations)?;
    Ok(d)
}

/// c(X, θ) and the optimal allocation N.
#[pyfunction]
#[pyo3(signature = (instance, tol=1e-9))]
fn instance_constant_c(instance: &PyInstance, tol: f64) -> PyResult<(f64, Vec<f64>)> {
    let sol = design::instance_constant_c(&instance.inner, tol).map_err(py_err)?;
    Ok((sol.value, sol.n))
}

/// q^{G,κ} over `subset` of `actions`.
#[pyfunction]
fn exploration_design(actions: Vec<Vec<f64>>, subset: Vec<usize>, kappa: f64) -> PyResult<Vec<f64>> {
    let x = action_set(actions)?;
    Ok(design::exploration_design(&subset, &x, kappa).map_err(py_err)?.weights().to_vec())
}

/// Clip_[lo,hi](Catoni_α(samples)).
#[pyfunction]
#[pyo3(signature = (samples, alpha, clip_lo=-1.0, clip_hi=1.0))]
fn catoni(samples: Vec<f64>, alpha: f64, clip_lo: f64, clip_hi: f64) -> PyResult<f64> {
    robust::CatoniParams::new(alpha, clip_lo, clip_hi).and_then(|c| c.estimate(&samples)).map_err(py_err)
}

#[pyfunction]
fn kl_bernoulli(p: f64, q: f64) -> PyResult<f64> {
    env::kl_bernoulli(p, q).map_err(py_err)
}

#[pyfunction]
fn interval_schedule(delta_min: f64, gamma: f64, horizon: usize) -> PyResult<Vec<usize>> {
    env::interval_schedule(delta_min, gamma, horizon).map_err(py_err)
}

/// Lower-bound pair from `runs` REOLB reference runs; returns a dict.
#[pyfunction]
#[pyo3(signature = (instance, gamma, horizon, runs=100, delta=0.1))]
fn lowerbound<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    gamma: f64,
    horizon: usize,
    runs: usize,
    delta: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let algo = AlgorithmConfig {
        name: "reolb".into(),
        delta,
        preset: Preset::Demo,
        constant_scale: None,
        horizon,
        blackbox: "ghp".into(),
    };
    let r = py.detach(|| harness::lowerbound_report(&instance.inner, &algo, gamma, horizon, runs)).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("intervals", r.pair.intervals.clone())?;
    d.set_item("switch_interval", r.pair.switch_interval)?;
    d.set_item("switch_round", r.pair.switch_round())?;
    d.set_item("x_prime", r.pair.x_prime)?;
    d.set_item("theta_prime", r.pair.theta_prime.clone())?;
    d.set_item("expected_pulls", r.counts)?;
    d.set_item("V", r.pair.v)?;
    d.set_item("trajectory_kl", r.kl)?;
    d.set_item("kl_bound", r.kl_bound)?;
    Ok(d)
}

#[pymodule(name = "banditlab")]
mod banditlab_module {
    #[pymodule_export]
    use super::{
        beta_t, catoni, exploration_design, instance_constant_c, interval_schedule, kl_bernoulli, lowerbound, simulate,
        solve_op, PyExperiment, PyInstance, PyTrace,
    };
}
