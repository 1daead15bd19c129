//! Configs, trial runner, sweeps and file output.

pub mod config;
pub mod diagnostics;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{AlgorithmConfig, ExperimentConfig, InstanceSpec, SweepConfig, CONFIG_VERSION};
pub use diagnostics::{lowerbound_report, LowerBoundReport};
pub use output::{
    headline_regret, quantile_sorted, read_summary, read_trace, read_trace_file, render_svg, sample_curve,
    trace_to_string, write_summary, write_trace, write_trace_file, RegretBand, SummaryRow, SUMMARY_HEADER,
    TRACE_HEADER,
};
pub use run::{build_learner, run_cell, run_experiment, simulate, simulate_with};
pub use sweep::{cells, sweep, sweep_with, trace_file_name, Cell, SweepOutcome};
