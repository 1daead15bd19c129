use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use banditlab::algo::Preset;
use banditlab::design::{beta_t, exploration_design, instance_constant_c, solve_op};
use banditlab::error::{BanditError, Result};
use banditlab::harness::{self, AlgorithmConfig, ExperimentConfig, InstanceSpec};
use banditlab::linalg::gram;
use banditlab::robust::CatoniParams;

#[derive(Parser)]
#[command(name = "banditlab", version, about = "Linear-bandit simulation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trial and write its trace CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Trace path; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run seeds × horizons × environments and write traces, summary.csv and regret.svg.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory; defaults to the config's output_dir, else "out".
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a design program and print weights and certificates as CSV.
    Design {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, default_value_t = 1024.0)]
        t: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Clipped Catoni estimate of the samples in a file, one per line.
    Catoni {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
        clip: String,
    },
    /// Lower-bound construction from REOLB reference runs.
    Lowerbound {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "T")]
        horizon: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    /// OP(t, Δ) with the instance's true gaps.
    Op,
    /// Instance constant c(X, θ).
    C,
    /// Exploration design over all arms with κ = 1/√t.
    Expl,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let trace = harness::run_experiment(&cfg, seed)?;
            match out {
                Some(path) => harness::write_trace_file(&trace, &path),
                None => harness::write_trace(&trace, std::io::stdout().lock()),
            }
        }
        Command::Sweep { config, jobs, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let dir = out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let outcome = harness::sweep(&cfg, &dir, jobs)?;
            harness::write_summary(&outcome.summary, std::io::stdout().lock())
        }
        Command::Design { instance, what, t, delta, scale } => design(&instance, what, t, delta, scale),
        Command::Catoni { file, alpha, clip } => {
            let (lo, hi) = parse_clip(&clip)?;
            let text = std::fs::read_to_string(&file)?;
            let samples = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(|l| l.parse::<f64>().map_err(|_| BanditError::Config(format!("bad sample '{l}'"))))
                .collect::<Result<Vec<_>>>()?;
            let value = CatoniParams::new(alpha, lo, hi)?.estimate(&samples)?;
            println!("{value}");
            Ok(())
        }
        Command::Lowerbound { instance, gamma, horizon, runs, delta } => {
            let inst = InstanceSpec::load(&instance)?.build()?;
            let algo = AlgorithmConfig {
                name: "reolb".into(),
                delta,
                preset: Preset::Demo,
                constant_scale: None,
                horizon,
                blackbox: "ghp".into(),
            };
            let r = harness::lowerbound_report(&inst, &algo, gamma, horizon, runs)?;
            let p = &r.pair;
            let mut w = csv_out();
            row(&mut w, "intervals", "", p.s as f64)?;
            for (i, len) in p.intervals.iter().enumerate() {
                row(&mut w, "interval_length", &(i + 1).to_string(), *len as f64)?;
            }
            row(&mut w, "switch_interval", "", p.switch_interval as f64)?;
            row(&mut w, "switch_round", "", p.switch_round() as f64)?;
            row(&mut w, "x_prime", "", p.x_prime as f64)?;
            row(&mut w, "x_star", "", p.x_star as f64)?;
            for (i, v) in p.theta_prime.iter().enumerate() {
                row(&mut w, "theta_prime", &i.to_string(), *v)?;
            }
            for (i, c) in r.counts.iter().enumerate() {
                row(&mut w, "expected_pulls", &i.to_string(), *c)?;
            }
            row(&mut w, "V", "", p.v)?;
            row(&mut w, "trajectory_kl", "", r.kl)?;
            row(&mut w, "kl_bound_64V", "", r.kl_bound)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn parse_clip(s: &str) -> Result<(f64, f64)> {
    let bad = || BanditError::Config(format!("--clip expects lo,hi, got '{s}'"));
    let (lo, hi) = s.split_once(',').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn csv_out() -> std::io::BufWriter<std::io::StdoutLock<'static>> {
    let mut w = std::io::BufWriter::new(std::io::stdout().lock());
    let _ = writeln!(w, "quantity,arm,value");
    w
}

fn row(w: &mut impl Write, quantity: &str, arm: &str, value: f64) -> Result<()> {
    writeln!(w, "{quantity},{arm},{value}")?;
    Ok(())
}

fn design(path: &Path, what: What, t: f64, delta: f64, scale: f64) -> Result<()> {
    let inst = InstanceSpec::load(path)?.build()?;
    if !(t >= 1.0) {
        return Err(BanditError::Config(format!("--t must be at least 1, got {t}")));
    }
    let mut w = csv_out();
    match what {
        What::Op => {
            let beta = beta_t(t, inst.n_arms(), delta, scale);
            let sol = solve_op(t, &inst.gaps, &inst.action_set, beta, 1e-8)?;
            for (i, p) in sol.p.weights().iter().enumerate() {
                row(&mut w, "weight", &i.to_string(), *p)?;
            }
            row(&mut w, "beta", "", sol.beta)?;
            row(&mut w, "objective", "", sol.objective)?;
            row(&mut w, "objective_bound", "", (inst.dim() as f64 * beta + 1.0) / t.sqrt())?;
            row(&mut w, "min_slack", "", sol.min_slack)?;
            row(&mut w, "max_violation", "", sol.max_violation)?;
        }
        What::C => {
            let sol = instance_constant_c(&inst, 1e-9)?;
            for (i, n) in sol.n.iter().enumerate() {
                row(&mut w, "allocation", &i.to_string(), *n)?;
            }
            row(&mut w, "c", "", sol.value)?;
            row(&mut w, "upper_bound_48d_over_delta_min", "", 48.0 * inst.dim() as f64 / inst.delta_min)?;
            row(&mut w, "max_violation", "", sol.max_violation)?;
        }
        What::Expl => {
            let all: Vec<usize> = (0..inst.n_arms()).collect();
            let q = exploration_design(&all, &inst.action_set, 1.0 / t.sqrt())?;
            let f = gram(q.weights(), inst.action_set.actions()).factor();
            let mut worst = 0.0f64;
            for x in inst.action_set.actions() {
                worst = worst.max(f.quad_norm(x)?);
            }
            for (i, p) in q.weights().iter().enumerate() {
                row(&mut w, "weight", &i.to_string(), *p)?;
            }
            row(&mut w, "max_norm_sq", "", worst)?;
            row(&mut w, "bound_2d", "", 2.0 * inst.dim() as f64)?;
        }
    }
    w.flush()?;
    Ok(())
}
