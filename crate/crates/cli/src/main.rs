use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use slowbond::harness::{emit, run_experiment, validate, ExperimentKind, ExperimentSpec};
use slowbond::lattice::{LatticeSpec, TimeScaleRegime};
use slowbond::measure::box_average_profile;
use slowbond::pde::{solve_continuous_heat, solve_discrete_heat, DEFAULT_FOURIER_CUTOFF};
use slowbond::simulate::{box_average_trajectories, ReplicaPlan};

#[derive(Parser)]
#[command(
    name = "slowbond",
    version,
    about = "Exclusion-process scaling experiments on a ring with slow bonds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment description file (TOML; same field names as the library).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the base seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs one trajectory and prints its box averages at each macro time.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Prints the reference solutions at each macro time.
    Pde {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Runs the exact-state-space certification suite.
    Oracle {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Runs the concentration-bound certification suite.
    Check {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Runs the full experiment and writes the convergence table.
    Experiment {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory for table.csv (and the plot).
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also writes a log-log plot of error against n.
        #[arg(long)]
        plot: bool,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    init_threads()?;
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate { cfg } => simulate(&load(&cfg)?),
        Command::Pde { cfg } => pde(&load(&cfg)?),
        Command::Oracle { cfg } => suite(with_kind(load(&cfg)?, ExperimentKind::OracleSuite)),
        Command::Check { cfg } => suite(with_kind(load(&cfg)?, ExperimentKind::AppendixSuite)),
        Command::Experiment { cfg, out, plot } => experiment(&load(&cfg)?, &out, plot),
    }
}

/// Sizes the global worker pool from SLOWBOND_THREADS when set.
fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SLOWBOND_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&t| t >= 1)
        .with_context(|| format!("SLOWBOND_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("worker pool already initialized")?;
    Ok(())
}

fn load(cfg: &ConfigArgs) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(&cfg.config)
        .with_context(|| format!("reading {}", cfg.config.display()))?;
    let mut spec = ExperimentSpec::from_toml(&text)
        .with_context(|| format!("parsing {}", cfg.config.display()))?;
    if let Some(seed) = cfg.seed {
        spec.base_seed = seed;
    }
    Ok(spec)
}

fn with_kind(mut spec: ExperimentSpec, kind: ExperimentKind) -> ExperimentSpec {
    spec.name = kind;
    spec
}

fn simulate(spec: &ExperimentSpec) -> Result<ExitCode> {
    if !spec.name.is_simulation() {
        bail!("simulate needs a simulation experiment kind, got {}", spec.name);
    }
    validate(spec)?;
    let &(n, k) = spec.sizes.first().expect("validated sizes are nonempty");
    let lattice = LatticeSpec::new(n, k, spec.alpha, spec.beta)?;
    let regime = match spec.theta {
        Some(theta) => TimeScaleRegime::subcritical(theta)?,
        None => TimeScaleRegime::Critical,
    };
    let profile = spec.profile.build()?;
    let plan = ReplicaPlan::new(1, spec.base_seed, regime)?;
    let traj = box_average_trajectories(&lattice, &profile, &plan, &spec.macro_times)?;
    println!("macro_time,box,average");
    for (ti, &t) in spec.macro_times.iter().enumerate() {
        for (b, avg) in traj[0][ti].iter().enumerate() {
            println!("{t},{b},{avg}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn pde(spec: &ExperimentSpec) -> Result<ExitCode> {
    let &(_, k) = spec.sizes.first().context("config lists no sizes")?;
    let profile = spec.profile.build()?;
    let frozen = box_average_profile(&profile, k)?;
    println!("macro_time,box,frozen,discrete_heat,continuous_heat");
    for &t in &spec.macro_times {
        let discrete = solve_discrete_heat(&frozen, spec.alpha, t)?;
        let field = solve_continuous_heat(&profile, spec.alpha, t, DEFAULT_FOURIER_CUTOFF)?;
        for i in 0..k {
            let u = i as f64 / k as f64;
            println!("{t},{i},{},{},{}", frozen[i], discrete[i], field.value_at(u)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs a certification suite and prints one PASS/FAIL line per check.
fn suite(spec: ExperimentSpec) -> Result<ExitCode> {
    validate(&spec)?;
    let table = run_experiment(&spec)?;
    let mut failures = 0usize;
    for row in table.rows() {
        let (ok, shown) = match row.observable.as_str() {
            "yau-gap" => (row.simulated <= 1e-4, row.simulated),
            "adjoint-gap" => (row.simulated <= 1e-9, row.simulated),
            "decomposition-residual" => (row.simulated <= 1e-8, row.simulated),
            "decomposition-remainder" => (row.simulated.is_finite(), row.simulated),
            "initial-entropy" => (row.simulated <= row.reference, row.simulated),
            // Appendix margins are slack left under each bound.
            _ => (row.simulated >= -1e-12, row.simulated),
        };
        if !ok {
            failures += 1;
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        let mode = if row.box_or_mode.is_empty() {
            String::new()
        } else {
            format!(" [{}]", row.box_or_mode)
        };
        println!(
            "{verdict} {}{} n={} k={} t={} value={:.6e}",
            row.observable, mode, row.n, row.k, row.macro_time, shown
        );
    }
    if failures == 0 {
        println!("all {} checks passed", table.rows().len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{failures} of {} checks failed", table.rows().len());
        Ok(ExitCode::FAILURE)
    }
}

fn experiment(spec: &ExperimentSpec, out: &std::path::Path, plot: bool) -> Result<ExitCode> {
    validate(spec)?;
    let table = run_experiment(spec)?;
    let written = emit(&table, out, plot)?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    println!("{} rows", table.rows().len());
    Ok(ExitCode::SUCCESS)
}
