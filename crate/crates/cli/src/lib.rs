//! Command-line driver for the squeezed-state Bayesian estimation library.

pub mod config;
pub mod error;
pub mod output;
pub mod scenarios;
pub mod svg;

use std::env;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::Scenario;
use error::{CliError, CliResult};
use output::{write_manifest, Output, RunInfo};

#[derive(Debug, Parser)]
#[command(
    name = "sqbayes",
    version,
    about = "Adaptive Bayesian phase estimation with spin-squeezed states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config, or a manifest.toml from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $SQBAYES_OUT_ROOT/<subcommand>).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed; overrides the config value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the trial (or run) count.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Skip SVG figures.
    #[arg(long, global = true)]
    pub no_svg: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Adaptive phase estimation against a fixed unknown phase.
    Phase,
    /// Precision under mis-set rotation angle or twisting time.
    Sweep,
    /// Adaptive gravimetry with a growing interrogation time.
    Gravimetry,
    /// Closed-loop optical clock stability.
    Clock,
    /// Conventional fringe-fitting baseline.
    Fringe,
    /// Generator self-check for the noise colors.
    NoiseCheck,
}

fn default_out(name: &str) -> PathBuf {
    env::var_os("SQBAYES_OUT_ROOT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("sqbayes-out"))
        .join(name)
}

fn execute<S: Scenario>(global: &GlobalArgs) -> CliResult<PathBuf> {
    let mut scenario: S = config::load(global.config.as_deref())?;
    if let Some(seed) = global.seed {
        *scenario.seed_mut() = Some(seed);
    }
    if let Some(t) = global.trials {
        match scenario.trials_mut() {
            Some(slot) => *slot = t,
            None => log::warn!("--trials has no effect on `{}`", S::NAME),
        }
    }
    scenario.materialize()?;
    let seed = scenario.seed_mut().ok_or_else(|| {
        CliError::config("`seed`: required (set it in the config or pass --seed)")
    })?;
    let dir = global.out.clone().unwrap_or_else(|| default_out(S::NAME));
    let mut out = Output::create(&dir, !global.no_svg)?;
    let start = Instant::now();
    log::info!(
        "running `{}` with seed {seed} into {}",
        S::NAME,
        dir.display()
    );
    scenario.run(seed, &mut out)?;
    let mut outputs = out.files().to_vec();
    outputs.push("manifest.toml".to_string());
    let info = RunInfo {
        subcommand: S::NAME.to_string(),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs,
        duration_s: start.elapsed().as_secs_f64(),
    };
    write_manifest(&mut out, &info, &scenario)?;
    Ok(dir)
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::config("`--threads`: must be >= 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("`--threads`: {e}")))
}

/// Runs a parsed command line and returns the output directory.
pub fn run(cli: &Cli) -> CliResult<PathBuf> {
    init_threads(cli.global.threads)?;
    match cli.command {
        Command::Phase => execute::<scenarios::PhaseRun>(&cli.global),
        Command::Sweep => execute::<scenarios::SweepRun>(&cli.global),
        Command::Gravimetry => execute::<scenarios::GravimetryRun>(&cli.global),
        Command::Clock => execute::<scenarios::ClockRun>(&cli.global),
        Command::Fringe => execute::<scenarios::FringeRun>(&cli.global),
        Command::NoiseCheck => execute::<scenarios::NoiseCheckRun>(&cli.global),
    }
}
