//! Config-driven experiment runner for the `mma` library.

pub mod config;
pub mod run;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
pub use run::{run_experiment, RunDir};

#[derive(Debug, Parser)]
#[command(name = "mma", version, about = "Max-margin adversarial training experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Global seed; overrides `seed` in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs everything on the main thread.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Train the model zoo and write checkpoints.
    Train,
    /// Train or load the zoo and run the combined evaluation.
    Evaluate,
    /// Estimate per-example margins of every model.
    Margins,
    /// Run the numerical theory checks.
    TheoryCheck,
}

fn configure_jobs(jobs: Option<usize>) -> Result<()> {
    match jobs {
        Some(0) => anyhow::bail!("--jobs must be positive"),
        Some(1) => mma::exec::force_serial(true),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?,
        None => {}
    }
    Ok(())
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>, default: &str) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| {
            let stem = cli
                .config
                .as_ref()
                .and_then(|p| p.file_stem())
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| default.into());
            PathBuf::from("runs").join(stem)
        })
}

/// Execute a parsed command line; the returned code is the process exit
/// status.
pub fn execute(cli: &Cli) -> Result<i32> {
    configure_jobs(cli.jobs)?;
    let cfg = match &cli.config {
        Some(p) => {
            let mut c = load_config(p)?;
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            Some(c)
        }
        None if cli.command == Command::TheoryCheck => None,
        None => anyhow::bail!("--config is required for this command"),
    };
    if cli.command == Command::TheoryCheck {
        let mut t = cfg.as_ref().and_then(|c| c.theory.clone()).unwrap_or_default();
        if let Some(s) = cli.seed {
            t.seed = s;
        }
        let dir = if cli.out.is_some() || cfg.is_some() {
            Some(RunDir::create(&out_dir(cli, cfg.as_ref(), "theory"))?)
        } else {
            None
        };
        let (ok, _) = run::cmd_theory(&t, dir.as_ref())?;
        return Ok(if ok { 0 } else { 1 });
    }
    let cfg = cfg.expect("config present");
    let dir = RunDir::create(&out_dir(cli, Some(&cfg), "run"))?;
    eprintln!("writing to {}", dir.path().display());
    match cli.command {
        Command::Train => run::cmd_train(&cfg, &dir)?,
        Command::Evaluate => {
            let out = run_experiment(&cfg, &dir)?;
            let mut buf = Vec::new();
            out.report.write_csv(&mut buf)?;
            print!("{}", String::from_utf8_lossy(&buf));
        }
        Command::Margins => {
            run::cmd_margins(&cfg, &dir)?;
        }
        Command::TheoryCheck => unreachable!(),
    }
    Ok(0)
}
