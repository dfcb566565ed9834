//! Command-line driver for the critical branching laboratory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use critlab::exec::{init_thread_pool, resolve_threads, Execution};
use critlab::harness::commands::{cmd_rates, cmd_report, cmd_simulate, cmd_solve, cmd_verify};
use critlab::harness::criteria::SuiteContext;
use critlab::harness::{exit, ConfigError, ExperimentConfig, HarnessError};

#[derive(Parser, Debug)]
#[command(name = "critlab", version, about = "Critical Markov branching processes with regularly varying mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Run only the criterion with this id (e.g. `C7`) or formula tag (e.g. `1.23`).
    #[arg(long, global = true)]
    only: Option<String>,

    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; falls back to CRITLAB_THREADS, then the machine default.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Engine sweeps of R(t;s), G(t;s) and optionally P_ij(t).
    Solve,
    /// Monte Carlo survival and mean-size estimates.
    Simulate,
    /// The acceptance suite.
    Verify,
    /// Survival residuals and rate fit.
    Rates,
    /// Summarize the reports found in the output directory.
    Report,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| ConfigError::new("--config", "this command needs a configuration file"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.map(|c| c.out_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn announce(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: &Cli) -> Result<i32, HarnessError> {
    let threads = resolve_threads(cli.threads).map_err(|e| ConfigError::new("--threads", e.to_string()))?;
    init_thread_pool(threads)?;
    let exec = Execution::default();
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Solve => {
            let cfg = load(cli)?;
            announce(&cmd_solve(&cfg, &out_dir(cli, Some(&cfg)))?);
        }
        Command::Simulate => {
            let cfg = load(cli)?;
            announce(&cmd_simulate(&cfg, &out_dir(cli, Some(&cfg)), exec)?);
        }
        Command::Rates => {
            let cfg = load(cli)?;
            announce(&cmd_rates(&cfg, &out_dir(cli, Some(&cfg)), &mut stdout)?);
        }
        Command::Verify => {
            let cfg = match &cli.config {
                Some(_) => Some(load(cli)?),
                None => None,
            };
            let mut ctx = SuiteContext {
                exec,
                ..SuiteContext::default()
            };
            if let Some(seed) = cli.seed.or(cfg.as_ref().and_then(|c| c.seed)) {
                ctx.seed = seed;
            }
            let summary = cmd_verify(&ctx, cli.only.as_deref(), &out_dir(cli, cfg.as_ref()), &mut stdout)?;
            let failed = summary.results.iter().filter(|r| !r.passed).count();
            println!("{} of {} criteria passed; rows in {}", summary.results.len() - failed, summary.results.len(), summary.report.display());
            return Ok(summary.exit_code());
        }
        Command::Report => {
            let dir = out_dir(cli, None);
            let path = cmd_report(Path::new(&dir), &mut stdout)?;
            announce(&[path]);
        }
    }
    Ok(exit::PASS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("critlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
