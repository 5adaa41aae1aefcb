use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use fscil_cli::gen_data::cmd_gen_data;
use fscil_cli::inspect::cmd_inspect_dist;
use fscil_cli::report::cmd_report;
use fscil_cli::run::cmd_run;
use fscil_cli::{CliError, CliResult, Progress, RunConfig};

#[derive(Parser)]
#[command(name = "fscil", version, about = "Few-shot class-incremental prompt-tuning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replace the configured seed list with this single seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for the job grid.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Suppress progress output on standard error.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic benchmark as feature files, one directory per seed.
    GenData(Common),
    /// Run every (method, seed, K) job of a configuration.
    Run(Common),
    /// Median table over seeds from one or more results files.
    Report {
        #[arg(required = true, value_name = "RESULTS")]
        results: Vec<PathBuf>,
        /// Also write report.txt and curves.csv into this directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Print per-dimension moments of a class from a store or feature file.
    InspectDist {
        #[arg(value_name = "FILE")]
        path: PathBuf,
        #[arg(long)]
        class: u32,
        /// Comma-separated dimensions; all when omitted.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        /// Histogram bins for feature files.
        #[arg(long, default_value_t = 10)]
        bins: usize,
    },
}

fn load(common: &Common) -> CliResult<(RunConfig, PathBuf, Progress)> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::parse("", Path::new("."))?,
    };
    if let Some(seed) = common.seed {
        config.run.seeds = vec![seed];
    }
    if let Some(jobs) = common.jobs {
        config.run.jobs = jobs;
    }
    if let Some(out) = &common.out {
        config.run.out = Some(out.clone());
    }
    config.validate()?;
    let out = config
        .run
        .out
        .clone()
        .ok_or_else(|| CliError::config(anyhow!("no output directory: pass --out or set run.out")))?;
    Ok((config, out, Progress { quiet: common.quiet }))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenData(common) => {
            let (config, out, progress) = load(&common)?;
            cmd_gen_data(&config, &out, progress)
        }
        Command::Run(common) => {
            let (config, out, progress) = load(&common)?;
            cmd_run(&config, &out, progress)
        }
        Command::Report { results, out, quiet: _ } => {
            print!("{}", cmd_report(&results, out.as_deref())?);
            Ok(())
        }
        Command::InspectDist { path, class, dims, bins } => {
            print!("{}", cmd_inspect_dist(&path, class, &dims, bins)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.status.code())
        }
    }
}
