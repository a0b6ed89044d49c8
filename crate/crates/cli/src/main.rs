//! `bdris`: run BD-RIS experiments from TOML configs.
//!
//! Exit status 0 on success, 1 for config or usage faults (one line on
//! stderr), 2 for runtime faults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bdris_core::harness::{apply_overrides, load_config, run, HarnessError, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bdris", version, about = "BD-RIS experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write its CSV outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Master seed, overriding the config (at most 2^63 - 1).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for independent trials; use 1 for comparable timings.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Omit wall-time columns so reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
        /// Fail with status 2 if any optimizer run does not converge.
        #[arg(long)]
        strict: bool,
    },
    /// Check a config and print it with every default filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn fail(err: &HarnessError) -> ExitCode {
    eprintln!("{err}");
    ExitCode::from(err.exit_code() as u8)
}

fn resolve(path: &Path, opts: &RunOptions) -> Result<bdris_core::harness::ExperimentConfig, HarnessError> {
    let config = load_config(path).map_err(HarnessError::Config)?;
    apply_overrides(config, opts, &path.display().to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Validate { config } => match resolve(&config, &RunOptions::default()) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
        Command::Run { config, seed, out_dir, threads, no_timing, strict } => {
            let opts = RunOptions { seed, out_dir, threads, no_timing, strict };
            let cfg = match resolve(&config, &opts) {
                Ok(cfg) => cfg,
                Err(e) => return fail(&e),
            };
            match run(cfg, &opts) {
                Ok(report) => {
                    for c in &report.checks {
                        println!("check {} {} {}", c.name, c.status(), c.detail);
                    }
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
