//! Command line surface of the `pvlab` binary.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::{self, AugmentConfig, Config, FitConfig, GenerateConfig, OracleConfig, VerifyConfig};
use crate::error::{IoError, RunError};
use crate::output::OutputDir;

#[derive(Debug, Parser)]
#[command(name = "pvlab", version, about = "Pseudo-video construction and Markov-order reconstruction-error experiments")]
pub struct Cli {
    /// JSON configuration; the command's defaults are used when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "pvlab-out")]
    pub out: PathBuf,
    /// Overrides the configuration's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "PVLAB_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Turn a directory of PGM/PPM images into .pvid pseudo videos.
    Augment,
    /// Minimum reconstruction error along nested contexts.
    Oracle,
    /// Fit predictors on sampled chains and compare them with the oracle.
    Fit,
    /// Context-window autoregressive generation.
    Generate,
    /// Run the full consistency suite and print a PASS/FAIL table.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Augment => "augment",
            Command::Oracle => "oracle",
            Command::Fit => "fit",
            Command::Generate => "generate",
            Command::Verify => "verify",
        }
    }
}

fn load<C: Config>(cli: &Cli) -> Result<C, RunError> {
    match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
            config::parse(&text, cli.seed)
        }
        None => {
            let mut cfg = C::default();
            config::resolve(&mut cfg, cli.seed)?;
            Ok(cfg)
        }
    }
}

fn execute<C: Config>(cli: &Cli, command: fn(&C, &mut OutputDir) -> Result<(), RunError>) -> Result<(), RunError> {
    let cfg: C = load(cli)?;
    let mut out = OutputDir::create(&cli.out, cli.command.name(), &config::to_json(&cfg))?;
    let result = command(&cfg, &mut out);
    let manifest = out.finish()?;
    log::info!("{} outputs in {} ({:.2} s)", manifest.outputs.len(), cli.out.display(), manifest.wall_clock_seconds);
    result
}

/// Runs the parsed command and returns its exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = (|| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(RunError::Config("--threads must be positive".into()));
            }
            pool = pool.num_threads(n);
        }
        let pool = pool.build().map_err(|e| RunError::Config(e.to_string()))?;
        pool.install(|| match cli.command {
            Command::Augment => execute::<AugmentConfig>(cli, commands::augment),
            Command::Oracle => execute::<OracleConfig>(cli, commands::oracle),
            Command::Fit => execute::<FitConfig>(cli, commands::fit),
            Command::Generate => execute::<GenerateConfig>(cli, commands::generate),
            Command::Verify => execute::<VerifyConfig>(cli, commands::verify),
        })
    })();
    match result {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    }
}
