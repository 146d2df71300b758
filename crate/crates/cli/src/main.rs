//! `chsw`: sliced Wasserstein distances, flows, MDS, sampling and benchmarks
//! on Cartan-Hadamard manifolds.

mod cloud;
mod commands;
mod config;
mod error;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "chsw", version, about)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random stream; overrides the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Result file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the sliced distance between two point clouds.
    Distance,
    /// Run a particle gradient flow toward a target cloud.
    Flow,
    /// Embed a distance matrix in the hyperboloid.
    Mds,
    /// Draw a point cloud from a sampler.
    Sample,
    /// Time the estimator over a grid and print CSV.
    Bench,
}

fn require_config(cli: &Cli) -> CliResult<(&Path, PathBuf)> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::schema("this subcommand needs --config"))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((path, base))
}

fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Distance => {
            let (path, base) = require_config(cli)?;
            commands::distance(&config::load(path)?, &base, cli.seed, out)
        }
        Command::Flow => {
            let (path, base) = require_config(cli)?;
            commands::flow(&config::load(path)?, &base, cli.seed, out)
        }
        Command::Mds => {
            let (path, base) = require_config(cli)?;
            commands::mds(&config::load(path)?, &base, cli.seed, out)
        }
        Command::Sample => {
            let (path, base) = require_config(cli)?;
            commands::sample(&config::load(path)?, &base, cli.seed, out)
        }
        Command::Bench => {
            let cfg = match &cli.config {
                Some(p) => config::load(p)?,
                None => config::BenchConfig::default(),
            };
            commands::bench(&cfg, cli.seed, out)
        }
    }
}

fn execute(cli: &Cli) -> CliResult<()> {
    let mut out: Box<dyn Write + Send> = match &cli.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    };
    let result = match cli.threads {
        Some(0) => Err(CliError::schema("--threads must be positive")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::schema(e.to_string()))?;
            pool.install(|| run(cli, &mut out))
        }
        None => run(cli, &mut out),
    };
    out.flush().map_err(|e| CliError::io("<output>", e))?;
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
