//! The `mspp` command line: plan single instances, run benchmark sweeps,
//! tabulate the sampling failure bound, and generate maps.
//!
//! [`run`] takes the argument list and output streams explicitly so the
//! commands can be driven in-process.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

pub use commands::{ExitCode, BENCH_HEADER};
pub use config::{CommonArgs, Mode, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "mspp", version, about = "Multiscale path planning on dyadic occupancy trees")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Plan one path and print it, one node per line.
    Plan {
        /// Occupancy map file.
        #[arg(long, conflicts_with = "predicate", required_unless_present = "predicate")]
        map: Option<PathBuf>,
        /// Analytic world: `spheres:..`, `checkerboard:P` or `wall:A,X,G`.
        #[arg(long)]
        predicate: Option<String>,
        /// Start point, comma separated; defaults to the first corner cell.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        start: Option<Vec<f64>>,
        /// Goal point; defaults to the opposite corner cell.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        goal: Option<Vec<f64>>,
    },
    /// Benchmark sweep over dimensions, seeds and algorithms, as CSV.
    Bench {
        /// Dimensions to sweep, comma separated.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        /// Number of consecutive seeds starting at `--seed`.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Failure bound of the sampling planner for a range of sample counts.
    Bound {
        #[arg(long)]
        n_min: Option<u64>,
        #[arg(long)]
        n_max: Option<u64>,
    },
    /// Generate a random map, or describe an existing one.
    GenMap {
        /// Print a summary of this map file instead of generating one.
        #[arg(long, value_name = "FILE")]
        inspect: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code; diagnostics go to `err`.
pub fn run<I, T>(args: I, env_seed: Option<&str>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() {
                ExitCode::Usage as i32
            } else {
                ExitCode::Success as i32
            };
        }
    };
    match execute(&cli, env_seed, out) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            ExitCode::Usage as i32
        }
    }
}

fn execute(cli: &Cli, env_seed: Option<&str>, stdout: &mut dyn Write) -> Result<ExitCode> {
    let mut cfg = RunConfig::resolve(&cli.common, env_seed)?;
    match &cli.command {
        Command::Bench { dims, seeds } => {
            if let Some(d) = dims {
                cfg.dims = d.clone();
            }
            if let Some(s) = seeds {
                cfg.seeds = *s;
            }
        }
        Command::Bound { n_min, n_max } => {
            cfg.n_min = n_min.unwrap_or(cfg.n_min);
            cfg.n_max = n_max.unwrap_or(cfg.n_max);
        }
        _ => {}
    }
    cfg.validate()?;

    let mut file;
    let out: &mut dyn Write = match &cli.common.out {
        Some(path) => {
            file = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
            &mut file
        }
        None => stdout,
    };
    let code = match &cli.command {
        Command::Plan {
            map,
            predicate,
            start,
            goal,
        } => {
            let input = match (map, predicate) {
                (Some(m), None) => commands::PlanInput::Map(m.clone()),
                (None, Some(p)) => commands::PlanInput::Predicate(p.clone()),
                _ => bail!("give exactly one of --map and --predicate"),
            };
            commands::plan(&cfg, &input, start.as_deref(), goal.as_deref(), out)?
        }
        Command::Bench { .. } => commands::bench(&cfg, out)?,
        Command::Bound { .. } => commands::bound(&cfg, out)?,
        Command::GenMap { inspect: Some(path) } => commands::inspect_map(path, out)?,
        Command::GenMap { inspect: None } => commands::gen_map(&cfg, out)?,
    };
    out.flush()?;
    Ok(code)
}
