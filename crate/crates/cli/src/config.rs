//! Run parameters: built-in defaults, overridden by a TOML file, overridden
//! by command-line flags.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use mspp_core::bounds::BoundParams;
use mspp_core::env::{GeneratorKind, GeneratorSpec};
use mspp_core::planner::PlannerConfig;
use mspp_core::search::CostModel;
use mspp_core::{Algorithm, BenchParams, MAX_DIM};
use serde::{Deserialize, Serialize};

/// Where occupancy values come from while planning.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Occupancy tree built up front, exact values.
    #[default]
    Exact,
    /// Obstacle predicate only, values counted or sampled on demand.
    Sampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub depth: u32,
    pub eps: f64,
    pub gamma: f64,
    pub samples: u64,
    pub alpha: f64,
    pub weight: f64,
    /// Solution-region count in the failure bound.
    pub regions: f64,
    pub seed: u64,
    /// Number of consecutive seeds in a benchmark sweep.
    pub seeds: u64,
    pub mode: Mode,
    pub algorithms: Vec<Algorithm>,
    /// Benchmark dimensions; empty means `[dim]`.
    pub dims: Vec<usize>,
    pub density: f64,
    pub generator: GeneratorKind,
    pub budget: Option<u64>,
    pub n_min: u64,
    pub n_max: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = BenchParams::default();
        RunConfig {
            dim: bench.dim,
            depth: bench.depth,
            eps: bench.eps,
            gamma: bench.gamma,
            samples: bench.samples,
            alpha: bench.alpha,
            weight: bench.weight,
            regions: 1.0,
            seed: 0,
            seeds: 1,
            mode: Mode::Exact,
            algorithms: vec![Algorithm::MsppFn],
            dims: Vec::new(),
            density: bench.density,
            generator: bench.generator,
            budget: None,
            n_min: 1,
            n_max: 300,
        }
    }
}

/// Flags shared by every subcommand. Unset flags leave the configuration
/// untouched.
#[derive(Args, Clone, Debug, Default)]
pub struct CommonArgs {
    /// TOML file with any subset of the run parameters.
    #[arg(long, value_name = "FILE", global = true)]
    pub config: Option<std::path::PathBuf>,
    /// Write output here instead of standard output.
    #[arg(long, value_name = "FILE", global = true)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    /// Samples per occupancy estimate.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
    /// Window scale of the reduced graph.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Occupancy weight in the edge cost.
    #[arg(long, global = true)]
    pub weight: Option<f64>,
    #[arg(long, global = true)]
    pub regions: Option<f64>,
    /// Seed; falls back to `MSPP_SEED`, then to the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    pub mode: Option<Mode>,
    /// One or more algorithms, comma separated.
    #[arg(long = "algo", value_delimiter = ',', value_parser = parse_algorithm, global = true)]
    pub algorithms: Option<Vec<Algorithm>>,
    /// Obstacle density of generated maps.
    #[arg(long, global = true)]
    pub density: Option<f64>,
    /// `scatter`, `blobs` or `blobs:MIN,MAX`.
    #[arg(long, value_parser = parse_generator, global = true)]
    pub generator: Option<GeneratorKind>,
    /// Planner iteration cap.
    #[arg(long, global = true)]
    pub budget: Option<u64>,
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: mspp_core::Error| e.to_string())
}

pub fn parse_generator(s: &str) -> std::result::Result<GeneratorKind, String> {
    match s.split_once(':') {
        None if s == "scatter" => Ok(GeneratorKind::Scatter),
        None if s == "blobs" => Ok(GeneratorKind::Blobs {
            min_side: 1,
            max_side: 4,
        }),
        Some(("blobs", sides)) => {
            let (a, b) = sides.split_once(',').ok_or("expected blobs:MIN,MAX")?;
            let parse = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("blob side `{x}`: {e}"));
            Ok(GeneratorKind::Blobs {
                min_side: parse(a)?,
                max_side: parse(b)?,
            })
        }
        _ => Err(format!("unknown generator `{s}`")),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Defaults, then the file named by `--config`, then `MSPP_SEED`, then
    /// the flags.
    pub fn resolve(args: &CommonArgs, env_seed: Option<&str>) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        if let Some(s) = env_seed.filter(|_| args.seed.is_none()) {
            cfg.seed = s
                .trim()
                .parse()
                .with_context(|| format!("MSPP_SEED=`{s}` is not a seed"))?;
        }
        cfg.apply(args);
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, a: &CommonArgs) {
        macro_rules! set {
            ($($field:ident <- $flag:ident),*) => {
                $(if let Some(v) = a.$flag.clone() { self.$field = v; })*
            };
        }
        set!(dim <- dim, depth <- depth, eps <- eps, gamma <- gamma, samples <- samples,
             alpha <- alpha, weight <- weight, regions <- regions, seed <- seed, mode <- mode,
             algorithms <- algorithms, density <- density, generator <- generator);
        if a.budget.is_some() {
            self.budget = a.budget;
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!((1..=MAX_DIM).contains(&self.dim), "dim must lie in 1..={MAX_DIM}, got {}", self.dim);
        for &d in &self.dims {
            ensure!(
                (1..=MAX_DIM).contains(&d),
                "benchmark dim must lie in 1..={MAX_DIM}, got {d}"
            );
        }
        self.planner()?.validate()?;
        ensure!(
            self.gamma > 0.0 && self.gamma.is_finite(),
            "gamma must be positive, got {}",
            self.gamma
        );
        ensure!(self.samples > 0, "samples must be at least 1");
        ensure!(
            self.regions >= 1.0 && self.regions.is_finite(),
            "regions must be at least 1, got {}",
            self.regions
        );
        ensure!(self.seeds > 0, "seeds must be at least 1");
        ensure!(!self.algorithms.is_empty(), "no algorithm selected");
        ensure!(
            (0.0..=1.0).contains(&self.density),
            "density must lie in [0, 1], got {}",
            self.density
        );
        if let GeneratorKind::Blobs { min_side, max_side } = self.generator {
            ensure!(
                1 <= min_side && min_side <= max_side,
                "blob sides must satisfy 1 <= min <= max, got {min_side}..{max_side}"
            );
        }
        if self.budget == Some(0) {
            bail!("budget must be at least 1");
        }
        ensure!(
            1 <= self.n_min && self.n_min <= self.n_max,
            "sample range must satisfy 1 <= n-min <= n-max, got {}..{}",
            self.n_min,
            self.n_max
        );
        Ok(())
    }

    pub fn planner(&self) -> Result<PlannerConfig> {
        Ok(PlannerConfig {
            eps: self.eps,
            alpha: self.alpha,
            cost: CostModel::new(self.weight)?,
            budget: self.budget,
            ..PlannerConfig::default()
        })
    }

    pub fn bound_params(&self) -> BoundParams {
        BoundParams {
            depth: self.depth,
            dim: self.dim,
            eps: self.eps,
            gamma: self.gamma,
            samples: self.n_min,
            regions: self.regions,
        }
    }

    pub fn bench_params(&self, dim: usize) -> BenchParams {
        BenchParams {
            dim,
            depth: self.depth,
            density: self.density,
            generator: self.generator,
            eps: self.eps,
            alpha: self.alpha,
            weight: self.weight,
            gamma: self.gamma,
            samples: self.samples,
            budget: self.budget,
        }
    }

    pub fn generator_spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            kind: self.generator,
            ..GeneratorSpec::new(self.dim, self.depth, self.density, self.seed)
        }
    }

    pub fn bench_dims(&self) -> Vec<usize> {
        if self.dims.is_empty() {
            vec![self.dim]
        } else {
            self.dims.clone()
        }
    }
}
