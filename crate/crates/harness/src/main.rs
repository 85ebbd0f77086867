use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ncvx_core::datagen::{CovarianceSpec, GeneratorSpec, LabelModel, NoiseSpec};
use ncvx_core::optim::{Algorithm, RunContext};
use ncvx_harness::clock::WallClock;
use ncvx_harness::experiment::{execute_experiment, write_outcome, ExperimentConfig, GAP_FLOOR};
use ncvx_harness::io::{read_json, save_dataset_csv, save_trace_csv, write_json};
use ncvx_harness::landscape::{run_landscape, LandscapeConfig};
use ncvx_harness::reference::{reference_optimum_with, theorem_config, ReferenceOptimum};
use ncvx_harness::search::{grid_search_step, with_seed};

#[derive(Parser)]
#[command(name = "ncvx", version, about = "Non-convex M-estimation benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    /// Replace the base seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace the output directory of the configuration.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Replace the pass budget of the configuration.
    #[arg(long)]
    passes: Option<f64>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = &self.out_dir {
            cfg.output_dir = d.clone();
        }
        if let Some(p) = self.passes {
            cfg.passes = p;
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Classification,
    Regression,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it as CSV.
    Gen {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        /// λmax/λmin of the feature covariance.
        #[arg(long, default_value_t = 1.0)]
        cond: f64,
        /// λmin of the feature covariance.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        #[arg(long)]
        rotate: bool,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        theta_seed: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one algorithm of an experiment configuration.
    Fit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        algorithm: Algorithm,
        /// Fixed step; otherwise grid-searched or theorem default, per config.
        #[arg(long)]
        step: Option<f64>,
        /// Reference JSON (from `reference`) used to fill objective gaps.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a full experiment: reference, all algorithms, traces, summary.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Estimate landscape quantities and write a JSON report.
    Landscape {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Compute and store the reference optimum of an experiment.
    Reference {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn load_config(path: &PathBuf, overrides: &Overrides) -> anyhow::Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = read_json(path).with_context(|| format!("reading {}", path.display()))?;
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> anyhow::Result<PathBuf> {
    let dir = if cfg.output_dir.as_os_str().is_empty() { PathBuf::from(".") } else { cfg.output_dir.clone() };
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { family, n, p, cond, scale, rotate, delta, sigma, theta_seed, seed, out } => {
            let labels = match family {
                FamilyArg::Classification => LabelModel::Classification,
                FamilyArg::Regression => LabelModel::Regression { noise: NoiseSpec::new(delta, sigma)? },
            };
            let covariance = CovarianceSpec { p, cond_ratio: cond, scale, rotate, seed: theta_seed };
            let spec = GeneratorSpec { labels, covariance, theta_seed };
            let data = spec.generate(n, seed)?;
            save_dataset_csv(&data, &out)?;
            log::info!("wrote {} rows x {} features to {}", data.len(), data.dim(), out.display());
        }
        Command::Fit { config, algorithm, step, reference, timing, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            cfg.validate()?;
            let model = cfg.model()?;
            let data = cfg.dataset()?;
            let constraint = cfg.constraint();
            let index = cfg.algorithms.iter().position(|a| a.algorithm == algorithm).unwrap_or(0);
            let seed = cfg.algorithm_seed(index);
            let (_, schedule) = cfg.schedule(&model, &data)?;
            let explicit = cfg.algorithms.iter().find(|a| a.algorithm == algorithm).and_then(|a| a.config.clone());
            let mut template = match explicit {
                Some(c) => ncvx_harness::search::with_budget(&with_seed(&c, seed), data.len(), cfg.passes),
                None => theorem_config(algorithm, &schedule, constraint, data.len(), cfg.passes, seed),
            };
            if let Some(s) = step {
                template = template.with_step(s);
            } else if cfg.grid_search {
                let g = grid_search_step(&model, &data, &template, &cfg.step_grid, cfg.grid_budget(), seed)?;
                log::info!("grid search selected step {}", g.best_step);
                template = template.with_step(g.best_step);
            }
            let clock = WallClock::start();
            let ctx = if timing { RunContext::with_clock(&clock) } else { RunContext::default() };
            let mut trace = template.run(&model, &data, &ctx)?;
            if let Some(path) = reference {
                let r: ReferenceOptimum = read_json(&path)?;
                trace.fill_gaps(r.objective, GAP_FLOOR);
            }
            let dir = out_dir(&cfg)?;
            let path = dir.join(format!("fit_{algorithm}.csv"));
            save_trace_csv(&trace, &path)?;
            log::info!(
                "{algorithm}: objective {:.6e} after {:.2} passes, trace in {}",
                trace.objective,
                trace.passes(),
                path.display()
            );
        }
        Command::Sweep { config, timing, overrides } => {
            let mut cfg = load_config(&config, &overrides)?;
            cfg.record_wall_time |= timing;
            let dir = out_dir(&cfg)?;
            let mut outcome = execute_experiment(&cfg)?;
            write_outcome(&mut outcome, &dir)?;
            for r in &outcome.summary.runs {
                match (&r.error, r.final_gap) {
                    (Some(e), _) => log::warn!("{}: failed: {e}", r.algorithm),
                    (None, Some(g)) => log::info!("{}: step {:?}, final gap {g:.3e}", r.algorithm, r.step),
                    _ => {}
                }
            }
            log::info!("summary written to {}", dir.join("summary.json").display());
        }
        Command::Landscape { config, seed, out_dir } => {
            let mut cfg: LandscapeConfig = read_json(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let report = run_landscape(&cfg)?;
            let dir = out_dir.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("landscape.json");
            write_json(&report, &path)?;
            log::info!("landscape report written to {}", path.display());
        }
        Command::Reference { config, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            cfg.validate()?;
            if cfg.reference_passes < 1.0 {
                bail!("reference_passes must be at least 1");
            }
            let model = cfg.model()?;
            let data = cfg.dataset()?;
            let (smoothness, _) = cfg.schedule(&model, &data)?;
            let r = reference_optimum_with(&model, &data, &cfg.reference_settings(smoothness))?;
            let dir = out_dir(&cfg)?;
            let path = dir.join("reference.json");
            write_json(&r, &path)?;
            log::info!("reference objective {:.17e} written to {}", r.objective, path.display());
        }
    }
    Ok(())
}
