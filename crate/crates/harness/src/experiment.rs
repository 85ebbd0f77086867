//! End-to-end benchmark runs: data, reference optimum, per-algorithm step
//! selection, traces and a JSON summary.

use std::path::{Path, PathBuf};

use ncvx_core::datagen::{GeneratorSpec, NoiseSpec};
use ncvx_core::losses::TukeyLoss;
use ncvx_core::optim::{Algorithm, AlgorithmConfig, BallConstraint, RunContext, TheoremSchedule, TrainTrace};
use ncvx_core::rng::derive_seed;
use ncvx_core::{DataSet, Family, LossModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clock::WallClock;
use crate::error::{HarnessError, Result};
use crate::io::{load_dataset, save_trace_csv, write_json, Format, LoadOptions};
use crate::reference::{
    reference_optimum_with, theorem_config, theorem_schedule, ReferenceOptimum, ReferenceSettings, ScheduleSettings,
    StepChoice,
};
use crate::search::{grid_search_step, paper_step_grid, with_budget, with_seed, GridSearch};
use crate::transform::{corrupt_targets, normalize_features};

/// Floor applied to objective gaps so they stay plottable on a log axis.
pub const GAP_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataConfig {
    Synthetic {
        spec: GeneratorSpec,
        n: usize,
        /// Derived from the experiment seed when absent.
        #[serde(default)]
        seed: Option<u64>,
    },
    File {
        path: PathBuf,
        format: Format,
        #[serde(default)]
        options: LoadOptions,
        #[serde(default)]
        normalize: bool,
    },
}

/// One algorithm to benchmark. Without `config` the theorem schedule is used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub config: Option<AlgorithmConfig>,
}

impl From<Algorithm> for AlgorithmSpec {
    fn from(algorithm: Algorithm) -> Self {
        Self { algorithm, config: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub family: Family,
    /// Tukey cutoff for regression.
    #[serde(default = "default_cutoff")]
    pub tukey_cutoff: f64,
    pub data: DataConfig,
    /// Extra target noise, applied after loading or generation.
    #[serde(default)]
    pub corruption: Option<NoiseSpec>,
    /// Ball radius `r`; unconstrained when absent.
    #[serde(default)]
    pub radius: Option<f64>,
    pub algorithms: Vec<AlgorithmSpec>,
    /// Budget of every benchmarked run.
    pub passes: f64,
    #[serde(default)]
    pub grid_search: bool,
    #[serde(default = "paper_step_grid")]
    pub step_grid: Vec<f64>,
    /// Budget of each grid cell; `passes` when absent.
    #[serde(default)]
    pub grid_passes: Option<f64>,
    #[serde(default = "default_reference_passes")]
    pub reference_passes: f64,
    #[serde(default)]
    pub schedule: ScheduleSettings,
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Fill `wall_ms`. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_wall_time: bool,
}

fn default_cutoff() -> f64 {
    TukeyLoss::DEFAULT_CUTOFF
}

fn default_reference_passes() -> f64 {
    1000.0
}

/// Seed stream identifiers below the experiment seed.
mod seeds {
    pub const DATA: u64 = 1;
    pub const CORRUPTION: u64 = 2;
    pub const REFERENCE: u64 = 3;
    pub const SMOOTHNESS: u64 = 4;
    pub const ALGORITHM_BASE: u64 = 16;
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(HarnessError::Config("at least one algorithm is required".into()));
        }
        for spec in &self.algorithms {
            if let Some(c) = &spec.config {
                if c.algorithm() != spec.algorithm {
                    return Err(HarnessError::Config(format!(
                        "configuration for {} is tagged {}",
                        spec.algorithm,
                        c.algorithm()
                    )));
                }
            }
        }
        if self.step_grid.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(HarnessError::Config("grid steps must be strictly positive".into()));
        }
        if self.grid_search && self.step_grid.is_empty() {
            return Err(HarnessError::Config("grid search enabled with an empty grid".into()));
        }
        if !(self.passes > 0.0 && self.passes.is_finite()) {
            return Err(HarnessError::Config(format!("pass budget must be positive, got {}", self.passes)));
        }
        if let DataConfig::Synthetic { spec, .. } = &self.data {
            if spec.labels.family() != self.family {
                return Err(HarnessError::Config("synthetic label model does not match the problem family".into()));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<LossModel> {
        Ok(match self.family {
            Family::Classification => LossModel::classification(),
            Family::Regression => LossModel::robust_regression(self.tukey_cutoff)?,
        })
    }

    pub fn constraint(&self) -> BallConstraint {
        self.radius.into()
    }

    /// Builds, loads and preprocesses the dataset.
    pub fn dataset(&self) -> Result<DataSet> {
        let data = match &self.data {
            DataConfig::Synthetic { spec, n, seed } => {
                spec.generate(*n, seed.unwrap_or_else(|| derive_seed(self.seed, seeds::DATA)))?
            }
            DataConfig::File { path, format, options, normalize } => {
                let d = load_dataset(path, *format, options)?;
                if *normalize {
                    normalize_features(&d)
                } else {
                    d
                }
            }
        };
        match &self.corruption {
            Some(noise) => corrupt_targets(&data, noise, derive_seed(self.seed, seeds::CORRUPTION)),
            None => Ok(data),
        }
    }

    pub fn algorithm_seed(&self, index: usize) -> u64 {
        derive_seed(self.seed, seeds::ALGORITHM_BASE + index as u64)
    }

    pub fn grid_budget(&self) -> f64 {
        self.grid_passes.unwrap_or(self.passes)
    }

    /// Smoothness estimate and theorem schedule for `data`.
    pub fn schedule(&self, model: &LossModel, data: &DataSet) -> Result<(f64, TheoremSchedule)> {
        theorem_schedule(model, data, self.constraint(), &self.schedule, derive_seed(self.seed, seeds::SMOOTHNESS))
    }

    /// Reference-optimum settings given the experiment's smoothness estimate.
    pub fn reference_settings(&self, smoothness: f64) -> ReferenceSettings {
        ReferenceSettings {
            passes: self.reference_passes,
            seed: derive_seed(self.seed, seeds::REFERENCE),
            constraint: self.constraint(),
            step: if self.grid_search {
                StepChoice::Grid { steps: self.step_grid.clone(), budget: self.grid_budget() }
            } else {
                StepChoice::Theorem
            },
            schedule: ScheduleSettings { smoothness: Some(smoothness), ..self.schedule },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSummary {
    pub objective: f64,
    pub passes: f64,
    pub step: f64,
    /// Set when a benchmarked run went below the SVRG reference; gaps are
    /// then measured against that run's best objective.
    pub improved_by: Option<Algorithm>,
    pub reported_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub error: Option<String>,
    pub step: Option<f64>,
    pub grid: Option<GridSearch>,
    pub passes: Option<f64>,
    pub final_objective: Option<f64>,
    pub final_gap: Option<f64>,
    pub wall_ms: Option<f64>,
    pub trace_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub version: String,
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub smoothness: f64,
    pub reference: ReferenceSummary,
    pub runs: Vec<RunSummary>,
}

/// Everything produced by [`run_experiment`], before and after persistence.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub traces: Vec<Option<TrainTrace>>,
    pub reference: ReferenceOptimum,
}

impl ExperimentOutcome {
    pub fn trace(&self, algorithm: Algorithm) -> Option<&TrainTrace> {
        self.summary
            .runs
            .iter()
            .zip(&self.traces)
            .find(|(r, _)| r.algorithm == algorithm)
            .and_then(|(_, t)| t.as_ref())
    }

    pub fn run(&self, algorithm: Algorithm) -> Option<&RunSummary> {
        self.summary.runs.iter().find(|r| r.algorithm == algorithm)
    }
}

struct RunResult {
    summary: RunSummary,
    trace: Option<TrainTrace>,
}

fn run_one(
    cfg: &ExperimentConfig,
    model: &LossModel,
    data: &DataSet,
    template: AlgorithmConfig,
    algorithm: Algorithm,
    seed: u64,
) -> RunResult {
    let mut summary = RunSummary {
        algorithm,
        seed,
        error: None,
        step: None,
        grid: None,
        passes: None,
        final_objective: None,
        final_gap: None,
        wall_ms: None,
        trace_file: None,
    };
    let mut template = with_seed(&with_budget(&template, data.len(), cfg.passes), seed);
    if cfg.grid_search {
        match grid_search_step(model, data, &template, &cfg.step_grid, cfg.grid_budget(), seed) {
            Ok(g) => {
                template = template.with_step(g.best_step);
                summary.grid = Some(g);
            }
            Err(e) => {
                summary.error = Some(e.to_string());
                return RunResult { summary, trace: None };
            }
        }
    }
    summary.step = Some(template.step());
    let clock = WallClock::start();
    let ctx = if cfg.record_wall_time { RunContext::with_clock(&clock) } else { RunContext::default() };
    match template.run(model, data, &ctx) {
        Ok(trace) => {
            if cfg.record_wall_time {
                summary.wall_ms = Some(clock_ms(&clock));
            }
            summary.passes = Some(trace.passes());
            summary.final_objective = Some(trace.objective);
            RunResult { summary, trace: Some(trace) }
        }
        Err(e) => {
            summary.error = Some(e.to_string());
            RunResult { summary, trace: None }
        }
    }
}

fn clock_ms(c: &WallClock) -> f64 {
    use ncvx_core::optim::Clock;
    c.elapsed_ms()
}

/// Runs the experiment without writing anything.
pub fn execute_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let model = cfg.model()?;
    let data = cfg.dataset()?;
    let constraint = cfg.constraint();
    let (smoothness, schedule) = cfg.schedule(&model, &data)?;
    let reference = reference_optimum_with(&model, &data, &cfg.reference_settings(smoothness))?;

    let results: Vec<RunResult> = cfg
        .algorithms
        .par_iter()
        .enumerate()
        .map(|(k, spec)| {
            let seed = cfg.algorithm_seed(k);
            let template = spec
                .config
                .clone()
                .unwrap_or_else(|| theorem_config(spec.algorithm, &schedule, constraint, data.len(), cfg.passes, seed));
            run_one(cfg, &model, &data, template, spec.algorithm, seed)
        })
        .collect();

    let mut reported = reference.objective;
    let mut improved_by = None;
    for r in &results {
        if let Some(t) = &r.trace {
            if t.best_objective < reported {
                reported = t.best_objective;
                improved_by = Some(r.summary.algorithm);
            }
        }
    }

    let mut runs = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for RunResult { mut summary, mut trace } in results {
        if let Some(t) = trace.as_mut() {
            t.fill_gaps(reported, GAP_FLOOR);
            summary.final_gap = Some((t.objective - reported).max(GAP_FLOOR));
        }
        runs.push(summary);
        traces.push(trace);
    }

    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        version: crate::VERSION.to_owned(),
        family: cfg.family,
        n: data.len(),
        p: data.dim(),
        seed: cfg.seed,
        smoothness,
        reference: ReferenceSummary {
            objective: reference.objective,
            passes: reference.passes,
            step: reference.step,
            improved_by,
            reported_objective: reported,
        },
        runs,
    };
    Ok(ExperimentOutcome { summary, traces, reference })
}

pub fn trace_file_name(index: usize, algorithm: Algorithm) -> String {
    format!("trace_{index:02}_{algorithm}.csv")
}

/// Runs the experiment and writes one trace CSV per successful run plus
/// `summary.json` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let mut outcome = execute_experiment(cfg)?;
    write_outcome(&mut outcome, &cfg.output_dir)?;
    Ok(outcome)
}

pub fn write_outcome(outcome: &mut ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    for (k, (run, trace)) in outcome.summary.runs.iter_mut().zip(&outcome.traces).enumerate() {
        if let Some(t) = trace {
            let name = trace_file_name(k, run.algorithm);
            save_trace_csv(t, &dir.join(&name))?;
            run.trace_file = Some(name);
        }
    }
    write_json(&outcome.summary, &dir.join("summary.json"))
}
