//! Theorem-default schedules and the reference optimum used for gaps.

use ncvx_core::losses::smoothness_estimate;
use ncvx_core::optim::{
    default_hyperparams, Algorithm, AlgorithmConfig, BallConstraint, RunContext, SgdConfig, TheoremSchedule,
};
use ncvx_core::{DataSet, Error, LossModel};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::search::{run_grid, select_step, with_budget, with_seed, GridCell};

/// Inputs of the theorem schedules that the data cannot supply directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSettings {
    /// Guess of `L/μ₀`.
    #[serde(default = "default_cond_guess")]
    pub cond_guess: f64,
    #[serde(default = "default_probes")]
    pub smoothness_probes: usize,
    /// Overrides the smoothness estimate.
    #[serde(default)]
    pub smoothness: Option<f64>,
    /// Overrides the SVRG epoch length `m`.
    #[serde(default)]
    pub svrg_epoch_len: Option<usize>,
    /// Overrides the SAGA minibatch size `b`.
    #[serde(default)]
    pub saga_batch: Option<usize>,
}

fn default_cond_guess() -> f64 {
    10.0
}

fn default_probes() -> usize {
    10
}

impl Default for ScheduleSettings {
    fn default() -> Self {
        Self {
            cond_guess: default_cond_guess(),
            smoothness_probes: default_probes(),
            smoothness: None,
            svrg_epoch_len: None,
            saga_batch: None,
        }
    }
}

/// Smoothness estimate and the schedule derived from it. Probes are drawn
/// from the constraint ball, or taken at the origin when unconstrained.
pub fn theorem_schedule(
    model: &LossModel,
    data: &DataSet,
    constraint: BallConstraint,
    settings: &ScheduleSettings,
    seed: u64,
) -> Result<(f64, TheoremSchedule)> {
    let l = match settings.smoothness {
        Some(l) => l,
        None => {
            let radius = constraint.radius().unwrap_or(0.0);
            smoothness_estimate(model, data, settings.smoothness_probes, radius, seed)?
        }
    };
    let l = if l > 0.0 { l } else { f64::MIN_POSITIVE.sqrt() };
    let mut schedule = default_hyperparams(model.family(), data.len(), l, settings.cond_guess)?;
    if let Some(m) = settings.svrg_epoch_len {
        schedule.svrg_epoch_len = m;
        schedule.svrg_total_steps = schedule.svrg_total_steps.max(m);
    }
    if let Some(b) = settings.saga_batch {
        schedule.saga_batch = b;
    }
    Ok((l, schedule))
}

/// Theorem-default configuration for `algorithm`, sized to `passes`. SGD,
/// which the theory does not cover, borrows the batch step `1/(2L)`.
pub fn theorem_config(
    algorithm: Algorithm,
    schedule: &TheoremSchedule,
    constraint: BallConstraint,
    n: usize,
    passes: f64,
    seed: u64,
) -> AlgorithmConfig {
    let cfg = match algorithm {
        Algorithm::Gd => AlgorithmConfig::Gd(schedule.gd(1, constraint)),
        Algorithm::Sgd => AlgorithmConfig::Sgd(SgdConfig { constraint, ..SgdConfig::new(schedule.gd_step, 1, seed) }),
        Algorithm::Svrg => AlgorithmConfig::Svrg(schedule.svrg(seed, constraint)),
        Algorithm::Saga => AlgorithmConfig::Saga(schedule.saga(seed, constraint)),
    };
    with_budget(&cfg, n, passes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepChoice {
    Theorem,
    Fixed { step: f64 },
    /// Grid search over `steps` with runs of `budget` passes.
    Grid { steps: Vec<f64>, budget: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSettings {
    pub passes: f64,
    pub seed: u64,
    #[serde(default)]
    pub constraint: BallConstraint,
    #[serde(default = "theorem")]
    pub step: StepChoice,
    #[serde(default)]
    pub schedule: ScheduleSettings,
}

fn theorem() -> StepChoice {
    StepChoice::Theorem
}

impl ReferenceSettings {
    pub fn new(passes: f64, seed: u64) -> Self {
        Self {
            passes,
            seed,
            constraint: BallConstraint::Unconstrained,
            step: StepChoice::Theorem,
            schedule: ScheduleSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceOptimum {
    pub theta: Vec<f64>,
    pub objective: f64,
    pub passes: f64,
    pub step: f64,
    pub config: AlgorithmConfig,
}

/// Long SVRG run with the theorem schedule; the lowest-objective recorded
/// iterate is returned.
pub fn reference_optimum(model: &LossModel, data: &DataSet, passes: f64, seed: u64) -> Result<ReferenceOptimum> {
    reference_optimum_with(model, data, &ReferenceSettings::new(passes, seed))
}

pub fn reference_optimum_with(model: &LossModel, data: &DataSet, settings: &ReferenceSettings) -> Result<ReferenceOptimum> {
    if !(settings.passes >= 1.0 && settings.passes.is_finite()) {
        return Err(HarnessError::Config(format!("reference needs at least one pass, got {}", settings.passes)));
    }
    let (_, schedule) = theorem_schedule(model, data, settings.constraint, &settings.schedule, settings.seed)?;
    let base = theorem_config(Algorithm::Svrg, &schedule, settings.constraint, data.len(), settings.passes, settings.seed);

    let mut candidates = Vec::new();
    let step = match &settings.step {
        StepChoice::Theorem => base.step(),
        StepChoice::Fixed { step } => *step,
        StepChoice::Grid { steps, budget } => {
            if steps.is_empty() {
                return Err(HarnessError::Config("reference step grid is empty".into()));
            }
            let short = with_seed(&with_budget(&base, data.len(), *budget), settings.seed);
            let runs = run_grid(model, data, &short, steps)?;
            let cells: Vec<GridCell> = runs
                .iter()
                .map(|(s, t)| GridCell { step: *s, objective: t.as_ref().map(|t| t.objective) })
                .collect();
            let best = select_step(&cells).map_err(|_| HarnessError::NoReference("every grid cell diverged".into()))?;
            candidates.extend(runs.into_iter().filter_map(|(_, t)| t));
            best
        }
    };
    let cfg = base.with_step(step);
    match cfg.run(model, data, &RunContext::default()) {
        Ok(t) => candidates.push(t),
        Err(Error::Diverged { .. }) if !candidates.is_empty() => {}
        Err(Error::Diverged { .. }) => return Err(HarnessError::NoReference("reference run diverged".into())),
        Err(e) => return Err(e.into()),
    }
    let best = candidates
        .into_iter()
        .filter(|t| t.best_objective.is_finite())
        .min_by(|a, b| a.best_objective.total_cmp(&b.best_objective))
        .ok_or_else(|| HarnessError::NoReference("no finite objective recorded".into()))?;
    let passes = best.passes();
    Ok(ReferenceOptimum {
        theta: best.best_theta,
        objective: best.best_objective,
        passes,
        step: best.config.step(),
        config: best.config,
    })
}
