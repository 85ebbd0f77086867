//! Step-size selection by grid search.

use ncvx_core::optim::{AlgorithmConfig, RunContext, TrainTrace};
use ncvx_core::{DataSet, Error, LossModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// `{2^-10, ..., 2^1}`.
pub fn paper_step_grid() -> Vec<f64> {
    (-10..=1).map(|k| 2f64.powi(k)).collect()
}

/// Resizes a configuration so one run spends about `passes` passes over `n`
/// samples.
pub fn with_budget(cfg: &AlgorithmConfig, n: usize, passes: f64) -> AlgorithmConfig {
    let whole = passes.floor().max(1.0) as usize;
    match cfg {
        AlgorithmConfig::Gd(c) => AlgorithmConfig::Gd(ncvx_core::optim::GdConfig { max_passes: whole, ..c.clone() }),
        AlgorithmConfig::Sgd(c) => AlgorithmConfig::Sgd(ncvx_core::optim::SgdConfig { max_passes: whole, ..c.clone() }),
        AlgorithmConfig::Svrg(c) => AlgorithmConfig::Svrg(c.clone().fit_budget(n, passes)),
        AlgorithmConfig::Saga(c) => AlgorithmConfig::Saga(c.clone().fit_budget(n, passes)),
    }
}

pub fn with_seed(cfg: &AlgorithmConfig, seed: u64) -> AlgorithmConfig {
    let mut out = cfg.clone();
    match &mut out {
        AlgorithmConfig::Gd(_) => {}
        AlgorithmConfig::Sgd(c) => c.seed = seed,
        AlgorithmConfig::Svrg(c) => c.seed = seed,
        AlgorithmConfig::Saga(c) => c.seed = seed,
    }
    out
}

/// Outcome of one grid cell; `objective` is `None` when the run diverged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub step: f64,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub best_step: f64,
    pub cells: Vec<GridCell>,
}

/// Lowest final objective wins, ties go to the larger step, diverged cells
/// are skipped.
pub fn select_step(cells: &[GridCell]) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for c in cells {
        let Some(obj) = c.objective.filter(|v| v.is_finite()) else { continue };
        best = match best {
            Some((s, o)) if obj > o || (obj == o && c.step <= s) => Some((s, o)),
            _ => Some((c.step, obj)),
        };
    }
    best.map(|(s, _)| s).ok_or(HarnessError::NoViableStep)
}

/// Runs every step of the grid (concurrently) and returns the traces of
/// the non-diverged cells in grid order.
pub(crate) fn run_grid(
    model: &LossModel,
    data: &DataSet,
    template: &AlgorithmConfig,
    grid: &[f64],
) -> Result<Vec<(f64, Option<TrainTrace>)>> {
    grid.par_iter()
        .map(|&step| match template.with_step(step).run(model, data, &RunContext::default()) {
            Ok(t) if t.objective.is_finite() => Ok((step, Some(t))),
            Ok(_) | Err(Error::Diverged { .. }) => Ok((step, None)),
            Err(e) => Err(e.into()),
        })
        .collect()
}

/// Grid search for `template`'s algorithm under a `budget`-pass run and a
/// fixed seed. Only the step of the template is varied.
pub fn grid_search_step(
    model: &LossModel,
    data: &DataSet,
    template: &AlgorithmConfig,
    grid: &[f64],
    budget: f64,
    seed: u64,
) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(HarnessError::Config("step grid is empty".into()));
    }
    if let Some(s) = grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(HarnessError::Config(format!("grid steps must be positive, got {s}")));
    }
    let template = with_seed(&with_budget(template, data.len(), budget), seed);
    let cells: Vec<GridCell> = run_grid(model, data, &template, grid)?
        .into_iter()
        .map(|(step, t)| GridCell { step, objective: t.map(|t| t.objective) })
        .collect();
    let best_step = select_step(&cells)?;
    Ok(GridSearch { best_step, cells })
}
