use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::oracle::CountingOracle;
use super::trace::Recorder;
use super::{initial_point, step_along_sample, validate_step, AlgorithmConfig, BallConstraint, RunContext, TrainTrace};
use crate::data::DataSet;
use crate::error::Result;
use crate::losses::LossModel;
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub step: f64,
    pub max_passes: usize,
    #[serde(default)]
    pub constraint: BallConstraint,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl SgdConfig {
    pub fn new(step: f64, max_passes: usize, seed: u64) -> Self {
        Self { step, max_passes, constraint: BallConstraint::Unconstrained, seed, init: None }
    }
}

/// Constant-step projected SGD with indices drawn uniformly with
/// replacement. One trace row per `n` steps.
pub fn run_sgd(model: &LossModel, data: &DataSet, cfg: &SgdConfig, ctx: &RunContext<'_>) -> Result<TrainTrace> {
    validate_step(cfg.step, false)?;
    cfg.constraint.validate()?;
    model.check_targets(data)?;
    let config = AlgorithmConfig::Sgd(cfg.clone());
    let n = data.len();
    let mut theta = initial_point(&cfg.init, data, cfg.constraint)?;
    let mut oracle = CountingOracle::new(model, data);
    let mut rec = Recorder::new(model, data, ctx.clock);
    let mut rng = rng::stream(cfg.seed, streams::SAMPLING);

    if rec.record(0.0, &theta).is_err() {
        return Err(rec.diverged(theta, 0, &config));
    }
    for _ in 0..cfg.max_passes {
        for _ in 0..n {
            let i = rng.random_range(0..n);
            let c = oracle.coef(i, &theta);
            step_along_sample(&mut theta, cfg.step, c, data.x(i));
            cfg.constraint.project(&mut theta);
        }
        if rec.record(oracle.passes(), &theta).is_err() {
            return Err(rec.diverged(theta, oracle.evals(), &config));
        }
    }
    rec.finish(oracle.passes(), theta, oracle.evals(), &config)
}
