use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::oracle::CountingOracle;
use super::trace::Recorder;
use super::{initial_point, step_along, validate_step, AlgorithmConfig, BallConstraint, RunContext, TrainTrace};
use crate::data::DataSet;
use crate::error::Result;
use crate::linalg::norm2;
use crate::losses::LossModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdConfig {
    pub step: f64,
    /// Each iteration is one pass.
    pub max_passes: usize,
    #[serde(default)]
    pub constraint: BallConstraint,
    /// Stop once `‖∇R_n(θ)‖ ≤ grad_tol`.
    #[serde(default)]
    pub grad_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

impl GdConfig {
    pub fn new(step: f64, max_passes: usize) -> Self {
        Self { step, max_passes, constraint: BallConstraint::Unconstrained, grad_tol: 0.0, init: None }
    }
}

/// `θ ← Π(θ − η ∇R_n(θ))`, one trace row per iteration.
pub fn run_batch_gd(model: &LossModel, data: &DataSet, cfg: &GdConfig, ctx: &RunContext<'_>) -> Result<TrainTrace> {
    validate_step(cfg.step, true)?;
    cfg.constraint.validate()?;
    model.check_targets(data)?;
    let config = AlgorithmConfig::Gd(cfg.clone());
    let mut theta = initial_point(&cfg.init, data, cfg.constraint)?;
    let mut oracle = CountingOracle::new(model, data);
    let mut rec = Recorder::new(model, data, ctx.clock);
    let mut grad = alloc::vec![0.0; data.dim()];

    if rec.record(0.0, &theta).is_err() {
        return Err(rec.diverged(theta, 0, &config));
    }
    for _ in 0..cfg.max_passes {
        if norm2(rec.last_gradient()) <= cfg.grad_tol {
            break;
        }
        // The monitoring gradient at the current iterate doubles as the
        // step gradient, charged here.
        grad.copy_from_slice(rec.last_gradient());
        oracle.charge_full();
        step_along(&mut theta, cfg.step, &grad);
        cfg.constraint.project(&mut theta);
        if rec.record(oracle.passes(), &theta).is_err() {
            return Err(rec.diverged(theta, oracle.evals(), &config));
        }
    }
    rec.finish(oracle.passes(), theta, oracle.evals(), &config)
}
