use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::oracle::CountingOracle;
use super::trace::Recorder;
use super::{
    initial_point, step_along, validate_step, AlgorithmConfig, BallConstraint, OutputMode, RunContext, TrainTrace,
};
use crate::data::DataSet;
use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::linalg::{axpy, dot, max_abs_diff, Matrix};
use crate::losses::LossModel;
use crate::rng::{self, streams};

/// Tolerance for the table-consistency check in verification mode.
pub const TABLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SagaConfig {
    /// Steps per restart (`K`).
    pub steps: usize,
    /// Minibatch size `b` for both the direction set and the table-update set.
    pub batch: usize,
    #[serde(default = "one")]
    pub restarts: usize,
    pub step: f64,
    #[serde(default)]
    pub constraint: BallConstraint,
    #[serde(default)]
    pub output: OutputMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
}

fn one() -> usize {
    1
}

impl SagaConfig {
    pub fn new(steps: usize, batch: usize, step: f64, seed: u64) -> Self {
        Self {
            steps,
            batch,
            restarts: 1,
            step,
            constraint: BallConstraint::Unconstrained,
            output: OutputMode::LastIterate,
            seed,
            init: None,
        }
    }

    /// Sizes `steps` so that one restart, table initialization included,
    /// spends at most `passes` passes (at least one step).
    pub fn fit_budget(mut self, n: usize, passes: f64) -> Self {
        let available = (passes - 1.0).max(0.0) * n as f64;
        self.steps = (libm::floor(available / (2 * self.batch) as f64) as usize).max(1);
        self.restarts = 1;
        self
    }

    /// Closed-form sample-gradient count of a full run.
    pub fn sample_gradient_count(&self, n: usize) -> u64 {
        (self.restarts * (n + 2 * self.batch * self.steps)) as u64
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.batch == 0 || self.batch > n {
            return Err(invalid_param!("SAGA minibatch size must lie in [1, n = {n}], got {}", self.batch));
        }
        if self.steps == 0 || self.restarts == 0 {
            return Err(invalid_param!("SAGA needs at least one step and one restart"));
        }
        validate_step(self.step, false)?;
        self.constraint.validate()
    }
}

/// Iterate, memory table and running mean of the stored gradients.
///
/// Each anchor's gradient is kept as its scalar coefficient `ℓ'(⟨α_i, x_i⟩)`;
/// the anchor vectors themselves are only retained when verification is on.
#[derive(Debug, Clone, PartialEq)]
pub struct SagaState {
    theta: Vec<f64>,
    anchor_coefs: Vec<f64>,
    anchors: Option<Matrix>,
    mean_grad: Vec<f64>,
}

impl SagaState {
    /// Every anchor set to `theta`, running mean set to `∇R_n(theta)`.
    pub fn new(model: &LossModel, data: &DataSet, theta: Vec<f64>, keep_anchors: bool) -> Result<Self> {
        if theta.len() != data.dim() {
            return Err(invalid_input!("iterate dimension {} != {}", theta.len(), data.dim()));
        }
        let mut oracle = CountingOracle::new(model, data);
        Ok(Self::init(&mut oracle, theta, keep_anchors))
    }

    fn init(oracle: &mut CountingOracle<'_>, theta: Vec<f64>, keep_anchors: bool) -> Self {
        let data = oracle.data;
        let mut anchor_coefs = vec![0.0; data.len()];
        let mut mean_grad = vec![0.0; data.dim()];
        oracle.full_gradient(&theta, &mut anchor_coefs, &mut mean_grad);
        let anchors = keep_anchors.then(|| {
            let mut m = Matrix::zeros(data.len(), data.dim());
            for i in 0..data.len() {
                m.row_mut(i).copy_from_slice(&theta);
            }
            m
        });
        Self { theta, anchor_coefs, anchors, mean_grad }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// The running average `g`.
    pub fn mean_gradient(&self) -> &[f64] {
        &self.mean_grad
    }

    pub fn anchors(&self) -> Option<&Matrix> {
        self.anchors.as_ref()
    }

    /// `v = (1/b) Σ_{i∈batch} (∇ℓ_i(θ) − ∇ℓ_i(α_i)) + g` without touching the
    /// state.
    pub fn direction(&self, model: &LossModel, data: &DataSet, batch: &[usize]) -> Vec<f64> {
        let mut oracle = CountingOracle::new(model, data);
        let mut v = vec![0.0; data.dim()];
        self.direction_into(&mut oracle, batch, &mut v);
        v
    }

    fn direction_into(&self, oracle: &mut CountingOracle<'_>, batch: &[usize], v: &mut [f64]) {
        v.iter_mut().for_each(|e| *e = 0.0);
        for &i in batch {
            let d = oracle.coef(i, &self.theta) - self.anchor_coefs[i];
            axpy(d, oracle.data.x(i), v);
        }
        let inv_b = 1.0 / batch.len() as f64;
        for (e, g) in v.iter_mut().zip(&self.mean_grad) {
            *e = *e * inv_b + g;
        }
    }

    /// `(1/n) Σ_i ∇ℓ_i(α_i)` recomputed from the stored anchors. `None` when
    /// anchors were not retained.
    pub fn table_mean_gradient(&self, model: &LossModel, data: &DataSet) -> Option<Vec<f64>> {
        let anchors = self.anchors.as_ref()?;
        let mut g = vec![0.0; data.dim()];
        for (i, s) in data.samples().enumerate() {
            let c = model.grad_coef(dot(anchors.row(i), s.x), s.y);
            axpy(c, s.x, &mut g);
        }
        let inv_n = 1.0 / data.len() as f64;
        g.iter_mut().for_each(|v| *v *= inv_n);
        Some(g)
    }

    fn check_table(&self, model: &LossModel, data: &DataSet) -> Result<()> {
        if let Some(recomputed) = self.table_mean_gradient(model, data) {
            let dev = max_abs_diff(&recomputed, &self.mean_grad);
            if !(dev <= TABLE_TOLERANCE) {
                return Err(Error::InvariantViolation(alloc::format!(
                    "SAGA running mean deviates from the table by {dev:e}"
                )));
            }
        }
        Ok(())
    }

    /// One SAGA step. The table correction reads the old anchor gradients
    /// before they are overwritten with gradients at the pre-step iterate.
    fn step(
        &mut self,
        oracle: &mut CountingOracle<'_>,
        batch: usize,
        step: f64,
        constraint: BallConstraint,
        rng: &mut rng::Rng,
        v: &mut [f64],
    ) {
        let n = oracle.data.len();
        let dir_set = index::sample(rng, n, batch).into_vec();
        let table_set = index::sample(rng, n, batch).into_vec();

        self.direction_into(oracle, &dir_set, v);
        let previous = self.theta.clone();
        step_along(&mut self.theta, step, v);
        constraint.project(&mut self.theta);

        let inv_n = 1.0 / n as f64;
        for &j in &table_set {
            let fresh = oracle.coef(j, &previous);
            let delta = (fresh - self.anchor_coefs[j]) * inv_n;
            axpy(delta, oracle.data.x(j), &mut self.mean_grad);
            self.anchor_coefs[j] = fresh;
            if let Some(a) = self.anchors.as_mut() {
                a.row_mut(j).copy_from_slice(&previous);
            }
        }
    }
}

/// Advances `state` by one SAGA step using `cfg.batch`, `cfg.step` and
/// `cfg.constraint`.
pub fn saga_step(
    state: &mut SagaState,
    cfg: &SagaConfig,
    model: &LossModel,
    data: &DataSet,
    rng: &mut rng::Rng,
) -> Result<()> {
    cfg.validate(data.len())?;
    if state.theta.len() != data.dim() || state.anchor_coefs.len() != data.len() {
        return Err(invalid_input!("SAGA state does not match the dataset"));
    }
    let mut oracle = CountingOracle::new(model, data);
    let mut v = vec![0.0; data.dim()];
    state.step(&mut oracle, cfg.batch, cfg.step, cfg.constraint, rng, &mut v);
    Ok(())
}

/// Restarted minibatch SAGA. Every restart rebuilds the table at the
/// incoming iterate (`n` evaluations); each step costs `2b`.
pub fn run_saga(model: &LossModel, data: &DataSet, cfg: &SagaConfig, ctx: &RunContext<'_>) -> Result<TrainTrace> {
    let n = data.len();
    cfg.validate(n)?;
    model.check_targets(data)?;
    let config = AlgorithmConfig::Saga(cfg.clone());
    let theta0 = initial_point(&cfg.init, data, cfg.constraint)?;
    let mut oracle = CountingOracle::new(model, data);
    let mut rec = Recorder::new(model, data, ctx.clock);
    let mut sampler = rng::stream(cfg.seed, streams::SAMPLING);
    let mut picker = rng::stream(cfg.seed, streams::OUTPUT_ITERATE);
    let mut v = vec![0.0; data.dim()];

    if rec.record(0.0, &theta0).is_err() {
        return Err(rec.diverged(theta0, 0, &config));
    }
    let mut theta = theta0;
    let mut last_recorded = 0u64;
    for _ in 0..cfg.restarts {
        let mut state = SagaState::init(&mut oracle, theta, ctx.verify_invariants);
        let pick = match cfg.output {
            OutputMode::RandomIterate => Some(picker.random_range(0..cfg.steps)),
            OutputMode::LastIterate => None,
        };
        let mut chosen: Option<Vec<f64>> = None;
        for k in 0..cfg.steps {
            if pick == Some(k) {
                chosen = Some(state.theta.clone());
            }
            state.step(&mut oracle, cfg.batch, cfg.step, cfg.constraint, &mut sampler, &mut v);
            if ctx.verify_invariants {
                state.check_table(model, data)?;
            }
            if oracle.evals() - last_recorded >= n as u64 {
                last_recorded = oracle.evals();
                if rec.record(oracle.passes(), &state.theta).is_err() {
                    return Err(rec.diverged(state.theta, oracle.evals(), &config));
                }
            }
        }
        theta = chosen.unwrap_or(state.theta);
    }
    rec.finish(oracle.passes(), theta, oracle.evals(), &config)
}
