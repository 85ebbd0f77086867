use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::oracle::CountingOracle;
use super::trace::Recorder;
use super::{
    initial_point, validate_step, AlgorithmConfig, BallConstraint, OutputMode, RunContext, TrainTrace,
};
use crate::data::DataSet;
use crate::error::{invalid_input, invalid_param, Result};
use crate::linalg::dot;
use crate::losses::LossModel;
use crate::rng::{self, streams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrgConfig {
    /// Inner steps per epoch (`m`).
    pub epoch_len: usize,
    /// Inner steps per restart (`T`); a restart runs `⌈T/m⌉` full epochs.
    pub total_steps: usize,
    /// Outer restarts (`J`).
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

impl SvrgConfig {
    pub fn new(epoch_len: usize, total_steps: usize, step: f64, seed: u64) -> Self {
        Self {
            epoch_len,
            total_steps,
            restarts: 1,
            step,
            constraint: BallConstraint::Unconstrained,
            output: OutputMode::LastIterate,
            seed,
            init: None,
        }
    }

    /// Sizes `total_steps` so that a single restart spends at most
    /// `passes` passes (at least one epoch). An epoch costs `(n + m)/n`.
    pub fn fit_budget(mut self, n: usize, passes: f64) -> Self {
        let per_epoch = (n + self.epoch_len) as f64 / n as f64;
        let epochs = libm::floor(passes / per_epoch).max(1.0) as usize;
        self.total_steps = epochs * self.epoch_len;
        self.restarts = 1;
        self
    }

    pub fn epochs(&self) -> usize {
        self.total_steps.div_ceil(self.epoch_len.max(1))
    }

    /// Closed-form sample-gradient count of a full run.
    pub fn sample_gradient_count(&self, n: usize) -> u64 {
        (self.restarts * self.epochs() * (n + self.epoch_len)) as u64
    }

    fn validate(&self) -> Result<()> {
        if self.epoch_len == 0 {
            return Err(invalid_param!("SVRG epoch length must be at least 1"));
        }
        if self.total_steps < self.epoch_len {
            return Err(invalid_param!(
                "SVRG total steps ({}) must be at least the epoch length ({})",
                self.total_steps,
                self.epoch_len
            ));
        }
        if self.restarts == 0 {
            return Err(invalid_param!("SVRG needs at least one restart"));
        }
        validate_step(self.step, false)?;
        self.constraint.validate()
    }
}

/// Variance-reduced direction `∇ℓ_i(θ) − ∇ℓ_i(θ̃) + ∇R_n(θ̃)`.
///
/// `snapshot_grad` must equal `∇R_n(θ̃)`; debug builds check this.
pub fn svrg_vr_gradient(
    i: usize,
    theta: &[f64],
    snapshot: &[f64],
    snapshot_grad: &[f64],
    model: &LossModel,
    data: &DataSet,
) -> Result<Vec<f64>> {
    if i >= data.len() {
        return Err(invalid_input!("sample index {i} out of range for n = {}", data.len()));
    }
    let p = data.dim();
    if theta.len() != p || snapshot.len() != p || snapshot_grad.len() != p {
        return Err(invalid_input!("SVRG direction arguments must all have dimension {p}"));
    }
    debug_assert!(
        {
            let full = crate::losses::batch_gradient(model, snapshot, data)?;
            crate::linalg::max_abs_diff(&full, snapshot_grad) <= 1e-10
        },
        "snapshot gradient does not match the snapshot point"
    );
    let x = data.x(i);
    let y = data.y(i);
    let d = model.grad_coef(dot(theta, x), y) - model.grad_coef(dot(snapshot, x), y);
    Ok(x.iter().zip(snapshot_grad).map(|(xi, g)| d * xi + g).collect())
}

/// Restarted SVRG. Each epoch takes the previous epoch's last iterate as the
/// snapshot, stores the per-sample gradient coefficients there (`n`
/// evaluations), then runs `m` inner steps costing one evaluation each.
pub fn run_svrg(model: &LossModel, data: &DataSet, cfg: &SvrgConfig, ctx: &RunContext<'_>) -> Result<TrainTrace> {
    cfg.validate()?;
    model.check_targets(data)?;
    let config = AlgorithmConfig::Svrg(cfg.clone());
    let (n, p) = (data.len(), data.dim());
    let mut theta = initial_point(&cfg.init, data, cfg.constraint)?;
    let mut oracle = CountingOracle::new(model, data);
    let mut rec = Recorder::new(model, data, ctx.clock);
    let mut sampler = rng::stream(cfg.seed, streams::SAMPLING);
    let mut picker = rng::stream(cfg.seed, streams::OUTPUT_ITERATE);

    let mut snap_coefs = vec![0.0; n];
    let mut snap_grad = vec![0.0; p];
    let epochs = cfg.epochs();
    let m = cfg.epoch_len;

    if rec.record(0.0, &theta).is_err() {
        return Err(rec.diverged(theta, 0, &config));
    }
    for _ in 0..cfg.restarts {
        let pick = match cfg.output {
            OutputMode::RandomIterate => Some(picker.random_range(0..epochs * m)),
            OutputMode::LastIterate => None,
        };
        let mut chosen: Option<Vec<f64>> = None;
        let mut inner = 0usize;
        for _ in 0..epochs {
            oracle.full_gradient(&theta, &mut snap_coefs, &mut snap_grad);
            for _ in 0..m {
                if pick == Some(inner) {
                    chosen = Some(theta.clone());
                }
                inner += 1;
                let i = sampler.random_range(0..n);
                let d = oracle.coef(i, &theta) - snap_coefs[i];
                for ((t, xi), g) in theta.iter_mut().zip(data.x(i)).zip(&snap_grad) {
                    *t -= cfg.step * (d * xi + g);
                }
                cfg.constraint.project(&mut theta);
            }
            if rec.record(oracle.passes(), &theta).is_err() {
                return Err(rec.diverged(theta, oracle.evals(), &config));
            }
        }
        if let Some(c) = chosen {
            theta = c;
        }
    }
    rec.finish(oracle.passes(), theta, oracle.evals(), &config)
}
