//! Projected batch gradient descent, SGD, SVRG and minibatch SAGA.
//!
//! All four share the same bookkeeping. Every per-sample gradient evaluated
//! at a new point is charged to a counter, and a "pass" is `n` such
//! evaluations. Gradients read back from a snapshot or memory table are free.
//! Objective and gradient-norm monitoring for the trace is not charged.

mod gd;
mod oracle;
mod saga;
mod schedule;
mod sgd;
mod svrg;
mod trace;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{invalid_input, invalid_param, Result};
use crate::linalg;

pub use gd::{run_batch_gd, GdConfig};
pub use saga::{run_saga, saga_step, SagaConfig, SagaState};
pub use schedule::{default_hyperparams, TheoremSchedule};
pub use sgd::{run_sgd, SgdConfig};
pub use svrg::{run_svrg, svrg_vr_gradient, SvrgConfig};
pub use trace::{TraceRecord, TrainTrace};

/// `‖θ‖₂ ≤ r`, or no constraint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Option<f64>", into = "Option<f64>")]
pub enum BallConstraint {
    #[default]
    Unconstrained,
    Radius(f64),
}

impl From<Option<f64>> for BallConstraint {
    fn from(r: Option<f64>) -> Self {
        match r {
            Some(r) if r.is_finite() => Self::Radius(r),
            _ => Self::Unconstrained,
        }
    }
}

impl From<BallConstraint> for Option<f64> {
    fn from(c: BallConstraint) -> Self {
        match c {
            BallConstraint::Unconstrained => None,
            BallConstraint::Radius(r) => Some(r),
        }
    }
}

impl BallConstraint {
    pub fn radius(&self) -> Option<f64> {
        (*self).into()
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::Radius(r) if !(*r > 0.0) => Err(invalid_param!("ball radius must be positive, got {r}")),
            _ => Ok(()),
        }
    }

    /// Radial projection in place. Points within a few ulps of the sphere
    /// are left alone, which makes the projection exactly idempotent.
    #[inline]
    pub fn project(&self, theta: &mut [f64]) {
        if let Self::Radius(r) = *self {
            let norm = linalg::norm2(theta);
            if norm > r * (1.0 + 8.0 * f64::EPSILON) {
                let s = r / norm;
                theta.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
}

pub fn project_ball(theta: &[f64], constraint: BallConstraint) -> Vec<f64> {
    let mut out = theta.to_vec();
    constraint.project(&mut out);
    out
}

/// Which iterate a restart hands on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// Uniformly random inner iterate, as in the analysed algorithms.
    RandomIterate,
    #[default]
    LastIterate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Gd,
    Sgd,
    Svrg,
    Saga,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Self::Gd, Self::Sgd, Self::Svrg, Self::Saga];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gd => "gd",
            Self::Sgd => "sgd",
            Self::Svrg => "svrg",
            Self::Saga => "saga",
        }
    }
}

impl core::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for Algorithm {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid_input!("unknown algorithm {s:?}"))
    }
}

/// A fully specified run of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    Gd(GdConfig),
    Sgd(SgdConfig),
    Svrg(SvrgConfig),
    Saga(SagaConfig),
}

impl AlgorithmConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Self::Gd(_) => Algorithm::Gd,
            Self::Sgd(_) => Algorithm::Sgd,
            Self::Svrg(_) => Algorithm::Svrg,
            Self::Saga(_) => Algorithm::Saga,
        }
    }

    pub fn step(&self) -> f64 {
        match self {
            Self::Gd(c) => c.step,
            Self::Sgd(c) => c.step,
            Self::Svrg(c) => c.step,
            Self::Saga(c) => c.step,
        }
    }

    pub fn with_step(&self, step: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Gd(c) => c.step = step,
            Self::Sgd(c) => c.step = step,
            Self::Svrg(c) => c.step = step,
            Self::Saga(c) => c.step = step,
        }
        out
    }

    pub fn run(
        &self,
        model: &crate::LossModel,
        data: &DataSet,
        ctx: &RunContext<'_>,
    ) -> Result<TrainTrace> {
        match self {
            Self::Gd(c) => run_batch_gd(model, data, c, ctx),
            Self::Sgd(c) => run_sgd(model, data, c, ctx),
            Self::Svrg(c) => run_svrg(model, data, c, ctx),
            Self::Saga(c) => run_saga(model, data, c, ctx),
        }
    }
}

/// Wall-clock source for trace rows. The core crate has no clock of its own.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

/// Per-run options that do not change the mathematics of a run.
#[derive(Clone, Copy, Default)]
pub struct RunContext<'a> {
    /// When absent, `wall_ms` is left empty in every record.
    pub clock: Option<&'a dyn Clock>,
    /// Enables expensive consistency checks (SAGA table recomputation).
    pub verify_invariants: bool,
}

impl<'a> RunContext<'a> {
    pub fn with_clock(clock: &'a dyn Clock) -> Self {
        Self { clock: Some(clock), verify_invariants: false }
    }
}

fn validate_step(step: f64, allow_zero: bool) -> Result<()> {
    let ok = step.is_finite() && (step > 0.0 || (allow_zero && step == 0.0));
    if !ok {
        return Err(invalid_param!("step size must be positive and finite, got {step}"));
    }
    Ok(())
}

fn initial_point(init: &Option<Vec<f64>>, data: &DataSet, constraint: BallConstraint) -> Result<Vec<f64>> {
    let theta = match init {
        Some(t) if t.len() != data.dim() => {
            return Err(invalid_input!(
                "initial point has dimension {} but data has {} features",
                t.len(),
                data.dim()
            ))
        }
        Some(t) => t.clone(),
        None => alloc::vec![0.0; data.dim()],
    };
    if let BallConstraint::Radius(r) = constraint {
        if linalg::norm2(&theta) > r {
            return Err(invalid_input!("initial point lies outside the constraint ball"));
        }
    }
    Ok(theta)
}

/// `θ ← θ − η·(c·x)`, the shared single-sample update. Written so that the
/// per-coordinate rounding matches a full-gradient step on a one-row dataset.
#[inline]
fn step_along_sample(theta: &mut [f64], step: f64, coef: f64, x: &[f64]) {
    for (t, xi) in theta.iter_mut().zip(x) {
        *t -= step * (coef * xi);
    }
}

#[inline]
fn step_along(theta: &mut [f64], step: f64, direction: &[f64]) {
    for (t, d) in theta.iter_mut().zip(direction) {
        *t -= step * d;
    }
}
