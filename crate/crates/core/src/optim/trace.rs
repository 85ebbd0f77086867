use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::oracle::full_gradient_into;
use super::{AlgorithmConfig, Clock};
use crate::data::DataSet;
use crate::error::Error;
use crate::linalg::{dot, norm2};
use crate::losses::LossModel;

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Sample-gradient evaluations so far divided by `n`.
    pub pass: f64,
    pub objective: f64,
    /// Filled in once a reference optimum is known.
    pub objective_gap: Option<f64>,
    pub grad_norm: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub config: AlgorithmConfig,
    pub n: usize,
    pub records: Vec<TraceRecord>,
    /// The run's output iterate.
    pub theta: Vec<f64>,
    /// Objective at `theta`.
    pub objective: f64,
    /// Lowest-objective recorded iterate.
    pub best_theta: Vec<f64>,
    pub best_objective: f64,
    pub sample_gradients: u64,
}

impl TrainTrace {
    pub fn passes(&self) -> f64 {
        self.sample_gradients as f64 / self.n.max(1) as f64
    }

    pub fn algorithm(&self) -> super::Algorithm {
        self.config.algorithm()
    }

    /// Sets `objective_gap = max(objective − reference, floor)` on every row.
    pub fn fill_gaps(&mut self, reference: f64, floor: f64) {
        for r in &mut self.records {
            r.objective_gap = Some((r.objective - reference).max(floor));
        }
    }

    pub fn final_record(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Evaluates and stores trace rows. Monitoring evaluations are never charged
/// to the gradient counter.
pub(crate) struct Recorder<'a> {
    model: &'a LossModel,
    data: &'a DataSet,
    clock: Option<&'a dyn Clock>,
    records: Vec<TraceRecord>,
    last_theta: Vec<f64>,
    best_theta: Vec<f64>,
    best_objective: f64,
    grad: Vec<f64>,
    coefs: Vec<f64>,
}

pub(crate) struct NonFinite;

impl<'a> Recorder<'a> {
    pub fn new(model: &'a LossModel, data: &'a DataSet, clock: Option<&'a dyn Clock>) -> Self {
        Self {
            model,
            data,
            clock,
            records: Vec::new(),
            last_theta: Vec::new(),
            best_theta: Vec::new(),
            best_objective: f64::INFINITY,
            grad: vec![0.0; data.dim()],
            coefs: vec![0.0; data.len()],
        }
    }

    /// Gradient at the most recently recorded point.
    pub fn last_gradient(&self) -> &[f64] {
        &self.grad
    }

    pub fn last_pass(&self) -> Option<f64> {
        self.records.last().map(|r| r.pass)
    }

    fn evaluate(&mut self, pass: f64, theta: &[f64]) -> Result<TraceRecord, NonFinite> {
        let objective = self
            .data
            .samples()
            .fold(0.0, |acc, s| acc + self.model.loss_at(dot(theta, s.x), s.y))
            / self.data.len() as f64;
        full_gradient_into(self.model, self.data, theta, &mut self.coefs, &mut self.grad);
        let grad_norm = norm2(&self.grad);
        if !objective.is_finite() || !grad_norm.is_finite() {
            return Err(NonFinite);
        }
        if objective < self.best_objective {
            self.best_objective = objective;
            self.best_theta.clear();
            self.best_theta.extend_from_slice(theta);
        }
        self.last_theta.clear();
        self.last_theta.extend_from_slice(theta);
        Ok(TraceRecord {
            pass,
            objective,
            objective_gap: None,
            grad_norm,
            wall_ms: self.clock.map(|c| c.elapsed_ms()),
        })
    }

    /// Appends a row; rows whose pass does not advance are skipped.
    pub fn record(&mut self, pass: f64, theta: &[f64]) -> Result<Option<&TraceRecord>, NonFinite> {
        if self.last_pass().is_some_and(|p| pass <= p) {
            return Ok(None);
        }
        let r = self.evaluate(pass, theta)?;
        self.records.push(r);
        Ok(self.records.last())
    }

    /// Makes the last row describe the output iterate and packages the trace.
    pub fn finish(
        mut self,
        pass: f64,
        theta: Vec<f64>,
        evals: u64,
        config: &AlgorithmConfig,
    ) -> Result<TrainTrace, Error> {
        let stale = self.last_theta != theta;
        match self.last_pass() {
            Some(p) if p >= pass => {
                if stale {
                    match self.evaluate(p, &theta) {
                        Ok(r) => *self.records.last_mut().expect("non-empty") = r,
                        Err(NonFinite) => return Err(self.diverged(theta, evals, config)),
                    }
                }
            }
            _ => {
                if self.record(pass, &theta).is_err() {
                    return Err(self.diverged(theta, evals, config));
                }
            }
        }
        let objective = self.records.last().map_or(f64::NAN, |r| r.objective);
        Ok(self.into_trace(theta, objective, evals, config))
    }

    pub fn diverged(self, theta: Vec<f64>, evals: u64, config: &AlgorithmConfig) -> Error {
        Error::Diverged { trace: Box::new(self.into_trace(theta, f64::NAN, evals, config)) }
    }

    fn into_trace(self, theta: Vec<f64>, objective: f64, evals: u64, config: &AlgorithmConfig) -> TrainTrace {
        TrainTrace {
            config: config.clone(),
            n: self.data.len(),
            records: self.records,
            theta,
            objective,
            best_theta: self.best_theta,
            best_objective: self.best_objective,
            sample_gradients: evals,
        }
    }
}
