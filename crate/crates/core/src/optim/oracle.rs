use crate::data::DataSet;
use crate::linalg::{axpy, dot, scale};
use crate::losses::LossModel;

/// Gradient access that counts every per-sample gradient evaluated at a new
/// point.
pub(crate) struct CountingOracle<'a> {
    pub model: &'a LossModel,
    pub data: &'a DataSet,
    evals: u64,
}

impl<'a> CountingOracle<'a> {
    pub fn new(model: &'a LossModel, data: &'a DataSet) -> Self {
        Self { model, data, evals: 0 }
    }

    pub fn evals(&self) -> u64 {
        self.evals
    }

    pub fn passes(&self) -> f64 {
        self.evals as f64 / self.data.len() as f64
    }

    /// Gradient coefficient of sample `i` at `theta`; costs one evaluation.
    #[inline]
    pub fn coef(&mut self, i: usize, theta: &[f64]) -> f64 {
        self.evals += 1;
        self.model.grad_coef(dot(theta, self.data.x(i)), self.data.y(i))
    }

    /// Charges `n` evaluations for a gradient the caller computed itself.
    pub fn charge_full(&mut self) {
        self.evals += self.data.len() as u64;
    }

    /// `∇R_n(θ)` into `grad`, with every per-sample coefficient stored in
    /// `coefs`. Costs `n` evaluations.
    pub fn full_gradient(&mut self, theta: &[f64], coefs: &mut [f64], grad: &mut [f64]) {
        full_gradient_into(self.model, self.data, theta, coefs, grad);
        self.charge_full();
    }
}

/// Index-ordered accumulation shared by every full-gradient path so that
/// all of them agree bit for bit with [`crate::losses::batch_gradient`].
pub(crate) fn full_gradient_into(
    model: &LossModel,
    data: &DataSet,
    theta: &[f64],
    coefs: &mut [f64],
    grad: &mut [f64],
) {
    grad.iter_mut().for_each(|g| *g = 0.0);
    for (i, s) in data.samples().enumerate() {
        let c = model.grad_coef(dot(theta, s.x), s.y);
        coefs[i] = c;
        axpy(c, s.x, grad);
    }
    scale(1.0 / data.len() as f64, grad);
}
