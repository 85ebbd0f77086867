//! The two non-convex loss families and their value / gradient / Hessian
//! oracles.
//!
//! Both families are generalized linear: the per-sample loss depends on `θ`
//! only through the score `u = ⟨θ, x⟩`, so gradients are `ℓ'(u)·x` and
//! Hessians are `ℓ''(u)·x xᵀ`. The scalar derivatives are exposed directly
//! because the variance-reduced optimizers cache them instead of vectors.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::error::{invalid_input, invalid_param, Error, Result};
use crate::linalg::{self, dot, Matrix};
use crate::rng;

/// Largest dimension for which dense `p × p` Hessians are formed.
pub const MAX_DENSE_DIM: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// The logistic link `ζ(α) = 1 / (1 + e^{-α})`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SigmoidLink;

impl SigmoidLink {
    /// Value and first three derivatives. Branches on the sign of `α` so
    /// neither `ζ` nor `1 − ζ` is formed by cancellation.
    #[inline]
    pub fn eval(self, alpha: f64) -> SigmoidEval {
        let (value, comp) = if alpha >= 0.0 {
            let e = libm::exp(-alpha);
            (1.0 / (1.0 + e), e / (1.0 + e))
        } else {
            let e = libm::exp(alpha);
            (e / (1.0 + e), 1.0 / (1.0 + e))
        };
        let d1 = value * comp;
        SigmoidEval { value, d1, d2: d1 * (comp - value), d3: d1 * (1.0 - 6.0 * d1) }
    }
}

pub fn sigmoid_eval(alpha: f64) -> Result<SigmoidEval> {
    if !alpha.is_finite() {
        return Err(invalid_input!("sigmoid argument must be finite, got {alpha}"));
    }
    Ok(SigmoidLink.eval(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TukeyEval {
    pub rho: f64,
    pub psi: f64,
    pub psi_d1: f64,
    pub psi_d2: f64,
}

/// Tukey's bisquare loss with cutoff `t0`, normalized to saturate at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TukeyLoss {
    t0: f64,
}

impl TukeyLoss {
    /// Cutoff used in the robust-regression benchmarks.
    pub const DEFAULT_CUTOFF: f64 = 4.865;

    pub fn new(t0: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(invalid_param!("Tukey cutoff must be positive and finite, got {t0}"));
        }
        Ok(Self { t0 })
    }

    pub fn cutoff(&self) -> f64 {
        self.t0
    }

    /// `ρ`, `ψ = ρ'`, `ψ'` and `ψ''`. At `|t| = t0` the derivatives take
    /// their interior limits; for `ψ''` that limit is `±48/t0³`, not zero.
    #[inline]
    pub fn eval(&self, t: f64) -> TukeyEval {
        let t0 = self.t0;
        if t.abs() > t0 {
            return TukeyEval { rho: 1.0, psi: 0.0, psi_d1: 0.0, psi_d2: 0.0 };
        }
        let u = t / t0;
        let u2 = u * u;
        let w = 1.0 - u2;
        let t0sq = t0 * t0;
        TukeyEval {
            rho: 1.0 - w * w * w,
            psi: 6.0 * t * w * w / t0sq,
            psi_d1: 6.0 * w * (1.0 - 5.0 * u2) / t0sq,
            psi_d2: 24.0 * u * (5.0 * u2 - 3.0) / (t0sq * t0),
        }
    }

    #[inline]
    pub fn rho(&self, t: f64) -> f64 {
        if t.abs() >= self.t0 {
            return 1.0;
        }
        let u = t / self.t0;
        let w = 1.0 - u * u;
        1.0 - w * w * w
    }

    #[inline]
    pub fn psi(&self, t: f64) -> f64 {
        if t.abs() >= self.t0 {
            return 0.0;
        }
        let u = t / self.t0;
        let w = 1.0 - u * u;
        6.0 * t * w * w / (self.t0 * self.t0)
    }

    #[inline]
    pub fn psi_d1(&self, t: f64) -> f64 {
        if t.abs() >= self.t0 {
            return 0.0;
        }
        let u2 = (t / self.t0) * (t / self.t0);
        6.0 * (1.0 - u2) * (1.0 - 5.0 * u2) / (self.t0 * self.t0)
    }
}

pub fn tukey_eval(t: f64, t0: f64) -> Result<TukeyEval> {
    Ok(TukeyLoss::new(t0)?.eval(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Classification,
    Regression,
}

/// A problem family together with its scalar link or loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossModel {
    /// `(y − ζ(⟨θ,x⟩))²` with `y ∈ {0, 1}`.
    BinaryClassification(SigmoidLink),
    /// `ρ(y − ⟨θ,x⟩)` with Tukey's bisquare `ρ`.
    RobustRegression(TukeyLoss),
}

#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub y: f64,
}

impl LossModel {
    pub fn classification() -> Self {
        Self::BinaryClassification(SigmoidLink)
    }

    pub fn robust_regression(t0: f64) -> Result<Self> {
        Ok(Self::RobustRegression(TukeyLoss::new(t0)?))
    }

    pub fn family(&self) -> Family {
        match self {
            Self::BinaryClassification(_) => Family::Classification,
            Self::RobustRegression(_) => Family::Regression,
        }
    }

    /// Loss as a function of the score `u = ⟨θ,x⟩`.
    #[inline]
    pub fn loss_at(&self, u: f64, y: f64) -> f64 {
        match self {
            Self::BinaryClassification(link) => {
                let r = y - link.eval(u).value;
                r * r
            }
            Self::RobustRegression(tukey) => tukey.rho(y - u),
        }
    }

    /// `dℓ/du`; the sample gradient is this coefficient times `x`.
    #[inline]
    pub fn grad_coef(&self, u: f64, y: f64) -> f64 {
        match self {
            Self::BinaryClassification(link) => {
                let s = link.eval(u);
                2.0 * (s.value - y) * s.d1
            }
            Self::RobustRegression(tukey) => -tukey.psi(y - u),
        }
    }

    /// `d²ℓ/du²`; the sample Hessian is this coefficient times `x xᵀ`.
    #[inline]
    pub fn hess_coef(&self, u: f64, y: f64) -> f64 {
        match self {
            Self::BinaryClassification(link) => {
                let s = link.eval(u);
                2.0 * (s.d1 * s.d1 + (s.value - y) * s.d2)
            }
            Self::RobustRegression(tukey) => tukey.psi_d1(y - u),
        }
    }

    /// Rejects targets the family cannot interpret.
    pub fn check_targets(&self, data: &DataSet) -> Result<()> {
        if let Self::BinaryClassification(_) = self {
            if let Some(i) = data.targets().iter().position(|&y| y != 0.0 && y != 1.0) {
                return Err(invalid_input!(
                    "classification targets must be 0 or 1; row {i} has {}",
                    data.targets()[i]
                ));
            }
        }
        Ok(())
    }

    pub fn sample_loss(&self, theta: &[f64], s: Sample<'_>) -> Result<f64> {
        check_dims(theta, s.x)?;
        Ok(self.loss_at(dot(theta, s.x), s.y))
    }

    pub fn sample_gradient(&self, theta: &[f64], s: Sample<'_>) -> Result<Vec<f64>> {
        check_dims(theta, s.x)?;
        let c = self.grad_coef(dot(theta, s.x), s.y);
        Ok(s.x.iter().map(|xi| c * xi).collect())
    }
}

fn check_dims(theta: &[f64], x: &[f64]) -> Result<()> {
    if theta.len() != x.len() {
        return Err(invalid_input!(
            "parameter has dimension {} but sample has {}",
            theta.len(),
            x.len()
        ));
    }
    Ok(())
}

fn check_theta(theta: &[f64], data: &DataSet) -> Result<()> {
    if theta.len() != data.dim() {
        return Err(invalid_input!(
            "parameter has dimension {} but data has {} features",
            theta.len(),
            data.dim()
        ));
    }
    Ok(())
}

/// `R_n(θ)`: mean sample loss, summed in index order.
pub fn batch_objective(model: &LossModel, theta: &[f64], data: &DataSet) -> Result<f64> {
    check_theta(theta, data)?;
    let sum = data
        .samples()
        .fold(0.0, |acc, s| acc + model.loss_at(dot(theta, s.x), s.y));
    Ok(sum / data.len() as f64)
}

/// `∇R_n(θ)`, accumulated in index order.
pub fn batch_gradient(model: &LossModel, theta: &[f64], data: &DataSet) -> Result<Vec<f64>> {
    check_theta(theta, data)?;
    let mut g = vec![0.0; data.dim()];
    for s in data.samples() {
        let c = model.grad_coef(dot(theta, s.x), s.y);
        linalg::axpy(c, s.x, &mut g);
    }
    linalg::scale(1.0 / data.len() as f64, &mut g);
    Ok(g)
}

/// `∇²R_n(θ)` as a dense symmetric matrix. Refuses `p > MAX_DENSE_DIM`.
pub fn batch_hessian(model: &LossModel, theta: &[f64], data: &DataSet) -> Result<Matrix> {
    check_theta(theta, data)?;
    let p = data.dim();
    if p > MAX_DENSE_DIM {
        return Err(Error::UnsupportedSize(alloc::format!(
            "dense Hessian limited to p <= {MAX_DENSE_DIM}, got {p}"
        )));
    }
    let mut h = Matrix::zeros(p, p);
    for s in data.samples() {
        let c = model.hess_coef(dot(theta, s.x), s.y);
        if c == 0.0 {
            continue;
        }
        for j in 0..p {
            let cj = c * s.x[j];
            let row = h.row_mut(j);
            for k in j..p {
                row[k] += cj * s.x[k];
            }
        }
    }
    let inv_n = 1.0 / data.len() as f64;
    for j in 0..p {
        for k in j..p {
            let v = h[(j, k)] * inv_n;
            h[(j, k)] = v;
            h[(k, j)] = v;
        }
    }
    Ok(h)
}

/// Uniform draw from the ball `B(0, radius)` in `p` dimensions.
pub(crate) fn uniform_in_ball(p: usize, radius: f64, rng: &mut rng::Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let n = linalg::norm2(&v);
    let u: f64 = rng.random();
    let r = radius * libm::pow(u, 1.0 / p as f64);
    linalg::scale(if n > 0.0 { r / n } else { 0.0 }, &mut v);
    v
}

/// Empirical smoothness constant: `1.1 ×` the largest per-sample Hessian
/// operator norm over `probes` points drawn uniformly from `B(0, radius)`.
///
/// Per-sample Hessians are rank one, applied matrix-free inside the power
/// iteration.
pub fn smoothness_estimate(
    model: &LossModel,
    data: &DataSet,
    probes: usize,
    radius: f64,
    seed: u64,
) -> Result<f64> {
    if probes == 0 {
        return Err(invalid_param!("smoothness_estimate needs at least one probe"));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid_param!("probe radius must be finite and non-negative, got {radius}"));
    }
    let mut rng = rng::stream(seed, rng::streams::PROBES);
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        let theta = uniform_in_ball(data.dim(), radius, &mut rng);
        for s in data.samples() {
            best = best.max(sample_hessian_norm(model, &theta, s));
        }
    }
    Ok(1.1 * best)
}

/// Operator norm of `ℓ''(u)·x xᵀ` by power iteration.
pub fn sample_hessian_norm(model: &LossModel, theta: &[f64], s: Sample<'_>) -> f64 {
    let c = model.hess_coef(dot(theta, s.x), s.y);
    if c == 0.0 || s.x.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    linalg::operator_norm_with(
        s.x.len(),
        |v, out| {
            let k = c * dot(s.x, v);
            for (o, xi) in out.iter_mut().zip(s.x) {
                *o = k * xi;
            }
        },
        1e-14,
        100,
    )
    .value
}
