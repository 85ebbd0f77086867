//! Synthetic benchmark data: Gaussian features with a prescribed covariance
//! spectrum, Bernoulli ground-truth parameters, logistic labels and
//! Gaussian-mixture regression noise.
//!
//! Every generator is a pure function of its parameters and seed.

use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{DataSet, DataSource, Provenance};
use crate::error::{invalid_input, invalid_param, Result};
use crate::linalg::{self, dot, Matrix};
use crate::losses::{Family, SigmoidLink};
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub p: usize,
    /// `λmax / λmin`.
    pub cond_ratio: f64,
    /// `λmin`.
    pub scale: f64,
    #[serde(default)]
    pub rotate: bool,
    #[serde(default)]
    pub seed: u64,
}

impl CovarianceSpec {
    pub fn new(p: usize, cond_ratio: f64) -> Self {
        Self { p, cond_ratio, scale: 1.0, rotate: false, seed: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(invalid_param!("covariance dimension must be at least 1"));
        }
        if !(self.cond_ratio >= 1.0 && self.cond_ratio.is_finite()) {
            return Err(invalid_param!("condition ratio must be >= 1, got {}", self.cond_ratio));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(invalid_param!("covariance scale must be positive, got {}", self.scale));
        }
        if self.p == 1 && self.cond_ratio != 1.0 {
            return Err(invalid_param!("a 1-dimensional covariance has condition ratio 1"));
        }
        Ok(())
    }

    /// Eigenvalues, log-spaced from `scale` to `scale · cond_ratio`, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let p = self.p;
        if p == 1 {
            return Ok(alloc::vec![self.scale]);
        }
        let log_ratio = libm::log(self.cond_ratio);
        Ok((0..p)
            .map(|k| {
                if k == p - 1 {
                    self.scale * self.cond_ratio
                } else {
                    self.scale * libm::exp(log_ratio * k as f64 / (p - 1) as f64)
                }
            })
            .collect())
    }
}

/// Symmetric positive-definite covariance with the spectrum of
/// [`CovarianceSpec::eigenvalues`], optionally conjugated by a seeded random
/// rotation.
pub fn make_covariance(spec: &CovarianceSpec) -> Result<Matrix> {
    let eig = spec.eigenvalues()?;
    if !spec.rotate {
        return Ok(Matrix::from_diagonal(&eig));
    }
    let p = spec.p;
    let mut rng = rng::stream(spec.seed, streams::ROTATION);
    let q = linalg::random_orthogonal(p, &mut rng);
    let mut cov = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v: f64 = (0..p).map(|k| q[(i, k)] * eig[k] * q[(j, k)]).sum();
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    Ok(cov)
}

/// Mixture noise `(1 − δ)·N(0, 1) + δ·N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub delta: f64,
    pub sigma: f64,
}

impl NoiseSpec {
    pub fn new(delta: f64, sigma: f64) -> Result<Self> {
        let s = Self { delta, sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid_param!("mixture weight must lie in [0, 1], got {}", self.delta));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid_param!("outlier scale must be positive, got {}", self.sigma));
        }
        Ok(())
    }

    /// `(1 − δ) + δσ²`
    pub fn variance(&self) -> f64 {
        (1.0 - self.delta) + self.delta * self.sigma * self.sigma
    }

    /// One draw: the component is picked by its own uniform, then a
    /// standard normal is scaled. Both are always consumed so the stream
    /// stays aligned across different `δ`.
    #[inline]
    pub fn draw(&self, rng: &mut rng::Rng) -> f64 {
        let u: f64 = rng.random();
        let z: f64 = rng.sample(StandardNormal);
        if u < self.delta {
            self.sigma * z
        } else {
            z
        }
    }
}

/// Unit-norm parameter with i.i.d. Bernoulli(1/2) entries. The all-zero draw
/// (probability `2^{-p}`) is redrawn.
pub fn sample_theta_star(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, streams::THETA_STAR);
    loop {
        let mut theta: Vec<f64> = (0..p).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
        let n = linalg::norm2(&theta);
        if n > 0.0 || p == 0 {
            linalg::scale(1.0 / n, &mut theta);
            return theta;
        }
    }
}

/// `n` rows drawn i.i.d. from `N(0, cov)` as `L z` with `L` the Cholesky
/// factor of `cov`.
pub fn sample_features(n: usize, cov: &Matrix, seed: u64) -> Result<Matrix> {
    if !cov.is_symmetric() {
        return Err(invalid_input!("covariance must be symmetric"));
    }
    let l = linalg::cholesky(cov)?;
    let p = cov.rows();
    let mut rng = rng::stream(seed, streams::FEATURES);
    let mut out = Matrix::zeros(n, p);
    let mut z = alloc::vec![0.0; p];
    for i in 0..n {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        let row = out.row_mut(i);
        for (a, r) in row.iter_mut().enumerate() {
            *r = dot(&l.row(a)[..=a], &z[..=a]);
        }
    }
    Ok(out)
}

fn check_dims(features: &Matrix, theta_star: &[f64]) -> Result<()> {
    if features.cols() != theta_star.len() {
        return Err(invalid_input!(
            "features have {} columns but parameter has {} entries",
            features.cols(),
            theta_star.len()
        ));
    }
    Ok(())
}

/// `y_i ~ Bernoulli(ζ(⟨θ*, x_i⟩))`.
pub fn label_binary(features: &Matrix, theta_star: &[f64], seed: u64) -> Result<Vec<f64>> {
    check_dims(features, theta_star)?;
    let mut rng = rng::stream(seed, streams::LABELS);
    Ok(features
        .iter_rows()
        .map(|x| {
            let prob = SigmoidLink.eval(dot(theta_star, x)).value;
            let u: f64 = rng.random();
            if u < prob {
                1.0
            } else {
                0.0
            }
        })
        .collect())
}

/// `y_i = ⟨θ*, x_i⟩ + ε_i` with mixture noise.
pub fn label_regression(
    features: &Matrix,
    theta_star: &[f64],
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Vec<f64>> {
    check_dims(features, theta_star)?;
    noise.validate()?;
    let mut rng = rng::stream(seed, streams::LABELS);
    Ok(features
        .iter_rows()
        .map(|x| dot(theta_star, x) + noise.draw(&mut rng))
        .collect())
}

/// Adds mixture noise to existing targets in place.
pub fn add_mixture_noise(targets: &mut [f64], noise: &NoiseSpec, seed: u64) -> Result<()> {
    noise.validate()?;
    let mut rng = rng::stream(seed, streams::NOISE);
    for y in targets.iter_mut() {
        *y += noise.draw(&mut rng);
    }
    Ok(())
}

/// Label model of a synthetic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LabelModel {
    Classification,
    Regression { noise: NoiseSpec },
}

impl LabelModel {
    pub fn family(&self) -> Family {
        match self {
            Self::Classification => Family::Classification,
            Self::Regression { .. } => Family::Regression,
        }
    }
}

/// Full description of a synthetic data-generating process. The ground
/// truth is fixed by `theta_seed`; each call to [`GeneratorSpec::generate`]
/// draws a fresh sample from the same distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub labels: LabelModel,
    pub covariance: CovarianceSpec,
    pub theta_seed: u64,
}

impl GeneratorSpec {
    pub fn dim(&self) -> usize {
        self.covariance.p
    }

    pub fn theta_star(&self) -> Vec<f64> {
        sample_theta_star(self.covariance.p, self.theta_seed)
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<DataSet> {
        self.generate_with_theta(n, seed, &self.theta_star())
    }

    /// Same as [`generate`](Self::generate) with an explicit ground truth.
    pub fn generate_with_theta(&self, n: usize, seed: u64, theta_star: &[f64]) -> Result<DataSet> {
        if n == 0 {
            return Err(invalid_param!("sample size must be at least 1"));
        }
        let cov = make_covariance(&self.covariance)?;
        let features = sample_features(n, &cov, seed)?;
        let targets = match &self.labels {
            LabelModel::Classification => label_binary(&features, theta_star, seed)?,
            LabelModel::Regression { noise } => label_regression(&features, theta_star, noise, seed)?,
        };
        let meta = Provenance {
            source: DataSource::Synthetic { spec: *self },
            seed: Some(seed),
            ..Provenance::default()
        };
        DataSet::new(features, targets, meta)
    }
}
