//! Empirical landscape diagnostics: uniform deviation of the empirical
//! gradient and Hessian from their population counterparts, and the
//! directional-curvature constants of the population loss.
//!
//! The population loss has no closed form, so a large Monte Carlo sample
//! from the same generator stands in for it. Suprema over the ball are
//! approximated by maxima over a finite probe grid and are therefore lower
//! bounds.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::DataSet;
use crate::datagen::GeneratorSpec;
use crate::error::{invalid_input, invalid_param, Result};
use crate::linalg::{self, dot, norm2, Matrix};
use crate::losses::{self, batch_gradient, batch_hessian, LossModel};
use crate::rng::{self, derive_seed};

/// Power-iteration settings used for every operator norm in this module.
pub const OPNORM_TOL: f64 = 1e-12;
pub const OPNORM_MAX_ITERS: usize = 20_000;

/// Radial shells times random directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub radii: Vec<f64>,
    pub directions: usize,
    pub seed: u64,
}

impl ProbeGrid {
    pub fn len(&self) -> usize {
        self.radii.len() * self.directions
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Probe points in `p` dimensions. Each direction comes from its own
    /// stream derived from `(seed, probe index)`. With `ball_radius` given,
    /// every shell must lie inside it.
    pub fn points(&self, p: usize, ball_radius: Option<f64>) -> Result<Vec<Vec<f64>>> {
        if self.is_empty() {
            return Err(invalid_param!("probe grid is empty"));
        }
        for &r in &self.radii {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid_param!("probe radii must be positive, got {r}"));
            }
            if ball_radius.is_some_and(|b| r > b) {
                return Err(invalid_param!("probe radius {r} exceeds the ball radius"));
            }
        }
        let mut out = Vec::with_capacity(self.len());
        for (k, &r) in self.radii.iter().enumerate() {
            for d in 0..self.directions {
                let idx = (k * self.directions + d) as u64;
                let mut rng = rng::stream(derive_seed(self.seed, idx), rng::streams::PROBES);
                out.push(random_direction(p, &mut rng).into_iter().map(|v| v * r).collect());
            }
        }
        Ok(out)
    }
}

fn random_direction(p: usize, rng: &mut rng::Rng) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm2(&v);
        if n > 0.0 {
            linalg::scale(1.0 / n, &mut v);
            return v;
        }
    }
}

/// A large sample from a generator, standing in for the population.
#[derive(Debug, Clone)]
pub struct PopulationOracle {
    spec: GeneratorSpec,
    n_pop: usize,
    seed: u64,
    sample: DataSet,
}

/// Monte Carlo gradient with the ℓ₂ norm of its standard error,
/// `sqrt(Σ_j Var(g_j) / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McGradient {
    pub mean: Vec<f64>,
    pub std_error: f64,
}

impl PopulationOracle {
    /// Draws the Monte Carlo sample. `seed` should differ from the seed of
    /// any empirical dataset under study.
    pub fn new(spec: GeneratorSpec, n_pop: usize, seed: u64) -> Result<Self> {
        if n_pop == 0 {
            return Err(invalid_param!("Monte Carlo size must be at least 1"));
        }
        let sample = spec.generate(n_pop, seed)?;
        Ok(Self { spec, n_pop, seed, sample })
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    pub fn n_pop(&self) -> usize {
        self.n_pop
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample(&self) -> &DataSet {
        &self.sample
    }

    /// Whether the Monte Carlo sample is at least ten times an empirical
    /// sample of size `n`.
    pub fn is_large_enough_for(&self, n: usize) -> bool {
        self.n_pop >= 10 * n
    }

    pub fn gradient(&self, model: &LossModel, theta: &[f64]) -> Result<McGradient> {
        population_gradient_mc(model, theta, self)
    }

    pub fn hessian(&self, model: &LossModel, theta: &[f64]) -> Result<Matrix> {
        batch_hessian(model, theta, &self.sample)
    }
}

pub fn population_gradient_mc(model: &LossModel, theta: &[f64], oracle: &PopulationOracle) -> Result<McGradient> {
    let data = &oracle.sample;
    let mean = batch_gradient(model, theta, data)?;
    let mut sq = 0.0;
    for s in data.samples() {
        let c = model.grad_coef(dot(theta, s.x), s.y);
        sq += s.x.iter().zip(&mean).map(|(x, m)| (c * x - m) * (c * x - m)).sum::<f64>();
    }
    let n = data.len() as f64;
    let var_sum = if n > 1.0 { sq / (n - 1.0) } else { 0.0 };
    Ok(McGradient { mean, std_error: libm::sqrt(var_sum / n) })
}

fn check_compatible(data: &DataSet, oracle: &PopulationOracle) -> Result<()> {
    if data.dim() != oracle.spec.dim() {
        return Err(invalid_input!(
            "dataset has {} features but the population has {}",
            data.dim(),
            oracle.spec.dim()
        ));
    }
    Ok(())
}

/// Per-probe `‖∇R_n(θ) − ∇R(θ)‖₂`.
pub fn grad_deviations(model: &LossModel, data: &DataSet, oracle: &PopulationOracle, probes: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_compatible(data, oracle)?;
    probes
        .iter()
        .map(|theta| {
            let emp = batch_gradient(model, theta, data)?;
            let pop = batch_gradient(model, theta, &oracle.sample)?;
            Ok(norm2(&linalg::sub(&emp, &pop)))
        })
        .collect()
}

/// `max_θ ‖∇R_n(θ) − ∇R(θ)‖₂` over the grid: a lower bound on the supremum
/// over the ball.
pub fn grad_deviation_sup(model: &LossModel, data: &DataSet, oracle: &PopulationOracle, grid: &ProbeGrid) -> Result<f64> {
    let probes = grid.points(data.dim(), None)?;
    Ok(grad_deviations(model, data, oracle, &probes)?.into_iter().fold(0.0, f64::max))
}

/// Per-probe `‖∇²R_n(θ) − ∇²R(θ)‖_op`.
pub fn hess_deviations(model: &LossModel, data: &DataSet, oracle: &PopulationOracle, probes: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_compatible(data, oracle)?;
    probes
        .iter()
        .map(|theta| {
            let emp = batch_hessian(model, theta, data)?;
            let pop = batch_hessian(model, theta, &oracle.sample)?;
            Ok(linalg::operator_norm(&emp.sub(&pop)?, OPNORM_TOL, OPNORM_MAX_ITERS)?.value)
        })
        .collect()
}

pub fn hess_deviation_sup(model: &LossModel, data: &DataSet, oracle: &PopulationOracle, grid: &ProbeGrid) -> Result<f64> {
    let probes = grid.points(data.dim(), None)?;
    Ok(hess_deviations(model, data, oracle, &probes)?.into_iter().fold(0.0, f64::max))
}

/// `min_θ ⟨θ − θ*, ∇R(θ)⟩ / ‖θ − θ*‖²` over the probes. Negative values are
/// returned as they are.
pub fn mu0_estimate(model: &LossModel, oracle: &PopulationOracle, theta_star: &[f64], probes: &[Vec<f64>]) -> Result<f64> {
    if probes.is_empty() {
        return Err(invalid_param!("mu0 estimate needs at least one probe"));
    }
    let mut best = f64::INFINITY;
    for theta in probes {
        if theta.len() != theta_star.len() {
            return Err(invalid_input!("probe dimension does not match the ground truth"));
        }
        let diff = linalg::sub(theta, theta_star);
        let d2 = dot(&diff, &diff);
        if d2 == 0.0 {
            return Err(invalid_input!("probes must exclude the ground truth itself"));
        }
        let g = batch_gradient(model, theta, &oracle.sample)?;
        best = best.min(dot(&diff, &g) / d2);
    }
    Ok(best)
}

/// Probe points for [`kappa0_estimate`]: the centre first, then uniform
/// draws from `B(θ*, radius)`.
pub fn kappa0_probes(theta_star: &[f64], radius: f64, probes: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(probes);
    for k in 0..probes {
        if k == 0 {
            out.push(theta_star.to_vec());
            continue;
        }
        let mut rng = rng::stream(derive_seed(seed, k as u64), rng::streams::PROBES);
        let offset = losses::uniform_in_ball(theta_star.len(), radius, &mut rng);
        out.push(theta_star.iter().zip(&offset).map(|(a, b)| a + b).collect());
    }
    out
}

/// `min λ_min(∇²R(θ))` over probes in `B(θ*, radius)`.
pub fn kappa0_estimate(
    model: &LossModel,
    oracle: &PopulationOracle,
    theta_star: &[f64],
    radius: f64,
    probes: usize,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid_param!("neighbourhood radius must be positive, got {radius}"));
    }
    if probes == 0 {
        return Err(invalid_param!("kappa0 estimate needs at least one probe"));
    }
    let mut best = f64::INFINITY;
    for theta in kappa0_probes(theta_star, radius, probes, seed) {
        let h = oracle.hessian(model, &theta)?;
        let eig = linalg::symmetric_eigenvalues(&h)?;
        best = best.min(eig[0]);
    }
    Ok(best)
}

/// Settings for a full landscape report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSettings {
    pub grid: ProbeGrid,
    /// Radius of the neighbourhood of `θ*` searched for `κ₀`.
    pub kappa_radius: f64,
    pub kappa_probes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub grad_dev_sup: f64,
    pub hess_dev_sup: f64,
    pub mu0_hat: f64,
    pub kappa0_hat: f64,
    /// Largest Monte Carlo standard error of the population gradient over
    /// the grid.
    pub mc_std_error: f64,
    pub grid: ProbeGrid,
    pub probes: usize,
    pub kappa_radius: f64,
    pub kappa_probes: usize,
    pub n: usize,
    pub p: usize,
    pub n_pop: usize,
    pub data_seed: Option<u64>,
    pub population_seed: u64,
    pub warnings: Vec<String>,
}

pub fn landscape_report(
    model: &LossModel,
    data: &DataSet,
    oracle: &PopulationOracle,
    theta_star: &[f64],
    settings: &LandscapeSettings,
) -> Result<LandscapeReport> {
    let probes = settings.grid.points(data.dim(), None)?;
    let grad_dev = grad_deviations(model, data, oracle, &probes)?;
    let hess_dev = hess_deviations(model, data, oracle, &probes)?;
    let mut mc_std_error: f64 = 0.0;
    for theta in &probes {
        mc_std_error = mc_std_error.max(population_gradient_mc(model, theta, oracle)?.std_error);
    }
    let mu_probes: Vec<Vec<f64>> = probes
        .iter()
        .filter(|t| t.as_slice() != theta_star)
        .cloned()
        .collect();
    let mu0_hat = mu0_estimate(model, oracle, theta_star, &mu_probes)?;
    let kappa0_hat = kappa0_estimate(
        model,
        oracle,
        theta_star,
        settings.kappa_radius,
        settings.kappa_probes,
        settings.seed,
    )?;

    let mut warnings = Vec::new();
    if !oracle.is_large_enough_for(data.len()) {
        warnings.push(alloc::format!(
            "Monte Carlo size {} is below 10 x n = {}",
            oracle.n_pop(),
            10 * data.len()
        ));
    }
    if mu0_hat <= 0.0 {
        warnings.push(alloc::format!("non-positive directional curvature estimate mu0 = {mu0_hat:e}"));
    }
    if kappa0_hat <= 0.0 {
        warnings.push(alloc::format!("non-positive local curvature estimate kappa0 = {kappa0_hat:e}"));
    }

    Ok(LandscapeReport {
        grad_dev_sup: grad_dev.into_iter().fold(0.0, f64::max),
        hess_dev_sup: hess_dev.into_iter().fold(0.0, f64::max),
        mu0_hat,
        kappa0_hat,
        mc_std_error,
        probes: probes.len(),
        grid: settings.grid.clone(),
        kappa_radius: settings.kappa_radius,
        kappa_probes: settings.kappa_probes,
        n: data.len(),
        p: data.dim(),
        n_pop: oracle.n_pop(),
        data_seed: data.meta().seed,
        population_seed: oracle.seed(),
        warnings,
    })
}
