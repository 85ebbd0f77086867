//! Landscape diagnostics from a JSON configuration.

use ncvx_core::datagen::GeneratorSpec;
use ncvx_core::landscape::{landscape_report, LandscapeReport, LandscapeSettings, PopulationOracle};
use ncvx_core::losses::TukeyLoss;
use ncvx_core::rng::derive_seed;
use ncvx_core::{Family, LossModel};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    pub spec: GeneratorSpec,
    pub n: usize,
    pub n_pop: usize,
    #[serde(default = "default_cutoff")]
    pub tukey_cutoff: f64,
    pub settings: LandscapeSettings,
    #[serde(default)]
    pub seed: u64,
    /// Permit a Monte Carlo sample smaller than ten times `n`.
    #[serde(default)]
    pub allow_small_population: bool,
}

fn default_cutoff() -> f64 {
    TukeyLoss::DEFAULT_CUTOFF
}

/// Report plus the metadata of the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StampedReport {
    pub timestamp: String,
    pub version: String,
    #[serde(flatten)]
    pub report: LandscapeReport,
}

pub fn run_landscape(cfg: &LandscapeConfig) -> Result<StampedReport> {
    if !cfg.allow_small_population && cfg.n_pop < 10 * cfg.n {
        return Err(HarnessError::Config(format!(
            "Monte Carlo size {} must be at least 10 x n = {}",
            cfg.n_pop,
            10 * cfg.n
        )));
    }
    let model = match cfg.spec.labels.family() {
        Family::Classification => LossModel::classification(),
        Family::Regression => LossModel::robust_regression(cfg.tukey_cutoff)?,
    };
    let data = cfg.spec.generate(cfg.n, derive_seed(cfg.seed, 1))?;
    let oracle = PopulationOracle::new(cfg.spec, cfg.n_pop, derive_seed(cfg.seed, 2))?;
    let report = landscape_report(&model, &data, &oracle, &cfg.spec.theta_star(), &cfg.settings)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    Ok(StampedReport {
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        version: crate::VERSION.to_owned(),
        report,
    })
}
