use serde::{Deserialize, Serialize};

use super::{BallConstraint, GdConfig, OutputMode, SagaConfig, SvrgConfig};
use crate::error::{invalid_param, Result};
use crate::losses::Family;

/// Step sizes, epoch lengths and batch sizes prescribed by the convergence
/// theory, given a smoothness estimate `L` and a guess of `L/μ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremSchedule {
    pub gd_step: f64,
    pub svrg_step: f64,
    pub svrg_epoch_len: usize,
    pub svrg_total_steps: usize,
    pub saga_step: f64,
    pub saga_batch: usize,
    pub saga_steps: usize,
}

/// Smallest integer `b` with `b³ ≥ k³·n²`, i.e. `⌈k·n^{2/3}⌉` without
/// floating-point rounding at perfect cubes.
fn ceil_scaled_two_thirds(n: usize, k: u128) -> usize {
    let target = k * k * k * (n as u128) * (n as u128);
    let guess = (k as f64) * libm::cbrt(n as f64 * n as f64);
    let mut b = (libm::floor(guess) as u128).saturating_sub(2);
    while b * b * b < target {
        b += 1;
    }
    b as usize
}

/// Theorem-derived defaults. The unspecified constant in the SVRG step
/// budget is taken as 1, and `T` is raised to one full epoch if the formula
/// gives less.
pub fn default_hyperparams(family: Family, n: usize, smoothness: f64, cond_guess: f64) -> Result<TheoremSchedule> {
    if n == 0 {
        return Err(invalid_param!("sample size must be at least 1"));
    }
    if !(smoothness > 0.0 && smoothness.is_finite()) {
        return Err(invalid_param!("smoothness estimate must be positive, got {smoothness}"));
    }
    if !(cond_guess >= 1.0 && cond_guess.is_finite()) {
        return Err(invalid_param!("condition-number guess must be >= 1, got {cond_guess}"));
    }
    let cbrt_n = libm::cbrt(n as f64);
    let n23 = cbrt_n * cbrt_n;
    let (epoch_len, batch_scale) = match family {
        Family::Classification => ((5 * n) / 4, 1),
        Family::Regression => ((5 * n) / 2, 2),
    };
    let epoch_len = epoch_len.max(1);
    let total = libm::ceil(n23 * cond_guess * cond_guess) as usize;
    Ok(TheoremSchedule {
        gd_step: 1.0 / (2.0 * smoothness),
        svrg_step: 2.0 / (5.0 * smoothness * n23),
        svrg_epoch_len: epoch_len,
        svrg_total_steps: total.max(epoch_len),
        saga_step: 1.0 / (5.0 * smoothness),
        saga_batch: ceil_scaled_two_thirds(n, batch_scale).min(n),
        saga_steps: libm::ceil(15.0 * cond_guess * cond_guess) as usize,
    })
}

impl TheoremSchedule {
    pub fn gd(&self, max_passes: usize, constraint: BallConstraint) -> GdConfig {
        GdConfig { constraint, ..GdConfig::new(self.gd_step, max_passes) }
    }

    pub fn svrg(&self, seed: u64, constraint: BallConstraint) -> SvrgConfig {
        SvrgConfig {
            constraint,
            output: OutputMode::LastIterate,
            ..SvrgConfig::new(self.svrg_epoch_len, self.svrg_total_steps, self.svrg_step, seed)
        }
    }

    pub fn saga(&self, seed: u64, constraint: BallConstraint) -> SagaConfig {
        SagaConfig { constraint, ..SagaConfig::new(self.saga_steps, self.saga_batch, self.saga_step, seed) }
    }
}
