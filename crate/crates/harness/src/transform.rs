//! Dataset preprocessing applied before optimization.

use ncvx_core::data::Corruption;
use ncvx_core::datagen::{add_mixture_noise, NoiseSpec};
use ncvx_core::DataSet;

pub use ncvx_core::normalize_features;

use crate::error::Result;

/// Adds `(1 − δ)·N(0,1) + δ·N(0,σ²)` noise to every target.
pub fn corrupt_targets(data: &DataSet, noise: &NoiseSpec, seed: u64) -> Result<DataSet> {
    let (features, mut targets, mut meta) = data.clone().into_parts();
    add_mixture_noise(&mut targets, noise, seed)?;
    meta.corruption = Some(Corruption { noise: *noise, seed });
    Ok(DataSet::new(features, targets, meta)?)
}
