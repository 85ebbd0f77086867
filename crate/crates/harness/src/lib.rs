//! File formats, reference optima, step-size search and experiment
//! orchestration around `ncvx-core`.

pub mod clock;
pub mod error;
pub mod experiment;
pub mod io;
pub mod landscape;
pub mod reference;
pub mod search;
pub mod transform;

pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, AlgorithmSpec, DataConfig, ExperimentConfig, ExperimentSummary};
pub use io::{load_dataset, Format, LabelMode, LoadOptions};
pub use reference::{reference_optimum, ReferenceOptimum};
pub use search::{grid_search_step, paper_step_grid};
pub use transform::{corrupt_targets, normalize_features};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
