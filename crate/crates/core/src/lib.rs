//! Non-convex M-estimation with variance-reduced first-order methods.
//!
//! Two loss families — squared-sigmoid binary classification and Tukey
//! bisquare robust regression — are minimized over an optional ℓ₂ ball by
//! projected batch gradient descent, SGD, SVRG and minibatch SAGA. The crate
//! also generates the synthetic benchmark data and estimates, by Monte
//! Carlo, how closely the empirical loss landscape tracks the population one.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, timing and
//! orchestration live in the companion harness crate.

#![no_std]
#![warn(rust_2018_idioms, unused_qualifications)]

extern crate alloc;

pub mod data;
pub mod datagen;
pub mod error;
pub mod landscape;
pub mod linalg;
pub mod losses;
pub mod optim;
pub mod rng;

pub use data::{normalize_features, DataSet, Provenance};
pub use error::{Error, Result};
pub use losses::{batch_gradient, batch_hessian, batch_objective, Family, LossModel, Sample};
pub use optim::{Algorithm, AlgorithmConfig, BallConstraint, RunContext, TrainTrace};

/// Crate version, recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
