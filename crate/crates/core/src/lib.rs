//! Shapelet mining and shapelet-driven counterfactual explanations for
//! multivariate time-series classifiers.
//!
//! The pipeline: [`mining`] finds class-shapelets in a labeled training set,
//! [`cfgen`] perturbs a query instance by removing shapelets of its current
//! class and introducing shapelets of a target class until a black-box
//! [`blackbox::Classifier`] changes its decision, and [`eval`] scores the
//! result for proximity, sparsity and plausibility.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` case.

pub mod blackbox;
pub mod cfgen;
pub mod dataset;
pub mod eval;
pub mod mining;
pub mod synthetic;
mod parallel;
mod scalar;

pub use parallel::par_map;
pub use scalar::Scalar;

pub type Dataset = dataset::MtsDataset<f64>;
pub type Instance = dataset::MtsInstance<f64>;
pub type Store = mining::ShapeletStore<f64>;

pub type Dataset32 = dataset::MtsDataset<f32>;
pub type Instance32 = dataset::MtsInstance<f32>;
pub type Store32 = mining::ShapeletStore<f32>;
