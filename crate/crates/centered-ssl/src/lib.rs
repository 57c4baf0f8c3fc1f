//! Graph-based semi-supervised learning with centered similarities.
//!
//! The library builds similarity graphs from feature vectors, solves Laplacian
//! and centered-similarity regularization problems, runs spectral clustering,
//! evaluates closed-form high-dimensional performance predictions for Gaussian
//! mixtures, and drives seeded Monte Carlo experiments comparing both.
//!
//! Graph, solver and spectral routines are generic over [`Scalar`] (`f32` or
//! `f64`); the asymptotic predictors and the experiment harness work in `f64`.

pub mod asymptotics;
pub mod datagen;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod solvers;
pub mod spectral;

mod error;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Graph = graph::WeightedGraph<f64>;
pub type Graph32 = graph::WeightedGraph<f32>;
pub type Dataset = graph::SplitDataset<f64>;
pub type Dataset32 = graph::SplitDataset<f32>;
pub type Scores = solvers::ScoreVector<f64>;
