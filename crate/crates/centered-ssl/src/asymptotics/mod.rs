//! Large-dimensional performance predictions for two-class Gaussian mixtures.
//!
//! Scores of Laplacian and centered regularization become asymptotically
//! Gaussian per class when `n_l/p → c_l` and `n_u/p → c_u`; this module
//! evaluates the limiting means, variances and accuracies, plus the scalar
//! overlap fixed points of the isotropic model.

mod centered;
mod isotropic;
mod laplacian;
mod model;

use statrs::function::erf::erfc;

pub use centered::{
    centered_theory, centered_theory_at_xi, r_ctr_consistency_check, solve_xi_for_e, theta_q_s, xi_domain,
    CenteredTheory, ThetaQS, XiDomain, XiState,
};
pub use isotropic::{
    bayes_optimal_isotropic, centered_isotropic, centered_isotropic_theory, expected_tanh, g_of_q,
    gauss_hermite, isotropic_condition_xi, isotropic_theory, FixedPoint, QUADRATURE_NODES,
};
pub use laplacian::{laplacian_theory, r_lap};
pub use model::{
    antipodal_means, direct_statistics, lift_statistics, statistics, toeplitz, LiftedStatistics,
    MixtureModel, TheoryForm,
};

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal tail `Q(x) = 1 − Φ(x)`.
pub fn q_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Limiting per-class score law and the accuracy of the sign decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticPrediction {
    /// Class means; class 1 is negative.
    pub means: [f64; 2],
    /// Mean scale `m̂`; the class means are `∓(1 − ρ_k)m̂`.
    pub m_hat: f64,
    pub stds: [f64; 2],
    pub accuracy: f64,
    /// Variance over squared mean.
    pub r: f64,
    pub theta: Option<f64>,
    pub xi: Option<f64>,
    pub e: Option<f64>,
}
