use nalgebra::{DMatrix, DVector};

use crate::graph::{Kernel, KernelJet};
use crate::{Error, Result};

/// Two-class Gaussian mixture `x ~ N(μ_k, C_k)` with priors `ρ_k`, observed
/// with `n_l = c_l·p` labeled and `n_u = c_u·p` unlabeled samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub rho: [f64; 2],
    pub mu: [DVector<f64>; 2],
    pub cov: [DMatrix<f64>; 2],
    pub c_l: f64,
    pub c_u: f64,
}

impl MixtureModel {
    pub fn new(
        rho1: f64,
        mu: [DVector<f64>; 2],
        cov: [DMatrix<f64>; 2],
        c_l: f64,
        c_u: f64,
    ) -> Result<Self> {
        if !(rho1 > 0.0 && rho1 < 1.0) {
            return Err(Error::InvalidArgument(format!("rho1 = {rho1} must lie in (0, 1)")));
        }
        let p = mu[0].len();
        if p == 0 {
            return Err(Error::Empty("mean vector"));
        }
        if mu[1].len() != p || cov.iter().any(|c| c.nrows() != p || c.ncols() != p) {
            return Err(Error::Dimension(format!("means and covariances must all have dimension {p}")));
        }
        for (k, c) in cov.iter().enumerate() {
            let asym = (c - c.transpose()).amax();
            if asym > 1e-12 * c.amax().max(1.0) {
                return Err(Error::InvalidArgument(format!("C{} is not symmetric", k + 1)));
            }
            if c.clone().cholesky().is_none() {
                return Err(Error::InvalidArgument(format!("C{} is not positive definite", k + 1)));
            }
        }
        if !(c_l > 0.0) || !(c_u >= 0.0) || !c_l.is_finite() || !c_u.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "ratios must satisfy c_l > 0 and c_u >= 0 (got {c_l}, {c_u})"
            )));
        }
        Ok(Self {
            rho: [rho1, 1.0 - rho1],
            mu,
            cov,
            c_l,
            c_u,
        })
    }

    pub fn homoscedastic(
        rho1: f64,
        mu1: DVector<f64>,
        mu2: DVector<f64>,
        cov: DMatrix<f64>,
        c_l: f64,
        c_u: f64,
    ) -> Result<Self> {
        Self::new(rho1, [mu1, mu2], [cov.clone(), cov], c_l, c_u)
    }

    /// Balanced model with `μ₂ = −μ₁ = (‖μ₁ − μ₂‖/2)·e₁`.
    pub fn antipodal(p: usize, mean_gap_sq: f64, cov: DMatrix<f64>, c_l: f64, c_u: f64) -> Result<Self> {
        let (mu1, mu2) = antipodal_means(p, mean_gap_sq)?;
        Self::homoscedastic(0.5, mu1, mu2, cov, c_l, c_u)
    }

    pub fn p(&self) -> usize {
        self.mu[0].len()
    }

    pub fn c0(&self) -> f64 {
        self.c_l + self.c_u
    }

    /// `ρ₁ρ₂`.
    pub fn rho_product(&self) -> f64 {
        self.rho[0] * self.rho[1]
    }

    /// Limit of `‖xᵢ − xⱼ‖²/p`: `tr(C₁ + C₂)/p`.
    pub fn tau(&self) -> f64 {
        (self.cov[0].trace() + self.cov[1].trace()) / self.p() as f64
    }

    pub fn mean_gap(&self) -> DVector<f64> {
        &self.mu[0] - &self.mu[1]
    }

    pub fn is_homoscedastic(&self) -> bool {
        self.cov[0] == self.cov[1]
    }

    pub fn with_ratios(&self, c_l: f64, c_u: f64) -> Result<Self> {
        Self::new(self.rho[0], self.mu.clone(), self.cov.clone(), c_l, c_u)
    }
}

/// `μ₁ = −(√gap/2)e₁`, `μ₂ = +(√gap/2)e₁`, so that `‖μ₁ − μ₂‖² = gap`.
pub fn antipodal_means(p: usize, mean_gap_sq: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    if p == 0 {
        return Err(Error::Empty("dimension"));
    }
    if !(mean_gap_sq >= 0.0) {
        return Err(Error::InvalidArgument(format!("squared mean gap {mean_gap_sq} is negative")));
    }
    let mut mu2 = DVector::zeros(p);
    mu2[0] = mean_gap_sq.sqrt() / 2.0;
    Ok((-mu2.clone(), mu2))
}

/// `C_ij = r^{|i−j|}`.
pub fn toeplitz(p: usize, r: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| r.powi(i.abs_diff(j) as i32))
}

/// Which parameterization of the centered predictor to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TheoryForm {
    /// Kernel-lifted `(p+1)`-dimensional statistics; valid for any admissible kernel.
    #[default]
    Lifted,
    /// Raw `(μ_k, C_k)`; the special case exposed in the main text.
    Direct,
}

/// Effective means `ν_k` and covariances `Σ_k` entering the centered predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedStatistics {
    pub nu: [DVector<f64>; 2],
    pub sigma: [DMatrix<f64>; 2],
    pub sigma_bar: DMatrix<f64>,
}

impl LiftedStatistics {
    pub fn dim(&self) -> usize {
        self.nu[0].len()
    }
}

/// `ν_k = [√(−2h′(τ))μ_k; √h″(τ)·tr C_k/√p]` and
/// `Σ_k = diag(−2h′(τ)C_k, 2h″(τ)tr(C_k²)/p)`.
pub fn lift_statistics(model: &MixtureModel, kernel: &dyn Kernel) -> Result<LiftedStatistics> {
    let tau = model.tau();
    let jet = KernelJet::at(kernel, tau);
    if !(jet.d1 < 0.0) || !(jet.d2 >= 0.0) {
        return Err(Error::Domain(format!(
            "kernel needs h'(tau) < 0 and h''(tau) >= 0 at tau = {tau} (got {}, {})",
            jet.d1, jet.d2
        )));
    }
    let p = model.p();
    let pf = p as f64;
    let scale = (-2.0 * jet.d1).sqrt();
    let mut nu: [DVector<f64>; 2] = [DVector::zeros(p + 1), DVector::zeros(p + 1)];
    let mut sigma: [DMatrix<f64>; 2] = [DMatrix::zeros(p + 1, p + 1), DMatrix::zeros(p + 1, p + 1)];
    for k in 0..2 {
        let c = &model.cov[k];
        nu[k].rows_mut(0, p).copy_from(&(&model.mu[k] * scale));
        nu[k][p] = jet.d2.sqrt() * c.trace() / pf.sqrt();
        sigma[k].view_mut((0, 0), (p, p)).copy_from(&(c * (-2.0 * jet.d1)));
        sigma[k][(p, p)] = 2.0 * jet.d2 * c.dot(c) / pf;
    }
    let sigma_bar = &sigma[0] * model.rho[0] + &sigma[1] * model.rho[1];
    Ok(LiftedStatistics { nu, sigma, sigma_bar })
}

/// `ν_k = μ_k`, `Σ_k = C_k`.
pub fn direct_statistics(model: &MixtureModel) -> LiftedStatistics {
    let sigma_bar = &model.cov[0] * model.rho[0] + &model.cov[1] * model.rho[1];
    LiftedStatistics {
        nu: model.mu.clone(),
        sigma: model.cov.clone(),
        sigma_bar,
    }
}

pub fn statistics(model: &MixtureModel, kernel: &dyn Kernel, form: TheoryForm) -> Result<LiftedStatistics> {
    match form {
        TheoryForm::Lifted => lift_statistics(model, kernel),
        TheoryForm::Direct => Ok(direct_statistics(model)),
    }
}
