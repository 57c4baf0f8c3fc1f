use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::model::{statistics, LiftedStatistics, MixtureModel, TheoryForm};
use super::{phi, AsymptoticPrediction};
use crate::graph::Kernel;
use crate::{Error, Result};

const ROOT_STEPS: usize = 200;
const ROOT_REL_TOL: f64 = 1e-12;
const E_REL_TOL: f64 = 1e-10;
const OPT_GRID: usize = 400;

/// The resolvent functionals at one value of `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaQS {
    pub theta: f64,
    pub q: f64,
    pub s: f64,
    /// `s` with the class covariance `Σ_k` in the middle.
    pub s_class: [f64; 2],
}

/// Domain boundaries: `θ(ξ_m) = 1`, `q(ξ_σ²) = c_u`, `ξ_sup = min(ξ_m, ξ_σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiDomain {
    pub xi_m: f64,
    pub xi_sigma2: f64,
    pub xi_sup: f64,
    /// `1/λ_max(Σ̄)`, where the resolvent blows up.
    pub xi_pole: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiState {
    pub xi: f64,
    pub fun: ThetaQS,
    pub m: f64,
    pub sigma2: f64,
    pub sigma2_class: [f64; 2],
    pub domain: XiDomain,
}

impl XiState {
    /// `e = √(ρ₁ρ₂m² + σ²)`.
    pub fn e(&self, rho_product: f64) -> f64 {
        (rho_product * self.m * self.m + self.sigma2).sqrt()
    }
}

/// Centered-regularization predictor with `Σ̄` factored once.
///
/// In the eigenbasis `Σ̄ = U Λ Uᵀ` every `ξ`-dependent quantity costs `O(p)`
/// apart from the class-specific `s_k`, which costs `O(p²)`.
#[derive(Debug, Clone)]
pub struct CenteredTheory {
    lambda: DVector<f64>,
    /// `Uᵀ(ν₁ − ν₂)`.
    gap: DVector<f64>,
    /// `UᵀΣ_kU`, absent when both classes share `Σ̄`.
    class_cov: Option<[DMatrix<f64>; 2]>,
    p: f64,
    rho: [f64; 2],
    c_l: f64,
    c_u: f64,
    xi_pole: f64,
    xi_m: f64,
}

impl CenteredTheory {
    pub fn new(model: &MixtureModel, stats: &LiftedStatistics) -> Result<Self> {
        let eig = SymmetricEigen::new(stats.sigma_bar.clone());
        let u = &eig.eigenvectors;
        let lambda = eig.eigenvalues.clone();
        let lmax = lambda.max();
        if !(lmax > 0.0) {
            return Err(Error::Domain("averaged covariance has no positive eigenvalue".into()));
        }
        let gap = u.transpose() * (&stats.nu[0] - &stats.nu[1]);
        if gap.norm() == 0.0 {
            return Err(Error::Domain("class statistics coincide; no signal to predict".into()));
        }
        let class_cov = if stats.sigma[0] == stats.sigma[1] {
            None
        } else {
            Some([
                u.transpose() * &stats.sigma[0] * u,
                u.transpose() * &stats.sigma[1] * u,
            ])
        };
        let mut me = Self {
            lambda,
            gap,
            class_cov,
            p: model.p() as f64,
            rho: model.rho,
            c_l: model.c_l,
            c_u: model.c_u,
            xi_pole: 1.0 / lmax,
            xi_m: 0.0,
        };
        me.xi_m = me.root(|f| f.theta, 1.0);
        Ok(me)
    }

    pub fn from_model(model: &MixtureModel, kernel: &dyn Kernel, form: TheoryForm) -> Result<Self> {
        Self::new(model, &statistics(model, kernel, form)?)
    }

    /// Same statistics, different sample ratios. `ξ_m` is unaffected.
    pub fn with_ratios(&self, c_l: f64, c_u: f64) -> Self {
        Self {
            c_l,
            c_u,
            ..self.clone()
        }
    }

    pub fn c_l(&self) -> f64 {
        self.c_l
    }

    pub fn c_u(&self) -> f64 {
        self.c_u
    }

    pub fn rho_product(&self) -> f64 {
        self.rho[0] * self.rho[1]
    }

    fn funcs(&self, xi: f64) -> ThetaQS {
        let rr = self.rho_product();
        let (mut theta, mut q, mut s) = (0.0, 0.0, 0.0);
        for (&l, &d) in self.lambda.iter().zip(self.gap.iter()) {
            let inv = 1.0 / (1.0 - xi * l);
            theta += d * d * inv;
            q += (l * inv).powi(2);
            s += l * (d * inv).powi(2);
        }
        theta *= rr * xi;
        q *= xi * xi / self.p;
        s *= rr * xi * xi;
        let s_class = match &self.class_cov {
            None => [s, s],
            Some(cov) => {
                let w = self.gap.zip_map(&self.lambda, |d, l| d / (1.0 - xi * l));
                [0, 1].map(|k| rr * xi * xi * cov[k].dot(&(&w * w.transpose())))
            }
        };
        ThetaQS { theta, q, s, s_class }
    }

    /// `θ, q, s, s₁, s₂` at `ξ ∈ (0, 1/λ_max(Σ̄))`.
    pub fn theta_q_s(&self, xi: f64) -> Result<ThetaQS> {
        if !(xi > 0.0 && xi < self.xi_pole) {
            return Err(Error::Domain(format!(
                "xi = {xi} outside (0, {}) where I - xi*Sigma is positive definite",
                self.xi_pole
            )));
        }
        Ok(self.funcs(xi))
    }

    /// Root of an increasing functional on `(0, ξ_pole)`. Returns the pole when
    /// the functional stays below `target` (only possible for `θ` when `ν₁ − ν₂`
    /// has no component on the top eigenvector).
    fn root(&self, pick: impl Fn(&ThetaQS) -> f64, target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.xi_pole);
        for _ in 0..ROOT_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if pick(&self.funcs(mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= ROOT_REL_TOL * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn xi_domain(&self) -> XiDomain {
        let xi_sigma2 = self.root(|f| f.q, self.c_u);
        XiDomain {
            xi_m: self.xi_m,
            xi_sigma2,
            xi_sup: self.xi_m.min(xi_sigma2),
            xi_pole: self.xi_pole,
        }
    }

    fn state_unchecked(&self, xi: f64, domain: XiDomain) -> XiState {
        let rr = self.rho_product();
        let (cl, cu) = (self.c_l, self.c_u);
        let fun = self.funcs(xi);
        let m = 2.0 * cl * fun.theta / (cu * (1.0 - fun.theta));
        let lead = (2.0 * cl + m * cu).powi(2);
        let tail = (4.0 * cl + m * m * cu) * fun.q;
        let sigma2 = rr * (lead * fun.s + tail) / (cu * (cu - fun.q));
        let sigma2_class = fun
            .s_class
            .map(|sk| (rr * (lead * sk + tail) + sigma2 * cu * fun.q) / (cu * cu));
        XiState {
            xi,
            fun,
            m,
            sigma2,
            sigma2_class,
            domain,
        }
    }

    fn require_unlabeled(&self) -> Result<()> {
        if self.c_u > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain("the centered predictor needs c_u > 0".into()))
        }
    }

    pub fn at_xi(&self, xi: f64) -> Result<XiState> {
        self.require_unlabeled()?;
        let domain = self.xi_domain();
        if !(xi > 0.0 && xi < domain.xi_sup) {
            return Err(Error::Domain(format!("xi = {xi} outside (0, {})", domain.xi_sup)));
        }
        Ok(self.state_unchecked(xi, domain))
    }

    /// `e(ξ) = √(ρ₁ρ₂m(ξ)² + σ²(ξ))`.
    pub fn e_of_xi(&self, xi: f64) -> Result<f64> {
        Ok(self.at_xi(xi)?.e(self.rho_product()))
    }

    /// The unique `ξ_e` with `ρ₁ρ₂m(ξ_e)² + σ²(ξ_e) = e²`.
    pub fn solve_xi_for_e(&self, e: f64) -> Result<f64> {
        self.require_unlabeled()?;
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::InvalidArgument(format!("e = {e} must be positive and finite")));
        }
        let domain = self.xi_domain();
        let rr = self.rho_product();
        let target = e * e;
        let excess = |xi: f64| {
            let st = self.state_unchecked(xi, domain);
            rr * st.m * st.m + st.sigma2 - target
        };
        let (mut lo, mut hi) = (0.0, domain.xi_sup);
        for step in 0..ROOT_STEPS {
            let mid = 0.5 * (lo + hi);
            let g = excess(mid);
            if g.abs() <= E_REL_TOL * target || mid <= lo || mid >= hi {
                return Ok(mid);
            }
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if step + 1 == ROOT_STEPS {
                return Err(Error::NoConvergence {
                    solver: "xi bisection",
                    iterations: ROOT_STEPS,
                    residual: g.abs() / target,
                });
            }
        }
        unreachable!()
    }

    pub fn predict_at_xi(&self, xi: f64) -> Result<AsymptoticPrediction> {
        let st = self.at_xi(xi)?;
        Ok(self.prediction(&st))
    }

    fn prediction(&self, st: &XiState) -> AsymptoticPrediction {
        let stds = st.sigma2_class.map(f64::sqrt);
        let accuracy = (0..2)
            .map(|k| self.rho[k] * phi((1.0 - self.rho[k]) * st.m / stds[k]))
            .sum();
        AsymptoticPrediction {
            means: [-(1.0 - self.rho[0]) * st.m, (1.0 - self.rho[1]) * st.m],
            m_hat: st.m,
            stds,
            accuracy,
            r: st.sigma2 / (st.m * st.m),
            theta: Some(st.fun.theta),
            xi: Some(st.xi),
            e: Some(st.e(self.rho_product())),
        }
    }

    /// Prediction for the centered solution whose scores have norm level `e`.
    pub fn predict(&self, e: f64) -> Result<AsymptoticPrediction> {
        let xi = self.solve_xi_for_e(e)?;
        self.predict_at_xi(xi)
    }

    /// `ξ` with `θ(ξ) = theta`, for `theta ∈ (0, 1)`.
    pub fn xi_for_theta(&self, theta: f64) -> Result<f64> {
        if !(theta > 0.0 && theta < 1.0) {
            return Err(Error::InvalidArgument(format!("theta = {theta} must lie in (0, 1)")));
        }
        Ok(self.root(|f| f.theta, theta))
    }

    /// Accuracy maximized over the hyperparameter `e` (equivalently over `ξ`).
    pub fn optimize(&self) -> Result<AsymptoticPrediction> {
        self.require_unlabeled()?;
        let domain = self.xi_domain();
        let acc = |xi: f64| self.prediction(&self.state_unchecked(xi, domain)).accuracy;
        let sup = domain.xi_sup;
        let grid: Vec<f64> = (1..OPT_GRID).map(|i| sup * i as f64 / OPT_GRID as f64).collect();
        let values: Vec<f64> = grid.iter().map(|&x| acc(x)).collect();
        let best = values
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
        let mut lo = if best == 0 { 0.0 } else { grid[best - 1] };
        let mut hi = if best + 1 == grid.len() { sup } else { grid[best + 1] };
        // Golden-section search on the bracketing cell.
        let g = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (acc(x1), acc(x2));
        while hi - lo > 1e-13 * hi {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = acc(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = acc(x1);
            }
        }
        let xi = if f1 > f2 { x1 } else { x2 };
        Ok(self.prediction(&self.state_unchecked(xi, domain)))
    }

    /// The `e → 0` (equivalently `θ → 0`) limit of the prediction.
    pub fn small_e_limit(&self) -> AsymptoticPrediction {
        let rr = self.rho_product();
        let gap_sq = self.gap.norm_squared();
        let tr2 = self.lambda.norm_squared();
        let labeled = tr2 / (self.p * self.c_l * rr * gap_sq * gap_sq);
        let s0 = self.gap.dot(&self.gap.component_mul(&self.lambda)) / (gap_sq * gap_sq);
        let s0_class = match &self.class_cov {
            None => [s0, s0],
            Some(cov) => [0, 1].map(|k| cov[k].dot(&(&self.gap * self.gap.transpose())) / (gap_sq * gap_sq)),
        };
        let r_class = s0_class.map(|s| s + labeled);
        let stds = r_class.map(f64::sqrt);
        AsymptoticPrediction {
            means: [-(1.0 - self.rho[0]), 1.0 - self.rho[1]],
            m_hat: 1.0,
            stds,
            accuracy: (0..2).map(|k| self.rho[k] * phi((1.0 - self.rho[k]) / stds[k])).sum(),
            r: s0 + labeled,
            theta: Some(0.0),
            xi: Some(0.0),
            e: Some(0.0),
        }
    }

    /// Spectral clustering on `c_total·p` unlabeled points: the `c_l → 0` limit,
    /// which pins `ξ` to `ξ_m`.
    pub fn spectral_limit(&self, c_total: f64) -> AsymptoticPrediction {
        let rr = self.rho_product();
        let f = self.funcs(self.xi_m * (1.0 - 1e-12));
        let trivial = AsymptoticPrediction {
            means: [0.0, 0.0],
            m_hat: 0.0,
            stds: [1.0, 1.0],
            accuracy: 0.5,
            r: f64::INFINITY,
            theta: Some(1.0),
            xi: Some(self.xi_m),
            e: None,
        };
        if !(c_total > f.q) {
            return trivial;
        }
        let r = rr * (c_total * f.s + f.q) / (c_total - f.q);
        let r_class = f.s_class.map(|sk| rr * (sk + f.q / c_total) + r * f.q / c_total);
        let stds = r_class.map(f64::sqrt);
        AsymptoticPrediction {
            means: [-(1.0 - self.rho[0]), 1.0 - self.rho[1]],
            m_hat: 1.0,
            stds,
            accuracy: (0..2).map(|k| self.rho[k] * phi((1.0 - self.rho[k]) / stds[k])).sum(),
            r,
            ..trivial
        }
    }

    /// Residual of the identity
    /// `r/ρ₁ρ₂ = s/θ² + (q/θ²)[θ²(1 + r/ρ₁ρ₂)/c_u + (1−θ)²/c_l]`, relative to its left side.
    pub fn consistency_residual(&self, xi: f64) -> Result<f64> {
        let st = self.at_xi(xi)?;
        let rr = self.rho_product();
        let (t, q, s) = (st.fun.theta, st.fun.q, st.fun.s);
        let r = st.sigma2 / (st.m * st.m) / rr;
        let rhs = s / (t * t) + q / (t * t) * (t * t * (1.0 + r) / self.c_u + (1.0 - t).powi(2) / self.c_l);
        Ok((r - rhs).abs() / r)
    }
}

pub fn theta_q_s(xi: f64, stats: &LiftedStatistics, model: &MixtureModel) -> Result<ThetaQS> {
    CenteredTheory::new(model, stats)?.theta_q_s(xi)
}

pub fn xi_domain(stats: &LiftedStatistics, model: &MixtureModel) -> Result<XiDomain> {
    Ok(CenteredTheory::new(model, stats)?.xi_domain())
}

pub fn centered_theory_at_xi(xi: f64, stats: &LiftedStatistics, model: &MixtureModel) -> Result<XiState> {
    CenteredTheory::new(model, stats)?.at_xi(xi)
}

pub fn solve_xi_for_e(e: f64, stats: &LiftedStatistics, model: &MixtureModel) -> Result<f64> {
    CenteredTheory::new(model, stats)?.solve_xi_for_e(e)
}

/// Centered-regularization prediction at norm level `e`, kernel-lifted form.
pub fn centered_theory(e: f64, model: &MixtureModel, kernel: &dyn Kernel) -> Result<AsymptoticPrediction> {
    CenteredTheory::from_model(model, kernel, TheoryForm::Lifted)?.predict(e)
}

/// Relative residual of the variance-ratio identity at norm level `e`.
pub fn r_ctr_consistency_check(e: f64, model: &MixtureModel, kernel: &dyn Kernel) -> Result<f64> {
    if !model.is_homoscedastic() {
        return Err(Error::Domain("the variance-ratio identity needs C1 = C2".into()));
    }
    let theory = CenteredTheory::from_model(model, kernel, TheoryForm::Lifted)?;
    let xi = theory.solve_xi_for_e(e)?;
    theory.consistency_residual(xi)
}
