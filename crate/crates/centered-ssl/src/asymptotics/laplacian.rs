use super::model::MixtureModel;
use super::{phi, AsymptoticPrediction};
use crate::graph::{Kernel, KernelJet};
use crate::{Error, Result};

/// Limiting per-class score law of Laplacian regularization (`a = −1`).
///
/// Class `k` scores tend to `N(m_k, σ_k²)` with
/// `m_k = (−1)^k (1−ρ_k)[−2h′/h ‖Δμ‖² + (h″/h − h′²/h²)(Δtr C)²/p]`.
/// Nothing here depends on `c_u`.
pub fn laplacian_theory(model: &MixtureModel, kernel: &dyn Kernel) -> Result<AsymptoticPrediction> {
    let tau = model.tau();
    let jet = KernelJet::at(kernel, tau);
    if jet.h == 0.0 || !jet.h.is_finite() {
        return Err(Error::Domain(format!("h(tau) = {} at tau = {tau}", jet.h)));
    }
    let p = model.p() as f64;
    let d1 = jet.d1 / jet.h;
    let curv = jet.d2 / jet.h - d1 * d1;
    let dmu = model.mean_gap();
    let dtr = model.cov[0].trace() - model.cov[1].trace();
    let bracket = -2.0 * d1 * dmu.norm_squared() + curv * dtr * dtr / p;

    let mut means = [0.0; 2];
    let mut vars = [0.0; 2];
    for k in 0..2 {
        let ck = &model.cov[k];
        let sign = if k == 0 { -1.0 } else { 1.0 };
        means[k] = sign * (1.0 - model.rho[k]) * bracket;
        let labeled: f64 = (0..2)
            .map(|a| model.cov[a].dot(ck) / (model.rho[a] * p))
            .sum::<f64>()
            / model.c_l;
        vars[k] = 4.0 * d1 * d1 * (dmu.dot(&(ck * &dmu)) + labeled)
            + curv * curv * 2.0 * ck.dot(ck) * dtr * dtr / (p * p);
    }
    let stds = vars.map(f64::sqrt);
    let accuracy = if bracket == 0.0 {
        0.5
    } else {
        model.rho[0] * phi(-means[0] / stds[0]) + model.rho[1] * phi(means[1] / stds[1])
    };
    let pooled = model.rho[0] * vars[0] + model.rho[1] * vars[1];
    Ok(AsymptoticPrediction {
        means,
        m_hat: bracket,
        stds,
        accuracy,
        r: pooled / (bracket * bracket),
        theta: None,
        xi: None,
        e: None,
    })
}

/// Closed-form variance-over-squared-mean ratio of Laplacian regularization,
/// `ΔμᵀCΔμ/‖Δμ‖⁴ + tr C²/(p‖Δμ‖⁴ρ₁ρ₂c_l)`; requires `C₁ = C₂`.
pub fn r_lap(model: &MixtureModel) -> Result<f64> {
    if !model.is_homoscedastic() {
        return Err(Error::Domain("r_Lap is defined only for C1 = C2".into()));
    }
    let c = &model.cov[0];
    let dmu = model.mean_gap();
    let g2 = dmu.norm_squared();
    if g2 == 0.0 {
        return Err(Error::Domain("identical class means".into()));
    }
    let p = model.p() as f64;
    Ok(dmu.dot(&(c * &dmu)) / (g2 * g2) + c.dot(c) / (p * g2 * g2 * model.rho_product() * model.c_l))
}
