use std::io::Write;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SweepVar};
use super::runner::model_at;
use crate::asymptotics::{
    bayes_optimal_isotropic, centered_isotropic, isotropic_theory, laplacian_theory, r_lap, AsymptoticPrediction,
    CenteredTheory, MixtureModel,
};
use crate::io::format_float;
use crate::{Error, Result};

/// Predictions at one sweep point. The centered entry is the accuracy-optimal
/// one for ratio sweeps and the one at the requested `θ` for a `θ` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub value: f64,
    pub laplacian: Option<f64>,
    pub centered: Option<AsymptoticPrediction>,
    pub spectral: Option<f64>,
    pub error: Option<String>,
}

fn theory_model(cfg: &ExperimentConfig) -> Result<&MixtureModel> {
    if cfg.knn.is_some() {
        return Err(Error::Config(
            "predictions exist only for kernel graphs; this configuration uses a KNN graph".into(),
        ));
    }
    cfg.mixture()
        .ok_or_else(|| Error::Config("predictions need a Gaussian-mixture source".into()))
}

fn row_at(cfg: &ExperimentConfig, base: &CenteredTheory, var: Option<SweepVar>, value: f64) -> TheoryRow {
    let mut row = TheoryRow {
        value,
        laplacian: None,
        centered: None,
        spectral: None,
        error: None,
    };
    let model = match model_at(cfg.mixture().expect("checked"), var, value) {
        Ok(m) => m,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let mut errors = Vec::new();
    match laplacian_theory(&model, &cfg.kernel) {
        Ok(p) => row.laplacian = Some(p.accuracy),
        Err(e) => errors.push(format!("laplacian: {e}")),
    }
    let theory = base.with_ratios(model.c_l, model.c_u);
    let centered = if var == Some(SweepVar::Theta) {
        if value == 0.0 {
            Ok(theory.small_e_limit())
        } else {
            theory.xi_for_theta(value).and_then(|xi| theory.predict_at_xi(xi))
        }
    } else {
        theory.optimize()
    };
    match centered {
        Ok(p) => row.centered = Some(p),
        Err(e) => errors.push(format!("centered: {e}")),
    }
    row.spectral = Some(theory.spectral_limit(model.c0()).accuracy);
    if !errors.is_empty() {
        row.error = Some(errors.join("; "));
    }
    row
}

/// Laplacian, centered and spectral predictions over the configured sweep.
pub fn theory_sweep(cfg: &ExperimentConfig) -> Result<Vec<TheoryRow>> {
    let model = theory_model(cfg)?;
    let base = CenteredTheory::from_model(model, &cfg.kernel, cfg.form)?;
    let (var, values) = match &cfg.sweep {
        Some(s) => (Some(s.var), s.values.clone()),
        None => (None, vec![f64::NAN]),
    };
    Ok(values.par_iter().map(|&v| row_at(cfg, &base, var, v)).collect())
}

pub fn write_theory_csv<W: Write>(variable: &str, rows: &[TheoryRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "{variable},laplacian,centered,spectral,m_hat,sigma1,sigma2,theta,xi_e,e,error"
    )?;
    let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
    for r in rows {
        let c = r.centered.as_ref();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            format_float(r.value),
            opt(r.laplacian),
            opt(c.map(|p| p.accuracy)),
            opt(r.spectral),
            opt(c.map(|p| p.m_hat)),
            opt(c.map(|p| p.stds[0])),
            opt(c.map(|p| p.stds[1])),
            opt(c.and_then(|p| p.theta)),
            opt(c.and_then(|p| p.xi)),
            opt(c.and_then(|p| p.e)),
            r.error.as_deref().unwrap_or("").replace(',', ";"),
        )?;
    }
    Ok(())
}

/// Best achievable, centered and Laplacian accuracies on the isotropic model
/// at one unlabeled ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimalRow {
    pub c_u: f64,
    pub bayes: f64,
    /// Centered prediction maximized over the hyperparameter.
    pub centered: f64,
    /// Centered accuracy from the scalar fixed point.
    pub centered_fixed_point: f64,
    pub laplacian: f64,
}

/// `‖μ‖²` of an isotropic model `x = ±μ + N(0, I)` with equal priors.
pub fn isotropic_mean_norm_sq(model: &MixtureModel) -> Result<f64> {
    let p = model.p();
    let id = nalgebra::DMatrix::<f64>::identity(p, p);
    let symmetric = (&model.mu[0] + &model.mu[1]).amax() <= 1e-12 * model.mu[0].amax().max(1.0);
    if model.cov[0] != id || model.cov[1] != id || model.rho[0] != 0.5 || !symmetric {
        return Err(Error::Config(
            "the optimal-performance comparison needs C1 = C2 = I, mu1 = -mu2 and rho1 = 1/2".into(),
        ));
    }
    Ok(model.mu[1].norm_squared())
}

pub fn optimal_row(mu_norm_sq: f64, c_l: f64, c_u: f64) -> Result<OptimalRow> {
    let bayes = bayes_optimal_isotropic(mu_norm_sq, c_l, c_u)?.accuracy;
    let fixed = centered_isotropic(mu_norm_sq, c_l, c_u)?.accuracy;
    let centered = if c_u > 0.0 {
        isotropic_theory(mu_norm_sq, c_l, c_u)?.optimize()?.accuracy
    } else {
        fixed
    };
    let r = r_lap(&MixtureModel::antipodal(1, 4.0 * mu_norm_sq, nalgebra::DMatrix::identity(1, 1), c_l, c_u)?)?;
    Ok(OptimalRow {
        c_u,
        bayes,
        centered,
        centered_fixed_point: fixed,
        laplacian: crate::asymptotics::phi(0.5 / r.sqrt()),
    })
}

/// Rows over the configured `c_u` sweep (or the model's own `c_u`).
pub fn compare_optimal(cfg: &ExperimentConfig) -> Result<Vec<OptimalRow>> {
    let model = theory_model(cfg)?;
    let m2 = isotropic_mean_norm_sq(model)?;
    let values = match &cfg.sweep {
        Some(s) if s.var == SweepVar::Cu => s.values.clone(),
        Some(s) => {
            return Err(Error::Config(format!(
                "the optimal-performance comparison sweeps cu, not {}",
                s.var.name()
            )))
        }
        None => vec![model.c_u],
    };
    values.par_iter().map(|&c_u| optimal_row(m2, model.c_l, c_u)).collect()
}

pub fn write_optimal_csv<W: Write>(rows: &[OptimalRow], mut out: W) -> Result<()> {
    writeln!(out, "cu,bayes,centered,centered_fixed_point,laplacian")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_float(r.c_u),
            format_float(r.bayes),
            format_float(r.centered),
            format_float(r.centered_fixed_point),
            format_float(r.laplacian)
        )?;
    }
    Ok(())
}
