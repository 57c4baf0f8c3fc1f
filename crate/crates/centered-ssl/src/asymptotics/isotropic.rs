use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::centered::CenteredTheory;
use super::model::{direct_statistics, MixtureModel};
use super::{phi, AsymptoticPrediction};
use crate::{Error, Result};

pub const QUADRATURE_NODES: usize = 64;
const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 10_000;

/// Gauss–Hermite rule for the weight `e^{−x²}`, nodes in decreasing order.
///
/// Golub–Welsch: the nodes are the eigenvalues of the Jacobi matrix with
/// off-diagonal `√(k/2)`, the weights `√π` times the squared first components
/// of its eigenvectors.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i.abs_diff(j) == 1 {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = jacobi.symmetric_eigen();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], PI.sqrt() * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // exact symmetry about 0
    for i in 0..n / 2 {
        let x = 0.5 * (pairs[i].0 - pairs[n - 1 - i].0);
        let w = 0.5 * (pairs[i].1 + pairs[n - 1 - i].1);
        pairs[i] = (x, w);
        pairs[n - 1 - i] = (-x, w);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    pairs.into_iter().unzip()
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(QUADRATURE_NODES))
}

/// `E tanh(z)` for `z ~ N(q, q)`.
pub fn expected_tanh(q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let (x, w) = rule();
    let spread = (2.0 * q).sqrt();
    let sum: f64 = x.iter().zip(w).map(|(xi, wi)| wi * (q + spread * xi).tanh()).sum();
    sum / PI.sqrt()
}

/// Solution of a scalar overlap equation and the accuracy `Φ(√q)` it implies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoint {
    pub q: f64,
    pub accuracy: f64,
    pub iterations: usize,
}

/// `q ← (q + F(q))/2` from `q₀ = ‖μ‖²`, where
/// `F(q) = ‖μ‖² − ‖μ‖²/(1 + ‖μ‖²(c_l + u(q)·c_u))`.
fn overlap_fixed_point(mu_norm_sq: f64, c_l: f64, c_u: f64, u: impl Fn(f64) -> f64) -> Result<FixedPoint> {
    if !(mu_norm_sq > 0.0) || !mu_norm_sq.is_finite() {
        return Err(Error::InvalidArgument(format!("squared mean norm {mu_norm_sq} must be positive")));
    }
    if !(c_l >= 0.0 && c_u >= 0.0) {
        return Err(Error::InvalidArgument("sample ratios must be non-negative".into()));
    }
    let m2 = mu_norm_sq;
    let map = |q: f64| m2 - m2 / (1.0 + m2 * (c_l + u(q) * c_u));
    let mut q = m2;
    for it in 1..=FIXED_POINT_MAX_ITER {
        let next = 0.5 * (q + map(q));
        let delta = (next - q).abs();
        q = next;
        if delta <= FIXED_POINT_TOL {
            return Ok(FixedPoint {
                q,
                accuracy: phi(q.sqrt()),
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "overlap fixed point",
        iterations: FIXED_POINT_MAX_ITER,
        residual: (map(q) - q).abs(),
    })
}

/// Best achievable accuracy on the isotropic mixture `±μ + N(0, I_p)`.
pub fn bayes_optimal_isotropic(mu_norm_sq: f64, c_l: f64, c_u: f64) -> Result<FixedPoint> {
    overlap_fixed_point(mu_norm_sq, c_l, c_u, expected_tanh)
}

/// Accuracy of centered regularization on the same model, at the norm level
/// singled out by [`isotropic_condition_xi`].
pub fn centered_isotropic(mu_norm_sq: f64, c_l: f64, c_u: f64) -> Result<FixedPoint> {
    overlap_fixed_point(mu_norm_sq, c_l, c_u, |q| q / (q + 1.0))
}

/// `g(q) = E tanh(z)·(q + 1)/q`, `z ~ N(q, q)`: the factor by which centered
/// regularization needs more unlabeled data to match the optimum.
pub fn g_of_q(q: f64) -> Result<f64> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain(format!("g(q) needs q > 0 (got {q})")));
    }
    Ok(expected_tanh(q) * (q + 1.0) / q)
}

/// Centered predictor for the isotropic mixture in direct form; the predictor
/// only depends on the model through `‖μ‖²`, so a one-dimensional stand-in is used.
pub fn isotropic_theory(mu_norm_sq: f64, c_l: f64, c_u: f64) -> Result<CenteredTheory> {
    let mu = mu_norm_sq.sqrt();
    let model = MixtureModel::homoscedastic(
        0.5,
        DVector::from_element(1, -mu),
        DVector::from_element(1, mu),
        DMatrix::identity(1, 1),
        c_l,
        c_u,
    )?;
    CenteredTheory::new(&model, &direct_statistics(&model))
}

/// `ξ` solving `m = m²/(m² + σ²)` with `m` the class-mean magnitude `m(ξ)/2`,
/// at which the centered prediction equals [`centered_isotropic`]. This is
/// also where the predicted accuracy peaks.
pub fn isotropic_condition_xi(theory: &CenteredTheory) -> Result<f64> {
    let sup = theory.xi_domain().xi_sup;
    let gap = |xi: f64| -> Result<f64> {
        let st = theory.at_xi(xi)?;
        let half = 0.5 * st.m;
        Ok(half * (half * half + st.sigma2) - half * half)
    };
    let (mut lo, mut hi) = (0.0, sup);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Centered prediction at the condition above.
pub fn centered_isotropic_theory(mu_norm_sq: f64, c_l: f64, c_u: f64) -> Result<AsymptoticPrediction> {
    let theory = isotropic_theory(mu_norm_sq, c_l, c_u)?;
    theory.predict_at_xi(isotropic_condition_xi(&theory)?)
}
