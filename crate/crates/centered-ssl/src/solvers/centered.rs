use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

use super::{check_labeled, LabeledScores, Method, ScoreVector};
use crate::graph::{CenteredBlock, WeightBlock, WeightedGraph};
use crate::linalg::{minres, power_norm, shifted_solves, LinearOperator, PowerEstimate, Shifted};
use crate::{Error, Result, Scalar};

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITER: usize = 10_000;
const KRYLOV_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenteredSolveReport {
    pub alpha: f64,
    /// Estimate of `‖Ŵ_uu‖`.
    pub spectral_bound: f64,
    /// Frobenius norm of the returned `f_u`.
    pub achieved_norm: f64,
    pub iterations: usize,
}

/// `‖Ŵ_uu‖` by power iteration (relative tolerance 1e-8, at most 10000 steps).
pub fn centered_uu_norm<T: Scalar>(graph: &WeightedGraph<T>, n_l: usize) -> Result<PowerEstimate<T>> {
    power_norm(&CenteredBlock::new(graph, n_l), T::attainable(POWER_TOL), POWER_MAX_ITER)
}

/// `Ŵ_ul f_l`.
pub fn centered_cross<T: Scalar>(graph: &WeightedGraph<T>, f_l: &LabeledScores<T>) -> DMatrix<T> {
    let n_l = f_l.n_labeled();
    let op = CenteredBlock::new(graph, n_l);
    let mut out = DMatrix::zeros(graph.n() - n_l, f_l.columns());
    for c in 0..f_l.columns() {
        let col = f_l.f_l.column(c).into_owned();
        out.set_column(c, &op.apply_from(0..n_l, &col));
    }
    out
}

fn centered_uu_dense<T: Scalar>(graph: &WeightedGraph<T>, n_l: usize) -> DMatrix<T> {
    let n = graph.n();
    let nf = T::of(n as f64);
    let v = graph.degrees();
    let corner = graph.total_weight() / (nf * nf);
    let mut m = graph.dense_block(n_l..n, n_l..n);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] += corner - (v[n_l + i] + v[n_l + j]) / nf;
        }
    }
    m
}

/// `α = (1 + 10^t)·bound` for each `t`.
pub fn alpha_grid(bound: f64, ts: &[f64]) -> Vec<f64> {
    ts.iter().map(|t| (1.0 + 10f64.powf(*t)) * bound).collect()
}

fn report<T: Scalar>(alpha: f64, bound: T, f_u: &DMatrix<T>, iterations: usize) -> CenteredSolveReport {
    CenteredSolveReport {
        alpha,
        spectral_bound: bound.as_f64(),
        achieved_norm: f_u.norm().as_f64(),
        iterations,
    }
}

fn checked_bound<T: Scalar>(graph: &WeightedGraph<T>, n_l: usize, alpha: f64) -> Result<T> {
    let bound = centered_uu_norm(graph, n_l)?.value;
    if !(alpha > bound.as_f64()) {
        return Err(Error::AlphaTooSmall {
            alpha,
            bound: bound.as_f64(),
        });
    }
    Ok(bound)
}

/// `f_u = (αI − Ŵ_uu)^{−1} Ŵ_ul f_l` for `α > ‖Ŵ_uu‖`.
///
/// Dense graphs use a Cholesky factorization; sparse graphs go through
/// [`sparse_centered_solve`].
pub fn centered_regularization_alpha<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    alpha: f64,
) -> Result<(ScoreVector<T>, CenteredSolveReport)> {
    if graph.is_sparse() {
        return sparse_centered_solve(graph, f_l, alpha);
    }
    let n_l = check_labeled(graph.n(), f_l)?;
    let bound = checked_bound(graph, n_l, alpha)?;
    let mut m = -centered_uu_dense(graph, n_l);
    for k in 0..m.nrows() {
        m[(k, k)] += T::of(alpha);
    }
    let chol = m.cholesky().ok_or_else(|| {
        Error::Singular(format!("alpha = {alpha} is not above the spectrum of the centered block"))
    })?;
    let f_u = chol.solve(&centered_cross(graph, f_l));
    let rep = report(alpha, bound, &f_u, 1);
    Ok((
        ScoreVector {
            f_u,
            method: Method::Centered { alpha },
            fitted_labeled: None,
        },
        rep,
    ))
}

/// Eigendecomposition of `Ŵ_uu` with the projected right-hand side `Vᵀ Ŵ_ul f_l`,
/// giving `f_u(α)` and `‖f_u(α)‖` for any `α` in `O(n_u)` per column.
pub struct CenteredSpectrum<T: Scalar> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
    pub coeffs: DMatrix<T>,
    /// Exact `‖Ŵ_uu‖ = max |λᵢ|`.
    pub bound: T,
}

impl<T: Scalar> CenteredSpectrum<T> {
    pub fn new(graph: &WeightedGraph<T>, f_l: &LabeledScores<T>) -> Result<Self> {
        let n_l = check_labeled(graph.n(), f_l)?;
        let eig = centered_uu_dense(graph, n_l).symmetric_eigen();
        let coeffs = eig.eigenvectors.transpose() * centered_cross(graph, f_l);
        let bound = eig.eigenvalues.amax();
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
            coeffs,
            bound,
        })
    }

    pub fn n_unlabeled(&self) -> usize {
        self.values.len()
    }

    pub fn norm_sq(&self, alpha: T, column: usize) -> T {
        self.values
            .iter()
            .zip(self.coeffs.column(column).iter())
            .fold(T::zero(), |acc, (l, c)| {
                let z = *c / (alpha - *l);
                acc + z * z
            })
    }

    pub fn solve(&self, alpha: T) -> DMatrix<T> {
        let scaled = DMatrix::from_fn(self.coeffs.nrows(), self.coeffs.ncols(), |i, j| {
            self.coeffs[(i, j)] / (alpha - self.values[i])
        });
        &self.vectors * scaled
    }

    fn alpha_at(&self, t: f64) -> f64 {
        let b = self.bound.as_f64();
        if b > 0.0 {
            (1.0 + 10f64.powf(t)) * b
        } else {
            10f64.powf(t)
        }
    }

    /// The unique `α > ‖Ŵ_uu‖` with `‖f_u(α)‖² = n_u e²`, by bisection on
    /// `t = log10(α/‖Ŵ_uu‖ − 1)` starting from `[−12, 12]`.
    pub fn alpha_for_norm(&self, e: f64) -> Result<CenteredSolveReport> {
        if !(e > 0.0) {
            return Err(Error::InvalidArgument(format!("e must be positive, got {e}")));
        }
        if self.coeffs.ncols() != 1 {
            return Err(Error::InvalidArgument(
                "the norm constraint is defined for two-class scores".into(),
            ));
        }
        if self.coeffs.norm() == T::zero() {
            return Err(Error::InvalidArgument("Ŵ_ul f_l vanishes; no norm is reachable".into()));
        }
        let target = self.n_unlabeled() as f64 * e * e;
        let norm_sq = |t: f64| self.norm_sq(T::of(self.alpha_at(t)), 0).as_f64();
        let mut lo = -12.0;
        let mut hi = 12.0;
        if norm_sq(lo) < target {
            return Err(Error::Unreachable(format!(
                "‖f_u‖² = n_u e² = {target:e} exceeds what α > ‖Ŵ_uu‖ reaches at this precision; \
                 use the spectral solution (top eigenvector of Ŵ_uu) instead"
            )));
        }
        let mut expansions = 0;
        while norm_sq(hi) > target {
            hi *= 2.0;
            expansions += 1;
            if expansions > 8 {
                return Err(Error::Unreachable(format!("e = {e} is too small to bracket")));
            }
        }
        let mut iterations = 0;
        let mut best = f64::INFINITY;
        while iterations < 400 {
            iterations += 1;
            let mid = 0.5 * (lo + hi);
            let val = norm_sq(mid);
            best = (val - target).abs() / target;
            if val > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if best <= 1e-13 || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(1.0) {
                break;
            }
        }
        let t = 0.5 * (lo + hi);
        let alpha = self.alpha_at(t);
        let achieved = norm_sq(t).sqrt();
        let rel = (achieved - target.sqrt()).abs() / target.sqrt();
        if rel > 1e-8 {
            return Err(Error::NoConvergence {
                solver: "alpha bisection",
                iterations,
                residual: rel.max(best),
            });
        }
        Ok(CenteredSolveReport {
            alpha,
            spectral_bound: self.bound.as_f64(),
            achieved_norm: achieved,
            iterations,
        })
    }
}

/// `α` solving `‖(αI − Ŵ_uu)^{−1}Ŵ_ul f_l‖² = n_u e²`.
pub fn solve_alpha_for_norm<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    e: f64,
) -> Result<CenteredSolveReport> {
    CenteredSpectrum::new(graph, f_l)?.alpha_for_norm(e)
}

/// Centered regularization under the norm constraint `‖f_u‖² = n_u e²`.
pub fn centered_regularization_e<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    e: f64,
) -> Result<(ScoreVector<T>, CenteredSolveReport)> {
    let spec = CenteredSpectrum::new(graph, f_l)?;
    let rep = spec.alpha_for_norm(e)?;
    let f_u = spec.solve(T::of(rep.alpha));
    Ok((
        ScoreVector {
            f_u,
            method: Method::CenteredNorm { e, alpha: rep.alpha },
            fitted_labeled: None,
        },
        rep,
    ))
}

/// Fixed-point iteration `f ← α^{−1}(Ŵ_ul f_l + Ŵ_uu f)` from `f⁽⁰⁾ = α^{−1}Ŵ_ul f_l`.
///
/// Stops once `‖Δ‖∞ < tol` and the contraction bound `r/(1−r)·‖Δ‖₂`, with
/// `r = ‖Ŵ_uu‖/α`, is below `tol` as well.
pub fn label_propagation_iterate<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(ScoreVector<T>, CenteredSolveReport)> {
    let n_l = check_labeled(graph.n(), f_l)?;
    let bound = checked_bound(graph, n_l, alpha)?;
    let ratio = bound.as_f64() / alpha;
    let factor = ratio / (1.0 - ratio);
    let op = CenteredBlock::new(graph, n_l);
    let b = centered_cross(graph, f_l);
    let inv = T::one() / T::of(alpha);
    let mut f = &b * inv;
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let mut next = b.clone();
        for c in 0..f.ncols() {
            let col = f.column(c).into_owned();
            next.column_mut(c).axpy(T::one(), &op.apply(&col), T::one());
        }
        next *= inv;
        let delta = &next - &f;
        let dinf = delta.amax().as_f64();
        let d2 = delta.norm().as_f64();
        residual = dinf;
        f = next;
        if dinf < tol && factor * d2 < tol {
            let rep = report(alpha, bound, &f, it);
            return Ok((
                ScoreVector {
                    f_u: f,
                    method: Method::LabelPropagation {
                        alpha,
                        iterations: it,
                    },
                    fitted_labeled: None,
                },
                rep,
            ));
        }
    }
    Err(Error::NoConvergence {
        solver: "label propagation",
        iterations: max_iter,
        residual,
    })
}

/// `(αI − Ŵ_uu)^{−1}Ŵ_ul f_l` through the rank-two decomposition
/// `Ŵ = W + U A Uᵀ`, `U = [1, v]`, `v = W1`, `A = [[1ᵀW1/n², −1/n], [−1/n, 0]]`.
///
/// With `Q = (αI − W_uu)^{−1}` applied by MINRES (the shifted block is
/// indefinite in general), Woodbury gives
/// `(αI − Ŵ_uu)^{−1} = Q − QU(UᵀQU − A^{−1})^{−1}UᵀQ`.
pub fn sparse_centered_solve<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    alpha: f64,
) -> Result<(ScoreVector<T>, CenteredSolveReport)> {
    let n_l = check_labeled(graph.n(), f_l)?;
    let bound = checked_bound(graph, n_l, alpha)?;
    let n = graph.n();
    let m = n - n_l;
    let nf = T::of(n as f64);
    let wuu = WeightBlock { graph, start: n_l };
    let op = Shifted {
        inner: &wuu,
        shift: T::of(alpha),
    };
    let max_iter = 20 * m + 200;
    let ones = DVector::from_element(m, T::one());
    let v_u = graph.degrees().rows(n_l, m).into_owned();
    let q1 = minres(&op, &ones, T::attainable(KRYLOV_TOL), max_iter)?;
    let qv = minres(&op, &v_u, T::attainable(KRYLOV_TOL), max_iter)?;
    let mut iterations = q1.iterations + qv.iterations;
    let off = T::of(0.5) * (ones.dot(&qv.x) + v_u.dot(&q1.x));
    let utqu = Matrix2::new(ones.dot(&q1.x), off, off, v_u.dot(&qv.x));
    let a_inv = Matrix2::new(T::zero(), -nf, -nf, -graph.total_weight());
    let core = (utqu - a_inv)
        .try_inverse()
        .ok_or_else(|| Error::Singular("Woodbury capacitance matrix is singular".into()))?;
    let b = centered_cross(graph, f_l);
    let mut f_u = DMatrix::zeros(m, f_l.columns());
    for c in 0..f_l.columns() {
        let qb = minres(&op, &b.column(c).into_owned(), T::attainable(KRYLOV_TOL), max_iter)?;
        iterations += qb.iterations;
        let z = core * Vector2::new(ones.dot(&qb.x), v_u.dot(&qb.x));
        let mut x = qb.x;
        x.axpy(-z[0], &q1.x, T::one());
        x.axpy(-z[1], &qv.x, T::one());
        f_u.set_column(c, &x);
    }
    let rep = report(alpha, bound, &f_u, iterations);
    Ok((
        ScoreVector {
            f_u,
            method: Method::Centered { alpha },
            fitted_labeled: None,
        },
        rep,
    ))
}

/// Solutions for every `α` in `alphas` (each above `‖Ŵ_uu‖`) from one Lanczos
/// basis of the centered block per score column.
pub fn centered_alpha_sweep<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    alphas: &[f64],
) -> Result<Vec<DMatrix<T>>> {
    let n_l = check_labeled(graph.n(), f_l)?;
    let op = CenteredBlock::new(graph, n_l);
    let b = centered_cross(graph, f_l);
    let shifts: Vec<T> = alphas.iter().map(|a| T::of(*a)).collect();
    let mut out = vec![DMatrix::zeros(op.dim(), f_l.columns()); alphas.len()];
    for c in 0..f_l.columns() {
        let xs = shifted_solves(&op, &b.column(c).into_owned(), &shifts, T::attainable(KRYLOV_TOL), op.dim())?;
        for (o, x) in out.iter_mut().zip(xs) {
            o.set_column(c, &x);
        }
    }
    Ok(out)
}
