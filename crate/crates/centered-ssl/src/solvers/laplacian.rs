use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{check_labeled, LabeledScores, Method, ScoreVector};
use crate::graph::WeightedGraph;
use crate::linalg::{cg, LinearOperator};
use crate::{Error, Result, Scalar};

const CG_TOL: f64 = 1e-12;

/// `(D − W)[u, u]` applied matrix-free.
struct GroundedLaplacian<'a, T: Scalar> {
    graph: &'a WeightedGraph<T>,
    start: usize,
}

impl<T: Scalar> LinearOperator<T> for GroundedLaplacian<'_, T> {
    fn dim(&self) -> usize {
        self.graph.n() - self.start
    }

    fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let r = self.start..self.graph.n();
        let mut y = self.graph.block_matvec(r.clone(), r, x);
        let d = self.graph.degrees();
        for (k, i) in (self.start..self.graph.n()).enumerate() {
            y[k] = d[i] * x[k] - y[k];
        }
        y
    }
}

enum Factor<T: Scalar> {
    Dense(Cholesky<T, Dyn>),
    Iterative,
}

/// Factorization of `(D − W)[u, u]`, shared by every `a`.
///
/// Since `L^(a) = D^{−1−a}(D − W)D^a`, the solution
/// `f_u = −(L^(a)_uu)^{−1} L^(a)_ul f_l` equals `D_u^{−a}(D − W)_uu^{−1} W_ul D_l^a f_l`.
pub struct LaplacianSystem<'a, T: Scalar> {
    graph: &'a WeightedGraph<T>,
    n_l: usize,
    factor: Factor<T>,
}

impl<'a, T: Scalar> LaplacianSystem<'a, T> {
    pub fn new(graph: &'a WeightedGraph<T>, n_l: usize) -> Result<Self> {
        let n = graph.n();
        if n_l == 0 || n_l >= n {
            return Err(Error::InvalidArgument(format!("need 1 <= n_l < n, got n_l = {n_l}")));
        }
        if let Some(i) = graph.first_isolated() {
            return Err(Error::ZeroDegree(i));
        }
        let factor = if graph.is_sparse() {
            Factor::Iterative
        } else {
            let mut m = -graph.dense_block(n_l..n, n_l..n);
            for (k, i) in (n_l..n).enumerate() {
                m[(k, k)] += graph.degrees()[i];
            }
            let chol = m.cholesky().ok_or_else(|| {
                Error::Singular(
                    "(D - W)_uu is not positive definite; some unlabeled component is not linked to labeled data"
                        .into(),
                )
            })?;
            Factor::Dense(chol)
        };
        Ok(Self { graph, n_l, factor })
    }

    pub fn solve(&self, f_l: &LabeledScores<T>, a: f64) -> Result<ScoreVector<T>> {
        if f_l.n_labeled() != self.n_l {
            return Err(Error::Dimension(format!(
                "labeled scores have {} rows, system expects {}",
                f_l.n_labeled(),
                self.n_l
            )));
        }
        if !(-2.0..=0.0).contains(&a) {
            log::warn!("a = {a} lies outside the usual range [-2, 0]");
        }
        let n = self.graph.n();
        let d = self.graph.degrees();
        let a_t = T::of(a);
        let mut f_u = DMatrix::zeros(n - self.n_l, f_l.columns());
        for c in 0..f_l.columns() {
            let scaled = DVector::from_fn(self.n_l, |i, _| d[i].powf(a_t) * f_l.f_l[(i, c)]);
            let rhs = self.graph.block_matvec(self.n_l..n, 0..self.n_l, &scaled);
            let x = match &self.factor {
                Factor::Dense(ch) => ch.solve(&rhs),
                Factor::Iterative => {
                    let op = GroundedLaplacian {
                        graph: self.graph,
                        start: self.n_l,
                    };
                    cg(&op, &rhs, T::attainable(CG_TOL), 10 * op.dim() + 100)?.x
                }
            };
            for k in 0..x.len() {
                f_u[(k, c)] = d[self.n_l + k].powf(-a_t) * x[k];
            }
        }
        Ok(ScoreVector {
            f_u,
            method: Method::Laplacian { a },
            fitted_labeled: None,
        })
    }
}

/// `f_u = −(L^(a)_uu)^{−1} L^(a)_ul f_l`; the labeled points are the first rows of the graph.
pub fn laplacian_regularization<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    a: f64,
) -> Result<ScoreVector<T>> {
    let n_l = check_labeled(graph.n(), f_l)?;
    LaplacianSystem::new(graph, n_l)?.solve(f_l, a)
}
