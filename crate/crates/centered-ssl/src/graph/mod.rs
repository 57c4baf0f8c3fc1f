//! Similarity graphs from feature vectors: kernel weights, KNN adjacency,
//! centering, a-normalized Laplacians and distance-concentration diagnostics.

mod dataset;
mod kernel;
mod weighted;

pub use dataset::SplitDataset;
pub use kernel::{FnKernel, GaussianKernel, Kernel, KernelJet, FD_STEP};
pub use weighted::{WeightedGraph, Weights, SPARSE_THRESHOLD};

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::linalg::LinearOperator;
use crate::{Error, Result, Scalar};

fn check_finite<T: Scalar>(x: &DMatrix<T>) -> Result<()> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::Empty("feature matrix"));
    }
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if !x[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Matrix of `‖xᵢ − xⱼ‖²/p` over the rows of `x`.
pub fn pairwise_sq_distances<T: Scalar>(x: &DMatrix<T>) -> Result<DMatrix<T>> {
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(Error::Empty("feature matrix"));
    }
    let xt = x.transpose();
    let inv_p = T::one() / T::of(p as f64);
    let mut d = DMatrix::zeros(n, n);
    d.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, col)| {
            let xj = xt.column(j);
            for (i, out) in col.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let xi = xt.column(i);
                let mut acc = T::zero();
                for k in 0..p {
                    let diff = xi[k] - xj[k];
                    acc += diff * diff;
                }
                *out = acc * inv_p;
            }
        });
    Ok(d)
}

/// Kernel graph `wᵢⱼ = h(‖xᵢ − xⱼ‖²/p)` keeping the self-weights `h(0)`.
pub fn build_weight_matrix<T: Scalar>(x: &DMatrix<T>, kernel: &dyn Kernel) -> Result<WeightedGraph<T>> {
    build_weight_matrix_with(x, kernel, true)
}

pub fn build_weight_matrix_with<T: Scalar>(
    x: &DMatrix<T>,
    kernel: &dyn Kernel,
    self_loops: bool,
) -> Result<WeightedGraph<T>> {
    check_finite(x)?;
    let d = pairwise_sq_distances(x)?;
    let n = d.nrows();
    let mut w = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i == j && !self_loops {
                continue;
            }
            let h = kernel.eval(d[(i, j)].as_f64());
            if !h.is_finite() || h < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "kernel value {h} at distance {} is not a valid weight",
                    d[(i, j)].as_f64()
                )));
            }
            w[(i, j)] = T::of(h);
        }
    }
    WeightedGraph::from_dense(w)
}

/// Binary symmetric graph linking `i` and `j` when either is among the other's
/// `k` nearest neighbors; distance ties are broken by lower index.
pub fn knn_graph<T: Scalar>(x: &DMatrix<T>, k: usize) -> Result<WeightedGraph<T>> {
    check_finite(x)?;
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= k < n, got k = {k} with n = {n}")));
    }
    let d = pairwise_sq_distances(x)?;
    let mut w = DMatrix::zeros(n, n);
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        order.clear();
        order.extend((0..n).filter(|&j| j != i));
        order.sort_by(|&a, &b| {
            d[(i, a)]
                .partial_cmp(&d[(i, b)])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &j in order.iter().take(k) {
            w[(i, j)] = T::one();
            w[(j, i)] = T::one();
        }
    }
    WeightedGraph::from_dense(w)
}

/// `PMP` with `P = I − 11ᵀ/n` for a square matrix `M`.
pub fn center_dense<T: Scalar>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    let nf = T::of(n as f64);
    let rows = DVector::from_fn(n, |i, _| m.row(i).sum());
    let cols = DVector::from_fn(n, |j, _| m.column(j).sum());
    let total = rows.sum();
    let corner = total / (nf * nf);
    DMatrix::from_fn(n, n, |i, j| m[(i, j)] - (rows[i] + cols[j]) / nf + corner)
}

/// The centered similarity matrix `Ŵ = PWP`.
pub fn center_weights<T: Scalar>(graph: &WeightedGraph<T>) -> DMatrix<T> {
    graph.centered().clone()
}

/// `L^(a) = I − D^{−1−a} W D^a`.
pub fn a_normalized_laplacian<T: Scalar>(graph: &WeightedGraph<T>, a: f64) -> Result<DMatrix<T>> {
    if let Some(i) = graph.first_isolated() {
        return Err(Error::ZeroDegree(i));
    }
    let d = graph.degrees();
    let a_t = T::of(a);
    let left = d.map(|x| x.powf(-T::one() - a_t));
    let right = d.map(|x| x.powf(a_t));
    let w = graph.to_dense();
    let n = graph.n();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let v = -left[i] * w[(i, j)] * right[j];
        if i == j {
            T::one() + v
        } else {
            v
        }
    }))
}

/// Summary of the off-diagonal normalized distances `δᵢⱼ = ‖xᵢ − xⱼ‖²/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceStats {
    pub mean: f64,
    pub std: f64,
    pub max_deviation: f64,
    pub pairs: usize,
}

pub fn distance_concentration_stats<T: Scalar>(x: &DMatrix<T>) -> Result<DistanceStats> {
    if x.nrows() < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let d = pairwise_sq_distances(x)?;
    let n = d.nrows();
    let vals: Vec<f64> = (0..n)
        .flat_map(|j| (0..j).map(move |i| (i, j)))
        .map(|(i, j)| d[(i, j)].as_f64())
        .collect();
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    let max_deviation = vals.iter().fold(0.0_f64, |acc, v| acc.max((v - mean).abs()));
    Ok(DistanceStats {
        mean,
        std: var.sqrt(),
        max_deviation,
        pairs: vals.len(),
    })
}

/// Matrix-free `Ŵ[u, u]` for the index block `u = start..n`, using
/// `Ŵ = W − (1vᵀ + v1ᵀ)/n + (1ᵀW1/n²)11ᵀ` with `v = W1`.
pub struct CenteredBlock<'a, T: Scalar> {
    graph: &'a WeightedGraph<T>,
    start: usize,
}

impl<'a, T: Scalar> CenteredBlock<'a, T> {
    pub fn new(graph: &'a WeightedGraph<T>, start: usize) -> Self {
        Self { graph, start }
    }

    fn range(&self) -> Range<usize> {
        self.start..self.graph.n()
    }

    /// `Ŵ[u, cols] · x` for any column range.
    pub fn apply_from(&self, cols: Range<usize>, x: &DVector<T>) -> DVector<T> {
        let g = self.graph;
        let n = T::of(g.n() as f64);
        let rows = self.range();
        let v = g.degrees();
        let vx = v.rows(cols.start, cols.len()).dot(x);
        let sx = x.sum();
        let corner = g.total_weight() / (n * n) * sx;
        let mut y = g.block_matvec(rows.clone(), cols, x);
        for (k, i) in rows.enumerate() {
            y[k] += corner - (vx + v[i] * sx) / n;
        }
        y
    }
}

impl<T: Scalar> LinearOperator<T> for CenteredBlock<'_, T> {
    fn dim(&self) -> usize {
        self.graph.n() - self.start
    }

    fn apply(&self, x: &DVector<T>) -> DVector<T> {
        self.apply_from(self.range(), x)
    }
}

/// Matrix-free `W[u, u]` for the index block `u = start..n`.
pub struct WeightBlock<'a, T: Scalar> {
    pub graph: &'a WeightedGraph<T>,
    pub start: usize,
}

impl<T: Scalar> LinearOperator<T> for WeightBlock<'_, T> {
    fn dim(&self) -> usize {
        self.graph.n() - self.start
    }

    fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let r = self.start..self.graph.n();
        self.graph.block_matvec(r.clone(), r, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_opposite_points_distance() {
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0]);
        let d = pairwise_sq_distances(&x).unwrap();
        assert_eq!(d[(0, 1)], 1.0);
        assert_eq!(d[(1, 0)], 1.0);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn empty_input_rejected() {
        let x = DMatrix::<f64>::zeros(0, 3);
        assert!(pairwise_sq_distances(&x).is_err());
    }

    #[test]
    fn two_node_laplacian_a0() {
        let w = DMatrix::from_element(2, 2, 1.0);
        let g = WeightedGraph::from_dense(w).unwrap();
        let l = a_normalized_laplacian(&g, 0.0).unwrap();
        let oracle = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert!((l - oracle).amax() < 1e-15);
    }

    #[test]
    fn zero_degree_is_named() {
        let mut w = DMatrix::from_element(3, 3, 1.0);
        for k in 0..3 {
            w[(2, k)] = 0.0;
            w[(k, 2)] = 0.0;
        }
        let g = WeightedGraph::from_dense(w).unwrap();
        match a_normalized_laplacian(&g, -1.0) {
            Err(Error::ZeroDegree(2)) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn all_ones_centers_to_zero() {
        let g = WeightedGraph::from_dense(DMatrix::from_element(4, 4, 1.0)).unwrap();
        assert!(center_weights(&g).amax() < 1e-15);
        let i3 = WeightedGraph::from_dense(DMatrix::<f64>::identity(3, 3)).unwrap();
        let oracle = DMatrix::identity(3, 3) - DMatrix::from_element(3, 3, 1.0 / 3.0);
        assert!((center_weights(&i3) - oracle).amax() < 1e-15);
    }

    #[test]
    fn knn_collinear_middle_links_both_ends() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let g = knn_graph(&x, 1).unwrap();
        assert_eq!(g.get(1, 0), 1.0);
        assert_eq!(g.get(1, 2), 1.0);
        assert_eq!(g.get(0, 2), 0.0);
        assert!(knn_graph(&x, 3).is_err());
    }

    #[test]
    fn identical_pair_stats() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0]);
        let s = distance_concentration_stats(&x).unwrap();
        assert_eq!((s.mean, s.std, s.max_deviation, s.pairs), (0.0, 0.0, 0.0, 1));
    }

    #[test]
    fn centered_block_matches_dense() {
        let x = DMatrix::from_fn(9, 3, |i, j| ((i * 3 + j * 5) % 7) as f64 * 0.3);
        let g = build_weight_matrix(&x, &GaussianKernel::default()).unwrap();
        let wh = center_weights(&g);
        let op = CenteredBlock::new(&g, 4);
        let v = DVector::from_fn(5, |i, _| i as f64 - 1.5);
        let oracle = wh.view((4, 4), (5, 5)) * &v;
        assert!((op.apply(&v) - oracle).amax() < 1e-13);
        let f = DVector::from_fn(4, |i, _| 1.0 - i as f64);
        let cross = wh.view((4, 0), (5, 4)) * &f;
        assert!((op.apply_from(0..4, &f) - cross).amax() < 1e-13);
    }
}
