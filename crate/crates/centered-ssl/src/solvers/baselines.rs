use nalgebra::{DMatrix, DVector};

use super::{check_labeled, signed_labels, LabeledScores, Method, ScoreVector};
use crate::graph::{a_normalized_laplacian, WeightedGraph};
use crate::{Error, Result, Scalar};

/// Full eigendecomposition of `L_s = I − D^{−1/2}WD^{−1/2}`.
///
/// Columns are ordered by ascending eigenvalue, except that the trivial
/// eigenvector `√d/‖√d‖` (eigenvalue 0) is always the last column. Column 0 is
/// therefore the Fiedler-type vector even on disconnected graphs.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum<T: Scalar> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
    degrees: DVector<T>,
}

impl<T: Scalar> LaplacianSpectrum<T> {
    pub fn new(graph: &WeightedGraph<T>) -> Result<Self> {
        let l = a_normalized_laplacian(graph, -0.5)?;
        let n = graph.n();
        let root = graph.degrees().map(|d| d.sqrt()).normalize();
        // Lifting the trivial direction to eigenvalue 3 (above the [0, 2] spectrum)
        // separates it from any other null vectors.
        let lifted = DMatrix::from_fn(n, n, |i, j| {
            T::of(0.5) * (l[(i, j)] + l[(j, i)]) + T::of(3.0) * root[i] * root[j]
        });
        let eig = lifted.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut values = DVector::from_fn(n, |k, _| eig.eigenvalues[order[k]]);
        let mut vectors = DMatrix::from_fn(n, n, |i, k| eig.eigenvectors[(i, order[k])]);
        values[n - 1] = T::zero();
        vectors.set_column(n - 1, &root);
        Ok(Self {
            values,
            vectors,
            degrees: graph.degrees().clone(),
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Iterated Laplacian regularization with the penalty `fᵀ(L^(a))^m f`:
    /// `f_u = −((L^m)_uu)^{−1}(L^m)_ul f_l`, the power taken before extracting blocks.
    pub fn iterated(&self, f_l: &LabeledScores<T>, m: u32, a: f64) -> Result<ScoreVector<T>> {
        let n = self.n();
        let n_l = check_labeled(n, f_l)?;
        if m == 0 {
            return Err(Error::InvalidArgument("m must be at least 1".into()));
        }
        let top = self.values.max();
        if top <= T::zero() {
            return Err(Error::Singular("Laplacian spectrum is identically zero".into()));
        }
        // (L^(a))^m = S^{−1} L_s^m S with S = D^{1/2+a}; eigenvalues scaled by top^m
        // so large powers stay finite.
        let pow = self.values.map(|l| (l / top).powi(m as i32));
        let u_u = self.vectors.rows(n_l, n - n_l);
        let u_l = self.vectors.rows(0, n_l);
        let mut scaled_u = u_u.into_owned();
        for (k, mut col) in scaled_u.column_iter_mut().enumerate() {
            col *= pow[k];
        }
        let m_uu = &scaled_u * u_u.transpose();
        let m_ul = &scaled_u * u_l.transpose();
        let a_t = T::of(0.5 + a);
        let s = self.degrees.map(|d| d.powf(a_t));
        let mut rhs = DMatrix::from_fn(n_l, f_l.columns(), |i, c| s[i] * f_l.f_l[(i, c)]);
        rhs = -(m_ul * rhs);
        let lu = m_uu.lu();
        let x = lu
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("(L^{m})_uu is singular")))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular(format!("(L^{m})_uu is numerically singular")));
        }
        let f_u = DMatrix::from_fn(n - n_l, f_l.columns(), |k, c| x[(k, c)] / s[n_l + k]);
        Ok(ScoreVector {
            f_u,
            method: Method::IteratedLaplacian { m, a },
            fitted_labeled: None,
        })
    }

    /// Least-squares fit of the `±1` labels on the first `s` eigenvectors:
    /// `f = Ea`, `a = (E_lᵀE_l)^{−1}E_lᵀy_l`, with `+1e-10·I` added to a
    /// rank-deficient Gram matrix.
    pub fn eigenvector_fit(&self, labels: &[usize], class_count: usize, s: usize) -> Result<ScoreVector<T>> {
        let n = self.n();
        let n_l = labels.len();
        if n_l == 0 || n_l >= n {
            return Err(Error::InvalidArgument(format!("need 1 <= n_l < n, got n_l = {n_l}")));
        }
        if s == 0 || s > n {
            return Err(Error::InvalidArgument(format!("need 1 <= s <= n = {n}, got s = {s}")));
        }
        let y = signed_labels::<T>(labels, class_count)?;
        let e = self.vectors.columns(0, s);
        let e_l = e.rows(0, n_l);
        let mut gram = e_l.transpose() * e_l;
        let ev = gram.clone().symmetric_eigenvalues();
        if ev.min() <= T::of(1e-12) * ev.amax().max(T::one()) {
            for k in 0..s {
                gram[(k, k)] += T::of(1e-10);
            }
        }
        let rhs = e_l.transpose() * &y;
        let coef = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Singular("eigenvector Gram matrix is singular".into()))?,
        };
        let f = e * coef;
        Ok(ScoreVector {
            f_u: f.rows(n_l, n - n_l).into_owned(),
            method: Method::Eigenvector { s },
            fitted_labeled: Some(f.rows(0, n_l).into_owned()),
        })
    }
}

/// Iterated Laplacian regularization with `m`-th power of `L^(a)`.
pub fn iterated_laplacian<T: Scalar>(
    graph: &WeightedGraph<T>,
    f_l: &LabeledScores<T>,
    m: u32,
    a: f64,
) -> Result<ScoreVector<T>> {
    LaplacianSpectrum::new(graph)?.iterated(f_l, m, a)
}

/// Eigenvector-based semi-supervised fit on `s` nontrivial eigenvectors of `L_s`
/// (the trivial `√d` direction is used last, only when `s = n`).
pub fn eigenvector_ssl<T: Scalar>(
    graph: &WeightedGraph<T>,
    labels: &[usize],
    class_count: usize,
    s: usize,
) -> Result<ScoreVector<T>> {
    LaplacianSpectrum::new(graph)?.eigenvector_fit(labels, class_count, s)
}
