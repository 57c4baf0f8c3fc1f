use std::ops::Range;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::linalg::CsrMatrix;
use crate::{Error, Result, Scalar};

/// Fraction of zero entries at or above which weights are stored sparsely.
pub const SPARSE_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone)]
pub enum Weights<T: Scalar> {
    Dense(DMatrix<T>),
    Sparse(CsrMatrix<T>),
}

/// Symmetric non-negative similarity matrix with cached degrees and centered view.
#[derive(Debug)]
pub struct WeightedGraph<T: Scalar> {
    weights: Weights<T>,
    degrees: DVector<T>,
    centered: OnceLock<DMatrix<T>>,
}

impl<T: Scalar> Clone for WeightedGraph<T> {
    fn clone(&self) -> Self {
        Self {
            weights: self.weights.clone(),
            degrees: self.degrees.clone(),
            centered: OnceLock::new(),
        }
    }
}

fn symmetry_tol<T: Scalar>(max_abs: T) -> T {
    T::of(64.0) * T::default_epsilon() * max_abs.max(T::one())
}

impl<T: Scalar> WeightedGraph<T> {
    /// Validates `w` and picks sparse storage when at least 90% of entries are zero.
    pub fn from_dense(w: DMatrix<T>) -> Result<Self> {
        let zeros = w.iter().filter(|v| **v == T::zero()).count();
        let total = w.len().max(1);
        if zeros as f64 / total as f64 >= SPARSE_THRESHOLD {
            Self::validate_dense(&w)?;
            Self::from_sparse(CsrMatrix::from_dense(&w))
        } else {
            Self::from_dense_storage(w)
        }
    }

    /// Like [`from_dense`](Self::from_dense) but always keeps dense storage.
    pub fn from_dense_storage(w: DMatrix<T>) -> Result<Self> {
        Self::validate_dense(&w)?;
        let degrees = DVector::from_fn(w.nrows(), |i, _| w.row(i).sum());
        Ok(Self {
            weights: Weights::Dense(w),
            degrees,
            centered: OnceLock::new(),
        })
    }

    pub fn from_sparse(w: CsrMatrix<T>) -> Result<Self> {
        if w.nrows() == 0 {
            return Err(Error::Empty("weight matrix"));
        }
        if w.nrows() != w.ncols() {
            return Err(Error::Dimension(format!("weight matrix is {}x{}", w.nrows(), w.ncols())));
        }
        let max_abs = w.values().iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if w.values().iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        if !w.is_symmetric(symmetry_tol(max_abs)) {
            return Err(Error::InvalidArgument("weight matrix is not symmetric".into()));
        }
        let degrees = w.row_sums();
        Ok(Self {
            weights: Weights::Sparse(w),
            degrees,
            centered: OnceLock::new(),
        })
    }

    fn validate_dense(w: &DMatrix<T>) -> Result<()> {
        if w.nrows() == 0 {
            return Err(Error::Empty("weight matrix"));
        }
        if w.nrows() != w.ncols() {
            return Err(Error::Dimension(format!("weight matrix is {}x{}", w.nrows(), w.ncols())));
        }
        if w.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        let tol = symmetry_tol(w.amax());
        for i in 0..w.nrows() {
            for j in 0..i {
                if (w[(i, j)] - w[(j, i)]).abs() > tol {
                    return Err(Error::InvalidArgument(format!(
                        "weight matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.degrees.len()
    }

    pub fn degrees(&self) -> &DVector<T> {
        &self.degrees
    }

    pub fn weights(&self) -> &Weights<T> {
        &self.weights
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.weights, Weights::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        match &self.weights {
            Weights::Dense(w) => w[(i, j)],
            Weights::Sparse(w) => w.get(i, j),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        match &self.weights {
            Weights::Dense(w) => w.clone(),
            Weights::Sparse(w) => w.to_dense(),
        }
    }

    /// Same graph with compressed sparse storage.
    pub fn to_sparse(&self) -> Self {
        let csr = match &self.weights {
            Weights::Dense(w) => CsrMatrix::from_dense(w),
            Weights::Sparse(w) => w.clone(),
        };
        Self {
            weights: Weights::Sparse(csr),
            degrees: self.degrees.clone(),
            centered: OnceLock::new(),
        }
    }

    /// Same graph with dense storage.
    pub fn to_dense_graph(&self) -> Self {
        Self {
            weights: Weights::Dense(self.to_dense()),
            degrees: self.degrees.clone(),
            centered: OnceLock::new(),
        }
    }

    /// Copy with every self-weight `wᵢᵢ` set to zero.
    pub fn without_self_loops(&self) -> Self {
        match &self.weights {
            Weights::Dense(w) => {
                let mut w = w.clone();
                w.fill_diagonal(T::zero());
                Self::from_dense_storage(w).expect("zeroing the diagonal keeps a valid graph")
            }
            Weights::Sparse(w) => {
                let mut trip = Vec::with_capacity(w.nnz());
                for i in 0..w.nrows() {
                    let (cols, vals) = w.row(i);
                    for (j, v) in cols.iter().zip(vals) {
                        if *j != i {
                            trip.push((i, *j, *v));
                        }
                    }
                }
                Self::from_sparse(CsrMatrix::from_triplets(w.nrows(), w.ncols(), trip))
                    .expect("zeroing the diagonal keeps a valid graph")
            }
        }
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        match &self.weights {
            Weights::Dense(w) => w * x,
            Weights::Sparse(w) => w.matvec(x),
        }
    }

    /// `W[rows, cols] · x`.
    pub fn block_matvec(&self, rows: Range<usize>, cols: Range<usize>, x: &DVector<T>) -> DVector<T> {
        match &self.weights {
            Weights::Dense(w) => w.view((rows.start, cols.start), (rows.len(), cols.len())) * x,
            Weights::Sparse(w) => w.matvec_block(rows, cols, x),
        }
    }

    pub fn dense_block(&self, rows: Range<usize>, cols: Range<usize>) -> DMatrix<T> {
        match &self.weights {
            Weights::Dense(w) => w.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned(),
            Weights::Sparse(w) => DMatrix::from_fn(rows.len(), cols.len(), |i, j| {
                w.get(rows.start + i, cols.start + j)
            }),
        }
    }

    /// `1ᵀW1`.
    pub fn total_weight(&self) -> T {
        self.degrees.sum()
    }

    pub fn max_weight(&self) -> T {
        match &self.weights {
            Weights::Dense(w) => w.amax(),
            Weights::Sparse(w) => w.values().iter().fold(T::zero(), |m, v| m.max(v.abs())),
        }
    }

    /// Graph induced by `nodes`, node `k` of the result being `nodes[k]`.
    /// Storage kind is preserved.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut position = vec![usize::MAX; n];
        for (k, &v) in nodes.iter().enumerate() {
            if v >= n {
                return Err(Error::InvalidArgument(format!("node {v} out of range for n = {n}")));
            }
            if position[v] != usize::MAX {
                return Err(Error::InvalidArgument(format!("node {v} listed twice")));
            }
            position[v] = k;
        }
        match &self.weights {
            Weights::Dense(w) => Self::from_dense_storage(DMatrix::from_fn(nodes.len(), nodes.len(), |i, j| {
                w[(nodes[i], nodes[j])]
            })),
            Weights::Sparse(w) => {
                let mut trip = Vec::new();
                for (k, &v) in nodes.iter().enumerate() {
                    let (cols, vals) = w.row(v);
                    for (j, x) in cols.iter().zip(vals) {
                        if position[*j] != usize::MAX {
                            trip.push((k, position[*j], *x));
                        }
                    }
                }
                Self::from_sparse(CsrMatrix::from_triplets(nodes.len(), nodes.len(), trip))
            }
        }
    }

    /// Nodes of the largest connected component in increasing order; ties go
    /// to the component holding the smallest index.
    pub fn largest_component(&self) -> Vec<usize> {
        let n = self.n();
        let mut comp = vec![usize::MAX; n];
        let mut best = (0usize, 0usize);
        let mut stack = Vec::new();
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = next;
            next += 1;
            comp[start] = id;
            stack.push(start);
            let mut size = 0;
            while let Some(v) = stack.pop() {
                size += 1;
                let mut visit = |j: usize| {
                    if comp[j] == usize::MAX {
                        comp[j] = id;
                        stack.push(j);
                    }
                };
                match &self.weights {
                    Weights::Dense(w) => (0..n).filter(|&j| w[(v, j)] > T::zero()).for_each(&mut visit),
                    Weights::Sparse(w) => {
                        let (cols, vals) = w.row(v);
                        cols.iter().zip(vals).filter(|(_, x)| **x > T::zero()).for_each(|(j, _)| visit(*j));
                    }
                }
            }
            if size > best.1 {
                best = (id, size);
            }
        }
        (0..n).filter(|&v| comp[v] == best.0).collect()
    }

    pub fn first_isolated(&self) -> Option<usize> {
        self.degrees.iter().position(|d| *d <= T::zero())
    }

    /// Lazily computed `Ŵ = PWP` with `P = I − 11ᵀ/n`.
    pub fn centered(&self) -> &DMatrix<T> {
        self.centered.get_or_init(|| super::center_dense(&self.to_dense()))
    }

    pub fn nnz(&self) -> usize {
        match &self.weights {
            Weights::Dense(w) => w.iter().filter(|v| **v != T::zero()).count(),
            Weights::Sparse(w) => w.nnz(),
        }
    }
}
