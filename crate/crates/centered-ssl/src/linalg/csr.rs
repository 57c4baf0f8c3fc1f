use nalgebra::{DMatrix, DVector};

use crate::Scalar;

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Duplicate coordinates are summed; explicit zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, T)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<T> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                values.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let mut m = Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    pub fn from_dense(d: &DMatrix<T>) -> Self {
        let mut indptr = Vec::with_capacity(d.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d[(i, j)];
                if v != T::zero() {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            nrows: d.nrows(),
            ncols: d.ncols(),
            indptr,
            indices,
            values,
        }
    }

    fn prune(&mut self) {
        if self.values.iter().all(|v| *v != T::zero()) {
            return;
        }
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.values[k] != T::zero() {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[i + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[T]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (j, v) in cols.iter().zip(vals) {
                d[(i, *j)] = *v;
            }
        }
        d
    }

    pub fn row_sums(&self) -> DVector<T> {
        DVector::from_fn(self.nrows, |i, _| {
            self.row(i).1.iter().fold(T::zero(), |acc, v| acc + *v)
        })
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        DVector::from_fn(self.nrows, |i, _| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .fold(T::zero(), |acc, (j, v)| acc + *v * x[*j])
        })
    }

    /// `y = M[rows, cols] · x` where `x` is indexed relative to `cols.start`.
    pub fn matvec_block(
        &self,
        rows: std::ops::Range<usize>,
        cols: std::ops::Range<usize>,
        x: &DVector<T>,
    ) -> DVector<T> {
        let mut y = DVector::zeros(rows.len());
        for (out, i) in rows.enumerate() {
            let (idx, vals) = self.row(i);
            let lo = idx.partition_point(|&j| j < cols.start);
            let mut acc = T::zero();
            for k in lo..idx.len() {
                let j = idx[k];
                if j >= cols.end {
                    break;
                }
                acc += vals[k] * x[j - cols.start];
            }
            y[out] = acc;
        }
        y
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        (0..self.nrows).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(j, v)| (self.get(*j, i) - *v).abs() <= tol)
        })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(
            2,
            3,
            vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, 0.0)],
        );
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn block_matvec_matches_dense() {
        let d = DMatrix::from_fn(5, 5, |i, j| if (i + j) % 3 == 0 { (i * 5 + j) as f64 } else { 0.0 });
        let m = CsrMatrix::from_dense(&d);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = m.matvec_block(1..4, 2..5, &x);
        let oracle = d.view((1, 2), (3, 3)) * &x;
        assert_eq!(y, oracle);
        assert_eq!(m.to_dense(), d);
    }
}
