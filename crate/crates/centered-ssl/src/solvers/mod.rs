//! Unlabeled-score solvers: Laplacian regularization, centered-similarity
//! regularization (direct, norm-constrained, label propagation, sparse
//! Woodbury and multi-shift sweeps), iterated Laplacian and eigenvector fits.

mod baselines;
mod centered;
mod laplacian;

pub use baselines::{eigenvector_ssl, iterated_laplacian, LaplacianSpectrum};
pub use centered::{
    alpha_grid, centered_alpha_sweep, centered_cross, centered_regularization_alpha,
    centered_regularization_e, centered_uu_norm, label_propagation_iterate, solve_alpha_for_norm,
    sparse_centered_solve, CenteredSolveReport, CenteredSpectrum,
};
pub use laplacian::{laplacian_regularization, LaplacianSystem};

use nalgebra::DMatrix;

use crate::{Error, Result, Scalar};

/// Fixed scores at the labeled points, one column per one-vs-rest problem
/// (a single column for two classes).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledScores<T: Scalar> {
    pub f_l: DMatrix<T>,
}

impl<T: Scalar> LabeledScores<T> {
    pub fn n_labeled(&self) -> usize {
        self.f_l.nrows()
    }

    pub fn columns(&self) -> usize {
        self.f_l.ncols()
    }

    pub fn negated(&self) -> Self {
        Self { f_l: -&self.f_l }
    }
}

/// Hyperparameters that produced a [`ScoreVector`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Laplacian { a: f64 },
    Centered { alpha: f64 },
    CenteredNorm { e: f64, alpha: f64 },
    LabelPropagation { alpha: f64, iterations: usize },
    IteratedLaplacian { m: u32, a: f64 },
    Eigenvector { s: usize },
}

#[derive(Debug, Clone)]
pub struct ScoreVector<T: Scalar> {
    /// `n_u × K` scores of the unlabeled points.
    pub f_u: DMatrix<T>,
    pub method: Method,
    /// Scores the method assigns to the labeled points, when it fits them.
    pub fitted_labeled: Option<DMatrix<T>>,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn predict(&self) -> Vec<usize> {
        classify(&self.f_u)
    }

    pub fn accuracy(&self, truth: &[usize]) -> f64 {
        accuracy(&self.predict(), truth)
    }
}

/// `±1` indicator matrix: one column for two classes (`−1` for class 0),
/// otherwise one `+1`-for-member column per class.
pub fn signed_labels<T: Scalar>(labels: &[usize], class_count: usize) -> Result<DMatrix<T>> {
    if class_count < 2 {
        return Err(Error::InvalidArgument("class_count must be at least 2".into()));
    }
    if let Some(bad) = labels.iter().find(|&&c| c >= class_count) {
        return Err(Error::InvalidArgument(format!("label {bad} >= class_count {class_count}")));
    }
    let first = labels.first().ok_or(Error::Empty("labels"))?;
    if labels.iter().all(|c| c == first) {
        return Err(Error::SingleClass);
    }
    let sign = |b: bool| if b { T::one() } else { -T::one() };
    Ok(if class_count == 2 {
        DMatrix::from_fn(labels.len(), 1, |i, _| sign(labels[i] == 1))
    } else {
        DMatrix::from_fn(labels.len(), class_count, |i, k| sign(labels[i] == k))
    })
}

/// Class-balanced labeled scores `f_l = (I − 11ᵀ/n_l) y_l`, columnwise.
pub fn balanced_label_scores<T: Scalar>(labels: &[usize], class_count: usize) -> Result<LabeledScores<T>> {
    let mut y = signed_labels::<T>(labels, class_count)?;
    for mut col in y.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    Ok(LabeledScores { f_l: y })
}

/// Binary: class 0 when `f ≤ 0`, class 1 otherwise. Multiclass: argmax, ties to
/// the lowest class index.
pub fn classify<T: Scalar>(scores: &DMatrix<T>) -> Vec<usize> {
    if scores.ncols() == 1 {
        return scores.column(0).iter().map(|f| usize::from(*f > T::zero())).collect();
    }
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect()
}

pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "prediction and truth lengths differ");
    if truth.is_empty() {
        return f64::NAN;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

fn check_labeled<T: Scalar>(n: usize, f_l: &LabeledScores<T>) -> Result<usize> {
    let n_l = f_l.n_labeled();
    if n_l == 0 || n_l >= n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= n_l < n, got n_l = {n_l} with n = {n}"
        )));
    }
    if f_l.f_l.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("labeled scores must be finite".into()));
    }
    Ok(n_l)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_scores_examples() {
        let f = balanced_label_scores::<f64>(&[1, 0], 2).unwrap();
        assert_eq!(f.f_l.as_slice(), &[1.0, -1.0]);
        let f = balanced_label_scores::<f64>(&[1, 1, 0], 2).unwrap();
        let want = [2.0 / 3.0, 2.0 / 3.0, -4.0 / 3.0];
        for (a, b) in f.f_l.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(balanced_label_scores::<f64>(&[0, 0], 2), Err(Error::SingleClass)));
    }

    #[test]
    fn classify_sign_and_ties() {
        let f = DMatrix::from_column_slice(3, 1, &[-0.2, 0.3, 0.0]);
        assert_eq!(classify(&f), vec![0, 1, 0]);
        let m = DMatrix::from_row_slice(2, 3, &[0.1, 0.5, 0.5, 2.0, -1.0, 0.0]);
        assert_eq!(classify(&m), vec![1, 0]);
    }
}
