use nalgebra::DMatrix;

use crate::{Error, Result, Scalar};

/// Feature matrix whose first `n_labeled` rows carry class labels.
#[derive(Debug, Clone)]
pub struct SplitDataset<T: Scalar> {
    pub features: DMatrix<T>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    /// Ground-truth classes of every row when known.
    pub truth: Option<Vec<usize>>,
}

impl<T: Scalar> SplitDataset<T> {
    pub fn new(
        features: DMatrix<T>,
        labels: Vec<usize>,
        class_count: usize,
        truth: Option<Vec<usize>>,
    ) -> Result<Self> {
        let n = features.nrows();
        if features.ncols() == 0 {
            return Err(Error::Empty("feature dimension"));
        }
        if labels.is_empty() || labels.len() >= n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= n_l < n, got n_l = {} with n = {n}",
                labels.len()
            )));
        }
        if class_count < 2 {
            return Err(Error::InvalidArgument("class_count must be at least 2".into()));
        }
        if let Some(bad) = labels.iter().find(|&&c| c >= class_count) {
            return Err(Error::InvalidArgument(format!("label {bad} >= class_count {class_count}")));
        }
        for c in 0..class_count {
            if !labels.contains(&c) {
                return Err(Error::InvalidArgument(format!("class {c} absent from the labeled set")));
            }
        }
        if let Some(t) = &truth {
            if t.len() != n {
                return Err(Error::Dimension(format!("truth has {} entries for {n} rows", t.len())));
            }
        }
        Ok(Self {
            features,
            labels,
            class_count,
            truth,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.len()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.n() - self.n_labeled()
    }

    pub fn unlabeled_truth(&self) -> Option<&[usize]> {
        self.truth.as_deref().map(|t| &t[self.n_labeled()..])
    }
}
