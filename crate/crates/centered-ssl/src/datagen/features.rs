use std::path::Path;

use rand::seq::SliceRandom;

use super::{seeded_rng, stratify_prefix_by};
use crate::graph::SplitDataset;
use crate::io::read_feature_rows;
use crate::{Error, Result};

/// Reads a headerless numeric CSV, takes column `labels_column` as the class
/// label and keeps the first `n_l` rows as the labeled set.
///
/// Distinct label values are mapped to `0..K` in increasing order. With
/// `shuffle_seed` the rows are shuffled first and the labeled prefix is
/// stratified so that every class is represented.
pub fn load_features_csv(
    path: impl AsRef<Path>,
    n_l: usize,
    labels_column: usize,
    shuffle_seed: Option<u64>,
) -> Result<SplitDataset<f64>> {
    let rows = read_feature_rows(path)?;
    let n = rows.len();
    if n_l == 0 || n_l >= n {
        return Err(Error::InvalidArgument(format!("need 1 <= n_l < n, got n_l = {n_l} with n = {n}")));
    }
    let width = rows[0].len();
    if labels_column >= width || width < 2 {
        return Err(Error::InvalidArgument(format!(
            "label column {labels_column} out of range for {width} columns with at least one feature"
        )));
    }
    let mut raw = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let v = row[labels_column];
        if v.fract() != 0.0 {
            return Err(Error::Csv {
                row: i + 1,
                msg: format!("label {v} is not an integer"),
            });
        }
        raw.push(v as i64);
    }
    let mut distinct = raw.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::SingleClass);
    }
    let mut rows_and_classes: Vec<(usize, usize)> = raw
        .iter()
        .enumerate()
        .map(|(i, v)| (i, distinct.binary_search(v).expect("value present")))
        .collect();
    if let Some(seed) = shuffle_seed {
        rows_and_classes.shuffle(&mut seeded_rng(seed));
        stratify_prefix_by(&mut rows_and_classes, n_l, distinct.len(), |rc| rc.1)?;
    }
    let order: Vec<usize> = rows_and_classes.iter().map(|rc| rc.0).collect();
    let classes: Vec<usize> = rows_and_classes.iter().map(|rc| rc.1).collect();
    let p = width - 1;
    let x = nalgebra::DMatrix::from_fn(n, p, |i, j| {
        let col = if j < labels_column { j } else { j + 1 };
        rows[order[i]][col]
    });
    SplitDataset::new(x, classes[..n_l].to_vec(), distinct.len(), Some(classes))
}
