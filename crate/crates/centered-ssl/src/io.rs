//! CSV input and output. Numbers are written with 17 significant digits so a
//! round trip reproduces every `f64` exactly.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::graph::{WeightedGraph, Weights};
use crate::solvers::ScoreVector;
use crate::spectral::ClusterAssignment;
use crate::{Error, Result, Scalar};

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Rows of a headerless, comma-separated numeric file.
pub fn read_feature_rows(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let values = record
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.parse::<f64>().map_err(|_| Error::Csv {
                    row,
                    msg: format!("column {} is not numeric: {cell:?}", j + 1),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != values.len() {
                return Err(Error::Csv {
                    row,
                    msg: format!("expected {} fields, found {}", first.len(), values.len()),
                });
            }
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Empty("feature file"));
    }
    Ok(rows)
}

/// Feature matrix from a headerless CSV, one sample per row.
pub fn read_features_csv(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let rows = read_feature_rows(path)?;
    Ok(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| rows[i][j]))
}

pub fn write_features_csv<T: Scalar>(path: impl AsRef<Path>, x: &DMatrix<T>) -> Result<()> {
    let mut out = std::io::BufWriter::new(File::create(path)?);
    for i in 0..x.nrows() {
        let line: Vec<String> = x.row(i).iter().map(|v| format_float(v.as_f64())).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// `i,j,w` rows for every stored edge with `i ≤ j`, 0-based.
pub fn write_edge_list<T: Scalar, W: Write>(graph: &WeightedGraph<T>, mut out: W) -> Result<()> {
    writeln!(out, "i,j,w")?;
    match graph.weights() {
        Weights::Dense(w) => {
            for i in 0..w.nrows() {
                for j in i..w.ncols() {
                    if w[(i, j)] != T::zero() {
                        writeln!(out, "{i},{j},{}", format_float(w[(i, j)].as_f64()))?;
                    }
                }
            }
        }
        Weights::Sparse(w) => {
            for i in 0..w.nrows() {
                let (cols, vals) = w.row(i);
                for (&j, v) in cols.iter().zip(vals) {
                    if j >= i {
                        writeln!(out, "{i},{j},{}", format_float(v.as_f64()))?;
                    }
                }
            }
        }
    }
    Ok(())
}

/// `index,score[,score_k…],label` for the unlabeled nodes; `index` counts from
/// the first unlabeled node at `offset`.
pub fn write_scores<T: Scalar, W: Write>(scores: &ScoreVector<T>, offset: usize, mut out: W) -> Result<()> {
    let k = scores.f_u.ncols();
    let header: Vec<String> = if k == 1 {
        vec!["score".into()]
    } else {
        (0..k).map(|c| format!("score_{c}")).collect()
    };
    writeln!(out, "index,{},label", header.join(","))?;
    let labels = scores.predict();
    for (i, label) in labels.iter().enumerate() {
        let row: Vec<String> = scores.f_u.row(i).iter().map(|v| format_float(v.as_f64())).collect();
        writeln!(out, "{},{},{label}", offset + i, row.join(","))?;
    }
    Ok(())
}

/// `index,label,vector` per node.
pub fn write_assignment<T: Scalar, W: Write>(assignment: &ClusterAssignment<T>, mut out: W) -> Result<()> {
    writeln!(out, "index,label,vector")?;
    for (i, (label, v)) in assignment.labels.iter().zip(assignment.vector.iter()).enumerate() {
        writeln!(out, "{i},{label},{}", format_float(v.as_f64()))?;
    }
    Ok(())
}
