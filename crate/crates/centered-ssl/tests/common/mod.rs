#![allow(dead_code)]

use centered_ssl::graph::{build_weight_matrix, GaussianKernel, WeightedGraph};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n × p` matrix of standard normals, shifted by `±shift` on the first
/// coordinate according to `classes`.
pub fn two_blob_features(classes: &[usize], p: usize, shift: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let normal = rand_distr::StandardNormal;
    DMatrix::from_fn(classes.len(), p, |i, j| {
        let z: f64 = r.sample(normal);
        if j == 0 {
            z + if classes[i] == 0 { -shift } else { shift }
        } else {
            z
        }
    })
}

/// Alternating classes `0, 1, 0, 1, …`.
pub fn alternating(n: usize) -> Vec<usize> {
    (0..n).map(|i| i % 2).collect()
}

pub fn small_graph(n: usize, p: usize, seed: u64) -> (WeightedGraph<f64>, Vec<usize>) {
    let classes = alternating(n);
    let x = two_blob_features(&classes, p, 1.0, seed);
    (build_weight_matrix(&x, &GaussianKernel::default()).unwrap(), classes)
}

/// Random symmetric non-negative matrix with about `density` of the
/// off-diagonal pairs present.
pub fn random_sparse_weights(n: usize, density: f64, seed: u64) -> DMatrix<f64> {
    let mut r = rng(seed);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        // a ring keeps the graph connected
        let j = (i + 1) % n;
        let v = 0.5 + r.random::<f64>();
        w[(i, j)] = v;
        w[(j, i)] = v;
        for j in (i + 2)..n {
            if r.random::<f64>() < density {
                let v = 0.5 + r.random::<f64>();
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    w
}

/// `P M P` with an explicit projector.
pub fn projector_center(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let p = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
    &p * m * &p
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).amax()
}

pub fn cosine(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(b).abs() / (a.norm() * b.norm())
}

/// Centered `±1` labels, `f_l = y − mean(y)`.
pub fn balanced_column(labels: &[usize]) -> DMatrix<f64> {
    let y: Vec<f64> = labels.iter().map(|&c| if c == 0 { -1.0 } else { 1.0 }).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    DMatrix::from_iterator(y.len(), 1, y.iter().map(|v| v - mean))
}
