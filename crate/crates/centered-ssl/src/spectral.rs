//! Two-way spectral clustering on `L_s` and on `Ŵ`, and the inter/intra
//! cluster-distance functionals used to compare the two eigenvectors.

use nalgebra::DVector;

use crate::graph::{CenteredBlock, WeightedGraph};
use crate::linalg::{lanczos_largest, power_largest, LinearOperator};
use crate::solvers::LaplacianSpectrum;
use crate::{Error, Result, Scalar};

/// Graphs up to this size use a dense eigendecomposition of `L_s`.
pub const DENSE_EIGEN_LIMIT: usize = 2000;
const EIGEN_TOL: f64 = 1e-8;
const GAP_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ClusterAssignment<T: Scalar> {
    /// Class index per node: 0 where the oriented vector is `≤ 0`, 1 elsewhere.
    pub labels: Vec<usize>,
    pub vector: DVector<T>,
    pub eigenvalue: T,
    /// Set when the eigengap around the chosen eigenvalue is below 1e-10.
    pub degenerate: bool,
}

/// Flips `v` so that its first nonzero entry is non-negative.
pub fn orient<T: Scalar>(v: &mut DVector<T>) {
    if let Some(first) = v.iter().find(|x| **x != T::zero()) {
        if *first < T::zero() {
            v.neg_mut();
        }
    }
}

pub fn sign_labels<T: Scalar>(v: &DVector<T>) -> Vec<usize> {
    v.iter().map(|x| usize::from(*x > T::zero())).collect()
}

fn assignment<T: Scalar>(mut vector: DVector<T>, eigenvalue: T, degenerate: bool) -> ClusterAssignment<T> {
    orient(&mut vector);
    ClusterAssignment {
        labels: sign_labels(&vector),
        vector,
        eigenvalue,
        degenerate,
    }
}

/// `D^{−1/2}WD^{−1/2}` restricted to the complement of `√d`.
struct DeflatedNormalized<'a, T: Scalar> {
    graph: &'a WeightedGraph<T>,
    inv_sqrt: DVector<T>,
    root: DVector<T>,
}

impl<T: Scalar> LinearOperator<T> for DeflatedNormalized<'_, T> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let mut px = x.clone();
        px.axpy(-self.root.dot(x), &self.root, T::one());
        let y = self.graph.matvec(&px.component_mul(&self.inv_sqrt)).component_mul(&self.inv_sqrt);
        let mut out = y.clone();
        out.axpy(-self.root.dot(&y), &self.root, T::one());
        out
    }
}

/// Partition by the eigenvector of `L_s` for its second smallest eigenvalue.
pub fn spectral_cluster_laplacian<T: Scalar>(graph: &WeightedGraph<T>) -> Result<ClusterAssignment<T>> {
    if graph.n() < 2 {
        return Err(Error::InvalidArgument("need at least two nodes".into()));
    }
    if graph.n() <= DENSE_EIGEN_LIMIT {
        let spec = LaplacianSpectrum::new(graph)?;
        let gap_below = spec.values[0];
        let gap_above = if spec.n() > 2 { spec.values[1] - spec.values[0] } else { T::one() };
        let degenerate = gap_below.abs() < T::of(GAP_TOL) || gap_above < T::of(GAP_TOL);
        return Ok(assignment(spec.vectors.column(0).into_owned(), spec.values[0], degenerate));
    }
    if let Some(i) = graph.first_isolated() {
        return Err(Error::ZeroDegree(i));
    }
    let op = DeflatedNormalized {
        graph,
        inv_sqrt: graph.degrees().map(|d| T::one() / d.sqrt()),
        root: graph.degrees().map(|d| d.sqrt()).normalize(),
    };
    let pair = lanczos_largest(&op, T::attainable(EIGEN_TOL), graph.n().min(1500))?;
    Ok(assignment(pair.vector, T::one() - pair.value, false))
}

/// Partition by the eigenvector of `Ŵ` for its largest eigenvalue.
pub fn spectral_cluster_centered<T: Scalar>(graph: &WeightedGraph<T>) -> Result<ClusterAssignment<T>> {
    if graph.n() < 2 {
        return Err(Error::InvalidArgument("need at least two nodes".into()));
    }
    let op = CenteredBlock::new(graph, 0);
    let pair = power_largest(&op, T::attainable(EIGEN_TOL), 100_000)?;
    let degenerate = pair.value.abs() < T::of(GAP_TOL);
    Ok(assignment(pair.vector, pair.value, degenerate))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterQuality {
    pub d_inter: f64,
    pub d_intra: f64,
    /// `d_inter/d_intra`, `+∞` when `d_intra = 0`.
    pub ratio: f64,
}

/// `d_inter = |j₁ᵀv/n₁ − j₂ᵀv/n₂|` and
/// `d_intra = ‖v − (j₁ᵀv/n₁)j₁ − (j₂ᵀv/n₂)j₂‖/√n` for class indicators `j_k`.
pub fn cluster_quality<T: Scalar>(v: &DVector<T>, truth: &[usize]) -> Result<ClusterQuality> {
    if v.len() != truth.len() {
        return Err(Error::Dimension(format!("{} entries vs {} labels", v.len(), truth.len())));
    }
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (x, &c) in v.iter().zip(truth) {
        if c > 1 {
            return Err(Error::InvalidArgument(format!("class {c} in a two-class comparison")));
        }
        sums[c] += x.as_f64();
        counts[c] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::InvalidArgument("both classes must be present".into()));
    }
    let means = [sums[0] / counts[0] as f64, sums[1] / counts[1] as f64];
    let d_inter = (means[0] - means[1]).abs();
    let resid: f64 = v
        .iter()
        .zip(truth)
        .map(|(x, &c)| (x.as_f64() - means[c]).powi(2))
        .sum();
    let d_intra = (resid / v.len() as f64).sqrt();
    let ratio = if d_intra == 0.0 { f64::INFINITY } else { d_inter / d_intra };
    Ok(ClusterQuality {
        d_inter,
        d_intra,
        ratio,
    })
}
