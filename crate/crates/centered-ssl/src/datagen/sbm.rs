use rand::Rng;

use super::{seeded_rng, shuffled_classes};
use crate::graph::WeightedGraph;
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// Discrete law of the degree factors `r_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeLaw {
    pub values: Vec<f64>,
    pub probs: Vec<f64>,
}

impl DegreeLaw {
    pub fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::InvalidArgument("degree law needs matching non-empty values and probabilities".into()));
        }
        if values.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidArgument("degree factors must lie in (0, 1]".into()));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("degree probabilities must be non-negative and sum to 1".into()));
        }
        Ok(Self { values, probs })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().expect("non-empty law")
    }
}

/// Two-or-more-block SBM; `wᵢⱼ = 1` with probability `rᵢrⱼq`, `q = q_in` inside a
/// block and `q_out` across.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub sizes: Vec<usize>,
    pub q_in: f64,
    pub q_out: f64,
    pub degree_law: Option<DegreeLaw>,
}

impl SbmSpec {
    pub fn new(sizes: Vec<usize>, q_in: f64, q_out: f64, degree_law: Option<DegreeLaw>) -> Result<Self> {
        let spec = Self {
            sizes,
            q_in,
            q_out,
            degree_law,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Two equal halves of `n` nodes.
    pub fn balanced(n: usize, q_in: f64, q_out: f64, degree_law: Option<DegreeLaw>) -> Result<Self> {
        Self::new(vec![n / 2, n - n / 2], q_in, q_out, degree_law)
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidArgument("need at least two non-empty blocks".into()));
        }
        if !(0.0 <= self.q_out && self.q_out <= self.q_in && self.q_in <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= q_out <= q_in <= 1 (got {}, {})",
                self.q_out, self.q_in
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SbmSample {
    pub graph: WeightedGraph<f64>,
    pub truth: Vec<usize>,
    pub degree_factors: Vec<f64>,
}

/// Symmetric 0/1 adjacency with empty diagonal. Block membership is shuffled
/// over node indices, so any prefix is a uniform random subset.
pub fn sample_sbm(spec: &SbmSpec, seed: u64) -> Result<SbmSample> {
    let mut rng = seeded_rng(seed);
    sample_sbm_with(spec, &mut rng, None)
}

/// As [`sample_sbm`], drawing from `rng`. When `labeled` is given, the first
/// `labeled` nodes are forced to cover every block.
pub fn sample_sbm_with<R: Rng>(spec: &SbmSpec, rng: &mut R, labeled: Option<usize>) -> Result<SbmSample> {
    spec.validate()?;
    let n = spec.n();
    let mut truth = shuffled_classes(&spec.sizes, rng);
    if let Some(n_l) = labeled {
        super::stratify_prefix(&mut truth, n_l, spec.sizes.len())?;
    }
    let r: Vec<f64> = match &spec.degree_law {
        Some(law) => (0..n).map(|_| law.draw(rng)).collect(),
        None => vec![1.0; n],
    };
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let q = if truth[i] == truth[j] { spec.q_in } else { spec.q_out };
            if rng.random::<f64>() < r[i] * r[j] * q {
                triplets.push((i, j, 1.0));
                triplets.push((j, i, 1.0));
            }
        }
    }
    let graph = WeightedGraph::from_sparse(CsrMatrix::from_triplets(n, n, triplets))?;
    Ok(SbmSample {
        graph,
        truth,
        degree_factors: r,
    })
}
