use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{seeded_rng, stratify_prefix};
use crate::asymptotics::MixtureModel;
use crate::graph::SplitDataset;
use crate::{Error, Result};

const EIGEN_FLOOR: f64 = 1e-12;

/// Draws from a [`MixtureModel`] with the covariance square roots cached.
#[derive(Debug, Clone)]
pub struct MixtureSampler {
    model: MixtureModel,
    roots: [DMatrix<f64>; 2],
}

fn sym_sqrt(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(c.clone());
    if eig.eigenvalues.iter().any(|&l| l < -1e-8 * eig.eigenvalues.amax()) {
        return Err(Error::InvalidArgument("covariance is not positive semidefinite".into()));
    }
    let roots = eig.eigenvalues.map(|l| l.max(EIGEN_FLOOR).sqrt());
    let u = &eig.eigenvectors;
    Ok(u * DMatrix::from_diagonal(&roots) * u.transpose())
}

impl MixtureSampler {
    pub fn new(model: &MixtureModel) -> Result<Self> {
        let roots = [sym_sqrt(&model.cov[0])?, sym_sqrt(&model.cov[1])?];
        Ok(Self {
            model: model.clone(),
            roots,
        })
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    /// `n_l + n_u` i.i.d. samples, labeled ones first. Classes are drawn with
    /// the priors; the labeled prefix is then made to contain both classes.
    pub fn sample<R: Rng>(&self, n_l: usize, n_u: usize, rng: &mut R) -> Result<SplitDataset<f64>> {
        let n = n_l + n_u;
        if n < 2 || n_l == 0 || n_u == 0 {
            return Err(Error::InvalidArgument(format!(
                "need n_l >= 1 and n_u >= 1 (got {n_l}, {n_u})"
            )));
        }
        let mut classes: Vec<usize> = (0..n)
            .map(|_| usize::from(rng.random::<f64>() >= self.model.rho[0]))
            .collect();
        stratify_prefix(&mut classes, n_l, 2)?;
        let p = self.model.p();
        let z = DMatrix::<f64>::from_fn(p, n, |_, _| rng.sample(StandardNormal));
        let mut x = DMatrix::zeros(n, p);
        for (i, &k) in classes.iter().enumerate() {
            let row = &self.model.mu[k] + &self.roots[k] * z.column(i);
            x.row_mut(i).copy_from(&row.transpose());
        }
        SplitDataset::new(x, classes[..n_l].to_vec(), 2, Some(classes))
    }
}

/// `n` samples with the labeled prefix of size `round(c_l·p)`.
pub fn sample_mixture(model: &MixtureModel, n: usize, seed: u64) -> Result<SplitDataset<f64>> {
    let n_l = (model.c_l * model.p() as f64).round() as usize;
    if n_l >= n {
        return Err(Error::InvalidArgument(format!("n = {n} leaves no unlabeled samples after n_l = {n_l}")));
    }
    MixtureSampler::new(model)?.sample(n_l, n - n_l, &mut seeded_rng(seed))
}
