mod common;

use std::io::Write;

use centered_ssl::asymptotics::{toeplitz, MixtureModel};
use centered_ssl::datagen::{
    load_features_csv, sample_mixture, sample_sbm, sample_sbm_with, stratify_prefix, stratify_prefix_by, trial_rng,
    DegreeLaw, MixtureSampler, SbmSpec,
};
use centered_ssl::Error;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn mixture_samples_have_the_model_moments() {
    let p = 5;
    let mu1 = DVector::from_vec(vec![1.0, 0.0, -0.5, 0.0, 0.0]);
    let mu2 = DVector::from_vec(vec![-1.0, 2.0, 0.0, 0.0, 0.0]);
    let cov = toeplitz(p, 0.4);
    let model = MixtureModel::new(0.3, [mu1.clone(), mu2.clone()], [cov.clone(), DMatrix::identity(p, p) * 2.0], 1.0, 1.0)
        .unwrap();
    let n = 40_000;
    let data = MixtureSampler::new(&model).unwrap().sample(10, n - 10, &mut common::rng(41)).unwrap();
    let truth = data.truth.as_ref().unwrap();
    let share = truth.iter().filter(|&&c| c == 0).count() as f64 / n as f64;
    assert!((share - 0.3).abs() < 0.01, "class share {share}");
    for (k, mu, c) in [(0, &mu1, cov.clone()), (1, &mu2, DMatrix::identity(p, p) * 2.0)] {
        let rows: Vec<usize> = (0..n).filter(|&i| truth[i] == k).collect();
        let m = rows.len() as f64;
        let mean = rows.iter().fold(DVector::zeros(p), |acc, &i| acc + data.features.row(i).transpose()) / m;
        assert!((&mean - mu).amax() < 0.05, "class {k} mean");
        let mut sample_cov = DMatrix::zeros(p, p);
        for &i in &rows {
            let d = data.features.row(i).transpose() - &mean;
            sample_cov += &d * d.transpose();
        }
        sample_cov /= m - 1.0;
        assert!((sample_cov - c).amax() < 0.1, "class {k} covariance");
    }
}

#[test]
fn mixture_draws_are_seeded() {
    let model = MixtureModel::antipodal(20, 4.0, DMatrix::identity(20, 20), 0.5, 2.0).unwrap();
    let a = sample_mixture(&model, 60, 7).unwrap();
    let b = sample_mixture(&model, 60, 7).unwrap();
    let c = sample_mixture(&model, 60, 8).unwrap();
    assert_eq!(a.features, b.features);
    assert_eq!(a.truth, b.truth);
    assert_ne!(a.features, c.features);
    assert_eq!(a.n_labeled(), 10);
    assert_eq!(a.labels, a.truth.as_ref().unwrap()[..10].to_vec());
    assert!(a.labels.contains(&0) && a.labels.contains(&1));
    assert!(sample_mixture(&model, 10, 7).is_err());
}

#[test]
fn trial_streams_are_independent_and_reproducible() {
    let draw = |g, t| -> Vec<u64> {
        let mut r = trial_rng(5, g, t);
        (0..4).map(|_| r.random()).collect()
    };
    assert_eq!(draw(1, 2), draw(1, 2));
    assert_ne!(draw(1, 2), draw(2, 1));
    assert_ne!(draw(0, 0), draw(0, 1));
    let mut other_seed = trial_rng(6, 1, 2);
    assert_ne!(draw(1, 2)[0], other_seed.random::<u64>());
}

fn edge_count(g: &centered_ssl::Graph) -> f64 {
    let w = g.to_dense();
    let mut m = 0.0;
    for i in 0..w.nrows() {
        assert_eq!(w[(i, i)], 0.0);
        for j in (i + 1)..w.ncols() {
            assert_eq!(w[(i, j)], w[(j, i)]);
            assert!(w[(i, j)] == 0.0 || w[(i, j)] == 1.0);
            m += w[(i, j)];
        }
    }
    m
}

#[test]
fn sbm_edge_counts_match_the_binomial_expectation() {
    let n = 600;
    let spec = SbmSpec::balanced(n, 14.0 / n as f64, 7.0 / n as f64, None).unwrap();
    let half = (n / 2) as f64;
    let pairs_in = 2.0 * half * (half - 1.0) / 2.0;
    let pairs_out = half * half;
    let mean = pairs_in * spec.q_in + pairs_out * spec.q_out;
    let var = pairs_in * spec.q_in * (1.0 - spec.q_in) + pairs_out * spec.q_out * (1.0 - spec.q_out);
    for seed in 0..5 {
        let s = sample_sbm(&spec, seed).unwrap();
        let m = edge_count(&s.graph);
        assert!((m - mean).abs() <= 4.0 * var.sqrt(), "seed {seed}: {m} edges vs {mean}");
        assert_eq!(s.truth.iter().filter(|&&c| c == 0).count(), n / 2);
        assert!(s.degree_factors.iter().all(|&r| r == 1.0));
    }
}

#[test]
fn degree_corrected_sbm_scales_edge_probabilities() {
    let n = 500;
    let law = DegreeLaw::new(vec![0.3, 0.5, 1.0], vec![0.25, 0.5, 0.25]).unwrap();
    let spec = SbmSpec::balanced(n, 35.0 / n as f64, 15.0 / n as f64, Some(law)).unwrap();
    for seed in 0..3 {
        let s = sample_sbm(&spec, seed).unwrap();
        let r = &s.degree_factors;
        assert!(r.iter().all(|v| [0.3, 0.5, 1.0].contains(v)));
        let (mut mean, mut var) = (0.0, 0.0);
        for i in 0..n {
            for j in (i + 1)..n {
                let q = r[i] * r[j] * if s.truth[i] == s.truth[j] { spec.q_in } else { spec.q_out };
                mean += q;
                var += q * (1.0 - q);
            }
        }
        let m = edge_count(&s.graph);
        assert!((m - mean).abs() <= 4.0 * f64::sqrt(var), "seed {seed}");
    }
}

#[test]
fn sbm_block_labels_are_shuffled_and_seeded() {
    let spec = SbmSpec::balanced(200, 0.1, 0.02, None).unwrap();
    let a = sample_sbm(&spec, 3).unwrap();
    let b = sample_sbm(&spec, 3).unwrap();
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.graph.to_dense(), b.graph.to_dense());
    assert_ne!(a.truth, (0..200).map(|i| usize::from(i >= 100)).collect::<Vec<_>>());
    let mut rng = common::rng(4);
    let forced = sample_sbm_with(&spec, &mut rng, Some(2)).unwrap();
    assert_ne!(forced.truth[0], forced.truth[1]);
}

#[test]
fn invalid_sbm_and_degree_laws_are_rejected() {
    assert!(SbmSpec::balanced(10, 0.1, 0.2, None).is_err());
    assert!(SbmSpec::new(vec![10], 0.5, 0.1, None).is_err());
    assert!(SbmSpec::new(vec![10, 0], 0.5, 0.1, None).is_err());
    assert!(DegreeLaw::new(vec![0.5], vec![0.9]).is_err());
    assert!(DegreeLaw::new(vec![1.5], vec![1.0]).is_err());
    assert!(DegreeLaw::new(vec![], vec![]).is_err());
}

#[test]
fn stratification_covers_every_class() {
    let mut classes = vec![0, 0, 0, 0, 1, 2, 1, 0];
    stratify_prefix(&mut classes, 3, 3).unwrap();
    let mut sorted = classes[..3].to_vec();
    sorted.sort();
    assert_eq!(sorted, vec![0, 1, 2]);
    let mut all = classes.clone();
    all.sort();
    assert_eq!(all, vec![0, 0, 0, 0, 0, 1, 1, 2]);

    let mut untouched = vec![1, 0, 0, 1];
    stratify_prefix(&mut untouched, 2, 2).unwrap();
    assert_eq!(untouched, vec![1, 0, 0, 1]);

    assert!(matches!(stratify_prefix(&mut vec![0, 0, 0], 2, 2), Err(Error::SingleClass)));
    assert!(stratify_prefix(&mut vec![0, 1, 0], 1, 2).is_err());

    let mut items = vec![("a", 1), ("b", 1), ("c", 0)];
    stratify_prefix_by(&mut items, 2, 2, |x| x.1).unwrap();
    assert!(items[..2].iter().any(|x| x.1 == 0));
}

fn write_temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn feature_files_load_with_label_column() {
    let f = write_temp("0.5,7,1.0\n1.5,3,2.0\n2.5,7,3.0\n3.5,3,4.0\n4.5,7,5.0\n");
    let d = load_features_csv(f.path(), 2, 1, None).unwrap();
    assert_eq!(d.p(), 2);
    assert_eq!(d.class_count, 2);
    // labels map to ranks: 3 -> 0, 7 -> 1
    assert_eq!(d.truth.as_ref().unwrap(), &vec![1, 0, 1, 0, 1]);
    assert_eq!(d.labels, vec![1, 0]);
    assert_eq!(d.features.row(2).iter().copied().collect::<Vec<_>>(), vec![2.5, 3.0]);

    let shuffled = load_features_csv(f.path(), 2, 1, Some(9)).unwrap();
    let again = load_features_csv(f.path(), 2, 1, Some(9)).unwrap();
    assert_eq!(shuffled.features, again.features);
    let mut labels = shuffled.labels.clone();
    labels.sort();
    assert_eq!(labels, vec![0, 1]);
    for i in 0..5 {
        let first = shuffled.features[(i, 0)];
        let label = shuffled.truth.as_ref().unwrap()[i];
        // the first feature pins the row, whose label alternates 7, 3, 7, …
        let row = (first - 0.5) as usize;
        assert_eq!(label, if row % 2 == 0 { 1 } else { 0 });
    }
}

#[test]
fn malformed_feature_files_are_rejected() {
    let fractional = write_temp("1.0,0.5\n2.0,1\n3.0,0\n");
    assert!(matches!(load_features_csv(fractional.path(), 1, 1, None), Err(Error::Csv { row: 1, .. })));
    let single = write_temp("1.0,2\n2.0,2\n3.0,2\n");
    assert!(matches!(load_features_csv(single.path(), 1, 1, None), Err(Error::SingleClass)));
    let text = write_temp("1.0,x\n2.0,1\n");
    assert!(load_features_csv(text.path(), 1, 1, None).is_err());
    let ragged = write_temp("1.0,0\n2.0,1,3.0\n");
    assert!(load_features_csv(ragged.path(), 1, 1, None).is_err());
    let ok = write_temp("1.0,0\n2.0,1\n");
    assert!(load_features_csv(ok.path(), 1, 5, None).is_err());
    assert!(load_features_csv(ok.path(), 2, 1, None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stratified_prefix_is_a_permutation(
        classes in proptest::collection::vec(0usize..3, 6..40),
        n_l in 3usize..6,
    ) {
        prop_assume!((0..3).all(|c| classes.contains(&c)));
        let mut out = classes.clone();
        stratify_prefix(&mut out, n_l, 3).unwrap();
        for c in 0..3 {
            prop_assert!(out[..n_l].contains(&c));
        }
        let (mut a, mut b) = (classes.clone(), out.clone());
        a.sort();
        b.sort();
        prop_assert_eq!(a, b);
    }
}
