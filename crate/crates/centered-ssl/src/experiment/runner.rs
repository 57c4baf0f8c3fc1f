use std::io::Write;

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{DataSource, ExperimentConfig, MethodKind, SweepVar};
use crate::asymptotics::{laplacian_theory, CenteredTheory, MixtureModel};
use crate::datagen::{sample_sbm_with, stratify_prefix_by, trial_rng, MixtureSampler};
use crate::graph::{build_weight_matrix, knn_graph, SplitDataset, WeightedGraph};
use crate::io::{format_float, read_feature_rows};
use crate::solvers::{
    accuracy, alpha_grid, balanced_label_scores, centered_alpha_sweep, centered_uu_norm, classify,
    LabeledScores, LaplacianSpectrum, LaplacianSystem,
};
use crate::spectral::spectral_cluster_centered;
use crate::{Error, Result};

/// `z` of the two-sided 99% normal interval.
pub const Z99: f64 = 2.576;

/// One labeled graph ready for the solvers; labeled nodes come first.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub graph: WeightedGraph<f64>,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub truth_unlabeled: Vec<usize>,
}

impl TrialData {
    pub fn from_dataset(data: &SplitDataset<f64>, knn: Option<usize>, kernel: &dyn crate::graph::Kernel) -> Result<Self> {
        let truth = data
            .unlabeled_truth()
            .ok_or_else(|| Error::InvalidArgument("dataset has no ground truth".into()))?
            .to_vec();
        let graph = match knn {
            Some(k) => knn_graph(&data.features, k)?,
            None => build_weight_matrix(&data.features, kernel)?,
        };
        Ok(Self {
            graph,
            labels: data.labels.clone(),
            class_count: data.class_count,
            truth_unlabeled: truth,
        })
    }

    pub fn n_labeled(&self) -> usize {
        self.labels.len()
    }
}

/// Per-method accuracies over the method's hyperparameter grid; `None` marks
/// a failed solve.
pub type GridAccuracies = Vec<Option<f64>>;

fn scores_accuracy(f_u: &nalgebra::DMatrix<f64>, truth: &[usize]) -> Option<f64> {
    if f_u.iter().all(|v| v.is_finite()) {
        Some(accuracy(&classify(f_u), truth))
    } else {
        None
    }
}

fn laplacian_grid(d: &TrialData, f_l: &LabeledScores<f64>, grid: &[f64]) -> Result<GridAccuracies> {
    let sys = LaplacianSystem::new(&d.graph, d.n_labeled())?;
    Ok(grid
        .iter()
        .map(|&a| sys.solve(f_l, a).ok().and_then(|s| scores_accuracy(&s.f_u, &d.truth_unlabeled)))
        .collect())
}

fn centered_grid(d: &TrialData, f_l: &LabeledScores<f64>, ts: &[f64]) -> Result<GridAccuracies> {
    let bound = centered_uu_norm(&d.graph, d.n_labeled())?.value;
    let alphas = alpha_grid(bound, ts);
    let sols = centered_alpha_sweep(&d.graph, f_l, &alphas)?;
    Ok(sols.iter().map(|f| scores_accuracy(f, &d.truth_unlabeled)).collect())
}

/// Two-way spectral clustering of the whole graph by the top eigenvector of
/// `Ŵ`; the sign is chosen to agree with the majority of the labeled nodes.
fn spectral_accuracy(d: &TrialData) -> Result<f64> {
    if d.class_count != 2 {
        return Err(Error::InvalidArgument("spectral clustering is two-way".into()));
    }
    let a = spectral_cluster_centered(&d.graph)?;
    let n_l = d.n_labeled();
    let agree = accuracy(&a.labels[..n_l], &d.labels);
    let mut acc = accuracy(&a.labels[n_l..], &d.truth_unlabeled);
    if agree < 0.5 || (agree == 0.5 && acc < 0.5) {
        acc = 1.0 - acc;
    }
    Ok(acc)
}

fn spectrum_grids(
    d: &TrialData,
    f_l: &LabeledScores<f64>,
    cfg: &ExperimentConfig,
    want_iterated: bool,
    want_eigen: bool,
) -> Result<(GridAccuracies, GridAccuracies)> {
    let spec = LaplacianSpectrum::new(&d.graph)?;
    let g = &cfg.grids;
    let iterated = if want_iterated {
        g.m.iter()
            .map(|&m| {
                spec.iterated(f_l, m, g.iterated_a)
                    .ok()
                    .and_then(|s| scores_accuracy(&s.f_u, &d.truth_unlabeled))
            })
            .collect()
    } else {
        Vec::new()
    };
    let eigen = if want_eigen {
        g.s.iter()
            .map(|&s| {
                spec.eigenvector_fit(&d.labels, d.class_count, s)
                    .ok()
                    .and_then(|sv| scores_accuracy(&sv.f_u, &d.truth_unlabeled))
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok((iterated, eigen))
}

/// Runs every configured method on one trial. A method whose setup fails
/// reports `None` for its whole grid.
pub fn evaluate_methods(d: &TrialData, cfg: &ExperimentConfig) -> Vec<GridAccuracies> {
    let failed = |len: usize| vec![None; len];
    let f_l = match balanced_label_scores::<f64>(&d.labels, d.class_count) {
        Ok(f) => f,
        Err(_) => return cfg.methods.iter().map(|m| failed(grid_len(cfg, *m))).collect(),
    };
    let needs_spectrum = cfg
        .methods
        .iter()
        .any(|m| matches!(m, MethodKind::IteratedLaplacian | MethodKind::Eigenvector));
    let spectrum = if needs_spectrum {
        spectrum_grids(
            d,
            &f_l,
            cfg,
            cfg.methods.contains(&MethodKind::IteratedLaplacian),
            cfg.methods.contains(&MethodKind::Eigenvector),
        )
        .ok()
    } else {
        None
    };
    cfg.methods
        .iter()
        .map(|&m| {
            let len = grid_len(cfg, m);
            let res = match m {
                MethodKind::Laplacian => laplacian_grid(d, &f_l, &cfg.grids.a),
                MethodKind::Centered => centered_grid(d, &f_l, &cfg.grids.t),
                MethodKind::Spectral => spectral_accuracy(d).map(|a| vec![Some(a)]),
                MethodKind::IteratedLaplacian => spectrum
                    .as_ref()
                    .map(|s| s.0.clone())
                    .ok_or_else(|| Error::Singular("spectrum".into())),
                MethodKind::Eigenvector => spectrum
                    .as_ref()
                    .map(|s| s.1.clone())
                    .ok_or_else(|| Error::Singular("spectrum".into())),
            };
            match res {
                Ok(v) => v,
                Err(e) => {
                    log::debug!("{m} failed: {e}");
                    failed(len)
                }
            }
        })
        .collect()
}

fn grid_len(cfg: &ExperimentConfig, m: MethodKind) -> usize {
    match m {
        MethodKind::Laplacian => cfg.grids.a.len(),
        MethodKind::Centered => cfg.grids.t.len(),
        MethodKind::Spectral => 1,
        MethodKind::IteratedLaplacian => cfg.grids.m.len(),
        MethodKind::Eigenvector => cfg.grids.s.len(),
    }
}

fn grid_value(cfg: &ExperimentConfig, m: MethodKind, i: usize) -> f64 {
    match m {
        MethodKind::Laplacian => cfg.grids.a[i],
        MethodKind::Centered => cfg.grids.t[i],
        MethodKind::Spectral => f64::NAN,
        MethodKind::IteratedLaplacian => cfg.grids.m[i] as f64,
        MethodKind::Eigenvector => cfg.grids.s[i] as f64,
    }
}

/// Summary of one method at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_value: f64,
    pub method: MethodKind,
    /// Mean accuracy at the oracle hyperparameter; `None` when every trial failed.
    pub accuracy: Option<f64>,
    /// Half-width of the 99% normal interval of the mean.
    pub ci99: f64,
    pub best_index: Option<usize>,
    pub best_value: f64,
    pub trials: usize,
    pub failures: usize,
    pub theory: Option<f64>,
    /// Accuracy of each trial at the oracle hyperparameter.
    pub per_trial: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub variable: &'static str,
    pub rows: Vec<ResultRow>,
}

impl ExperimentResult {
    pub fn row(&self, sweep_value: f64, method: MethodKind) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && (r.sweep_value == sweep_value || (r.sweep_value.is_nan() && sweep_value.is_nan())))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "{},method,accuracy,ci99,parameter,best,trials,failures,theory",
            self.variable
        )?;
        for r in &self.rows {
            let opt = |x: Option<f64>| x.map(format_float).unwrap_or_default();
            let best = if r.best_value.is_nan() { String::new() } else { format_float(r.best_value) };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                format_float(r.sweep_value),
                r.method,
                opt(r.accuracy),
                format_float(r.ci99),
                r.method.parameter(),
                best,
                r.trials,
                r.failures,
                opt(r.theory),
            )?;
        }
        Ok(())
    }
}

/// Mean and 99% half-width of the available values.
pub fn mean_ci(values: impl IntoIterator<Item = f64>) -> Option<(f64, f64, usize)> {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return None;
    }
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let half = if v.len() > 1 {
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        Z99 * (var / k).sqrt()
    } else {
        0.0
    };
    Some((mean, half, v.len()))
}

/// Picks the grid value with the highest mean accuracy (first one on ties).
fn oracle(sweep_value: f64, method: MethodKind, cfg: &ExperimentConfig, per_trial: &[GridAccuracies]) -> ResultRow {
    let len = grid_len(cfg, method);
    let mut best: Option<(usize, f64)> = None;
    for i in 0..len {
        if let Some((mean, _, _)) = mean_ci(per_trial.iter().filter_map(|t| t[i])) {
            if best.is_none_or(|(_, b)| mean > b) {
                best = Some((i, mean));
            }
        }
    }
    let trials = per_trial.len();
    match best {
        Some((i, _)) => {
            let column: Vec<Option<f64>> = per_trial.iter().map(|t| t[i]).collect();
            let (mean, ci, ok) = mean_ci(column.iter().flatten().copied()).expect("non-empty");
            ResultRow {
                sweep_value,
                method,
                accuracy: Some(mean),
                ci99: ci,
                best_index: Some(i),
                best_value: grid_value(cfg, method, i),
                trials,
                failures: trials - ok,
                theory: None,
                per_trial: column,
            }
        }
        None => ResultRow {
            sweep_value,
            method,
            accuracy: None,
            ci99: 0.0,
            best_index: None,
            best_value: f64::NAN,
            trials,
            failures: trials,
            theory: None,
            per_trial: vec![None; trials],
        },
    }
}

/// Data source resolved at one sweep point.
enum PointSource {
    Mixture { sampler: MixtureSampler, n_l: usize, n_u: usize },
    Sbm { spec: crate::datagen::SbmSpec, n_l: usize, fraction: f64 },
    Rows { rows: Vec<(Vec<f64>, usize)>, class_count: usize, n_l: usize },
}

impl PointSource {
    fn n_unlabeled(&self) -> usize {
        match self {
            PointSource::Mixture { n_u, .. } => *n_u,
            PointSource::Sbm { spec, n_l, .. } => spec.n() - n_l,
            PointSource::Rows { rows, n_l, .. } => rows.len() - n_l,
        }
    }

    fn draw(&self, cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<TrialData> {
        match self {
            PointSource::Mixture { sampler, n_l, n_u } => {
                let data = sampler.sample(*n_l, *n_u, rng)?;
                TrialData::from_dataset(&data, cfg.knn, &cfg.kernel)
            }
            PointSource::Sbm { spec, fraction, .. } => {
                // Only the largest connected component is kept: isolated
                // vertices and small islands make L_uu singular.
                let s = sample_sbm_with(spec, rng, None)?;
                let k = spec.sizes.len();
                let mut nodes = s.graph.largest_component();
                let n_l = (fraction * nodes.len() as f64).round() as usize;
                if n_l == 0 || n_l >= nodes.len() {
                    return Err(Error::InvalidArgument(format!(
                        "largest component has {} nodes for labeled fraction {fraction}",
                        nodes.len()
                    )));
                }
                stratify_prefix_by(&mut nodes, n_l, k, |&v| s.truth[v])?;
                let truth: Vec<usize> = nodes.iter().map(|&v| s.truth[v]).collect();
                Ok(TrialData {
                    graph: s.graph.induced_subgraph(&nodes)?,
                    labels: truth[..n_l].to_vec(),
                    class_count: k,
                    truth_unlabeled: truth[n_l..].to_vec(),
                })
            }
            PointSource::Rows { rows, class_count, n_l } => {
                let mut order: Vec<usize> = (0..rows.len()).collect();
                order.shuffle(rng);
                stratify_prefix_by(&mut order, *n_l, *class_count, |&i| rows[i].1)?;
                let p = rows[0].0.len();
                let x = nalgebra::DMatrix::from_fn(rows.len(), p, |i, j| rows[order[i]].0[j]);
                let truth: Vec<usize> = order.iter().map(|&i| rows[i].1).collect();
                let data = SplitDataset::new(x, truth[..*n_l].to_vec(), *class_count, Some(truth))?;
                TrialData::from_dataset(&data, cfg.knn, &cfg.kernel)
            }
        }
    }
}

/// Model at a sweep point of a mixture source.
pub fn model_at(model: &MixtureModel, var: Option<SweepVar>, value: f64) -> Result<MixtureModel> {
    let p = model.p() as f64;
    match var {
        None | Some(SweepVar::Theta) => Ok(model.clone()),
        Some(SweepVar::Cu) => model.with_ratios(model.c_l, value),
        Some(SweepVar::Cl) => model.with_ratios(value, model.c_u),
        Some(SweepVar::Nu) => model.with_ratios(model.c_l, value / p),
        Some(SweepVar::LabeledFraction) => {
            let total = model.c0();
            model.with_ratios(value * total, (1.0 - value) * total)
        }
    }
}

fn labeled_rows(path: &std::path::Path, labels_column: usize) -> Result<(Vec<(Vec<f64>, usize)>, usize)> {
    let rows = read_feature_rows(path)?;
    if labels_column >= rows[0].len() || rows[0].len() < 2 {
        return Err(Error::Config(format!("labels_column {labels_column} out of range")));
    }
    let mut distinct: Vec<i64> = rows.iter().map(|r| r[labels_column] as i64).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let out = rows
        .iter()
        .map(|r| {
            let class = distinct.binary_search(&(r[labels_column] as i64)).expect("present");
            let mut f = r.clone();
            f.remove(labels_column);
            (f, class)
        })
        .collect();
    Ok((out, distinct.len()))
}

fn resolve(cfg: &ExperimentConfig, var: Option<SweepVar>, value: f64) -> Result<PointSource> {
    if var == Some(SweepVar::Theta) {
        return Err(Error::Config("a theta sweep applies to theory only".into()));
    }
    Ok(match &cfg.source {
        DataSource::Mixture(model) => {
            let m = model_at(model, var, value)?;
            let p = m.p() as f64;
            let n_l = (m.c_l * p).round() as usize;
            let n_u = (m.c_u * p).round() as usize;
            PointSource::Mixture {
                sampler: MixtureSampler::new(&m)?,
                n_l,
                n_u,
            }
        }
        DataSource::Sbm { spec, labeled_fraction } => {
            let lf = match var {
                Some(SweepVar::LabeledFraction) => value,
                None => *labeled_fraction,
                Some(other) => return Err(Error::Config(format!("sweep {} does not apply to an SBM", other.name()))),
            };
            let n_l = (lf * spec.n() as f64).round() as usize;
            if n_l == 0 || n_l >= spec.n() {
                return Err(Error::Config(format!("labeled fraction {lf} gives n_l = {n_l}")));
            }
            PointSource::Sbm {
                spec: spec.clone(),
                n_l,
                fraction: lf,
            }
        }
        DataSource::Csv { path, labels_column, n_l } => {
            let (rows, class_count) = labeled_rows(path, *labels_column)?;
            let n_l = match var {
                Some(SweepVar::LabeledFraction) => (value * rows.len() as f64).round() as usize,
                None => *n_l,
                Some(other) => return Err(Error::Config(format!("sweep {} does not apply to a file", other.name()))),
            };
            if n_l == 0 || n_l >= rows.len() {
                return Err(Error::Config(format!("n_l = {n_l} with {} rows", rows.len())));
            }
            PointSource::Rows { rows, class_count, n_l }
        }
    })
}

/// Theory accuracy attached to an empirical row, when a predictor applies.
fn theory_for(cfg: &ExperimentConfig, method: MethodKind, var: Option<SweepVar>, value: f64) -> Option<f64> {
    if cfg.knn.is_some() {
        return None;
    }
    let model = model_at(cfg.mixture()?, var, value).ok()?;
    match method {
        MethodKind::Laplacian if cfg.grids.a == [-1.0] => laplacian_theory(&model, &cfg.kernel).ok().map(|p| p.accuracy),
        MethodKind::Centered => CenteredTheory::from_model(&model, &cfg.kernel, cfg.form)
            .ok()?
            .optimize()
            .ok()
            .map(|p| p.accuracy),
        MethodKind::Spectral => CenteredTheory::from_model(&model, &cfg.kernel, cfg.form)
            .ok()
            .map(|t| t.spectral_limit(model.c0()).accuracy),
        _ => None,
    }
}

/// Monte Carlo over the sweep: for every point, draw `trials` independent
/// datasets, run each method over its grid and keep the oracle grid value.
///
/// Trial `j` of point `i` draws from [`trial_rng`]`(seed, i, j)`, and results
/// are reduced in trial order, so output does not depend on thread count.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let (var, values) = match &cfg.sweep {
        Some(s) => (Some(s.var), s.values.clone()),
        None => (None, vec![f64::NAN]),
    };
    let mut rows = Vec::new();
    for (gi, &value) in values.iter().enumerate() {
        let source = resolve(cfg, var, value)?;
        let trials = cfg.trials.count(source.n_unlabeled());
        log::info!(
            "{} {}={value}: {trials} trials",
            cfg.name,
            var.map_or("point", |v| v.name())
        );
        let per_trial: Vec<Vec<GridAccuracies>> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, gi as u32, t as u32);
                match source.draw(cfg, &mut rng) {
                    Ok(d) => evaluate_methods(&d, cfg),
                    Err(e) => {
                        log::debug!("trial {t} data generation failed: {e}");
                        cfg.methods.iter().map(|m| vec![None; grid_len(cfg, *m)]).collect()
                    }
                }
            })
            .collect();
        for (k, &method) in cfg.methods.iter().enumerate() {
            let grids: Vec<GridAccuracies> = per_trial.iter().map(|t| t[k].clone()).collect();
            let mut row = oracle(value, method, cfg, &grids);
            row.theory = theory_for(cfg, method, var, value);
            rows.push(row);
        }
    }
    Ok(ExperimentResult {
        variable: var.map_or("point", |v| v.name()),
        rows,
    })
}

/// The dataset trial `trial` of sweep point `point` draws in [`run_trials`].
pub fn draw_trial(cfg: &ExperimentConfig, point: usize, trial: u32) -> Result<TrialData> {
    cfg.validate()?;
    let (var, value) = match &cfg.sweep {
        Some(s) => (
            Some(s.var),
            *s.values
                .get(point)
                .ok_or_else(|| Error::Config(format!("sweep has {} points, asked for {point}", s.values.len())))?,
        ),
        None => (None, f64::NAN),
    };
    let source = resolve(cfg, var, value)?;
    source.draw(cfg, &mut trial_rng(cfg.seed, point as u32, trial))
}

/// Fraction of trials, among those where both succeeded, in which `a` is
/// strictly more accurate than `b`; also returns the number of such trials.
pub fn paired_win_rate(a: &ResultRow, b: &ResultRow) -> (f64, usize) {
    let pairs: Vec<(f64, f64)> = a
        .per_trial
        .iter()
        .zip(&b.per_trial)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.is_empty() {
        return (f64::NAN, 0);
    }
    let wins = pairs.iter().filter(|(x, y)| x > y).count();
    (wins as f64 / pairs.len() as f64, pairs.len())
}
