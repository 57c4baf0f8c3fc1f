use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::asymptotics::{antipodal_means, toeplitz, MixtureModel, TheoryForm};
use crate::datagen::{DegreeLaw, SbmSpec};
use crate::graph::GaussianKernel;
use crate::{Error, Result};

pub const PRESETS: [&str; 7] = [
    "fig1-left",
    "fig1-right",
    "fig2-left",
    "fig2-right",
    "fig8",
    "table1-case1",
    "table1-case2",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    Laplacian,
    Centered,
    Spectral,
    IteratedLaplacian,
    Eigenvector,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Laplacian => "laplacian",
            MethodKind::Centered => "centered",
            MethodKind::Spectral => "spectral",
            MethodKind::IteratedLaplacian => "iterated",
            MethodKind::Eigenvector => "eigenvector",
        }
    }

    /// Name of the hyperparameter selected by the oracle.
    pub fn parameter(self) -> &'static str {
        match self {
            MethodKind::Laplacian => "a",
            MethodKind::Centered => "t",
            MethodKind::Spectral => "-",
            MethodKind::IteratedLaplacian => "m",
            MethodKind::Eigenvector => "s",
        }
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "laplacian" => MethodKind::Laplacian,
            "centered" => MethodKind::Centered,
            "spectral" => MethodKind::Spectral,
            "iterated" | "iterated-laplacian" => MethodKind::IteratedLaplacian,
            "eigenvector" => MethodKind::Eigenvector,
            other => return Err(Error::Config(format!("unknown method {other:?}"))),
        })
    }
}

/// Hyperparameter grids searched by the oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct Grids {
    /// Laplacian normalization exponents.
    pub a: Vec<f64>,
    /// `α = (1 + 10^t)‖Ŵ_uu‖`.
    pub t: Vec<f64>,
    /// Iterated-Laplacian powers.
    pub m: Vec<u32>,
    /// Number of eigenvectors for the eigenvector-based method.
    pub s: Vec<usize>,
    /// Normalization of the iterated Laplacian.
    pub iterated_a: f64,
}

impl Default for Grids {
    fn default() -> Self {
        Self {
            a: range(-2.0, 0.0, 0.02),
            t: range(-3.0, 3.0, 0.1),
            m: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 30, 50, 100, 200],
            s: vec![1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 15, 20, 25, 30, 40, 50],
            iterated_a: -0.5,
        }
    }
}

/// `lo, lo + step, …` up to `hi` inclusive, computed by index to avoid drift.
pub fn range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + i as f64 * step).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Unlabeled ratio `c_u = n_u/p`.
    Cu,
    /// Labeled ratio `c_l = n_l/p`.
    Cl,
    /// Unlabeled count `n_u`.
    Nu,
    /// Labeled fraction `n_l/n` of an SBM or file source.
    LabeledFraction,
    /// `θ(ξ_e)`; theory only.
    Theta,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Cu => "cu",
            SweepVar::Cl => "cl",
            SweepVar::Nu => "nu",
            SweepVar::LabeledFraction => "lf",
            SweepVar::Theta => "theta",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "cu" | "c_u" => SweepVar::Cu,
            "cl" | "c_l" => SweepVar::Cl,
            "nu" | "n_u" => SweepVar::Nu,
            "lf" | "labeled_fraction" => SweepVar::LabeledFraction,
            "theta" => SweepVar::Theta,
            other => return Err(Error::Config(format!("unknown sweep variable {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl FromStr for Sweep {
    type Err = Error;

    /// `var=lo:hi:step` or `var=v1,v2,…`.
    fn from_str(s: &str) -> Result<Self> {
        let (var, spec) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep {s:?} is not of the form var=values")))?;
        let var: SweepVar = var.parse()?;
        let values = parse_values(spec)?;
        if values.is_empty() {
            return Err(Error::Config("empty sweep".into()));
        }
        Ok(Self { var, values })
    }
}

/// `lo:hi:step` or a comma-separated list.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() == 3 {
        let [lo, hi, step] = [parts[0], parts[1], parts[2]].map(|p| p.trim().parse::<f64>());
        let (lo, hi, step) = (lo.map_err(bad(spec))?, hi.map_err(bad(spec))?, step.map_err(bad(spec))?);
        if !(step > 0.0) || hi < lo {
            return Err(Error::Config(format!("range {spec:?} needs lo <= hi and step > 0")));
        }
        return Ok(range(lo, hi, step));
    }
    spec.trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<f64>().map_err(bad(spec)))
        .collect()
}

fn bad<E>(spec: &str) -> impl Fn(E) -> Error + '_ {
    move |_| Error::Config(format!("cannot parse numbers in {spec:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trials {
    Fixed(usize),
    /// `⌈50000/n_u⌉` per grid point.
    Auto,
}

impl Trials {
    pub fn count(self, n_u: usize) -> usize {
        match self {
            Trials::Fixed(t) => t,
            Trials::Auto => 50_000usize.div_ceil(n_u.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Mixture(MixtureModel),
    Sbm { spec: SbmSpec, labeled_fraction: f64 },
    Csv { path: PathBuf, labels_column: usize, n_l: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub source: DataSource,
    pub kernel: GaussianKernel,
    /// Use a `k`-nearest-neighbor graph instead of kernel weights.
    pub knn: Option<usize>,
    pub methods: Vec<MethodKind>,
    pub grids: Grids,
    pub sweep: Option<Sweep>,
    pub trials: Trials,
    pub seed: u64,
    pub form: TheoryForm,
}

impl ExperimentConfig {
    fn base(name: &str, source: DataSource) -> Self {
        Self {
            name: name.into(),
            source,
            kernel: GaussianKernel::default(),
            knn: None,
            methods: vec![MethodKind::Laplacian, MethodKind::Centered, MethodKind::Spectral],
            grids: Grids::default(),
            sweep: None,
            trials: Trials::Auto,
            seed: 0,
            form: TheoryForm::Lifted,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grids;
        if self.methods.is_empty() {
            return Err(Error::Config("no methods".into()));
        }
        for (name, empty) in [("a", g.a.is_empty()), ("t", g.t.is_empty()), ("m", g.m.is_empty()), ("s", g.s.is_empty())] {
            if empty {
                return Err(Error::Config(format!("{name}-grid is empty")));
            }
        }
        if self.trials == Trials::Fixed(0) {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(Error::Config("sweep has no values".into()));
            }
        }
        Ok(())
    }

    pub fn mixture(&self) -> Option<&MixtureModel> {
        match &self.source {
            DataSource::Mixture(m) => Some(m),
            _ => None,
        }
    }
}

fn mixture_preset(name: &str, cov: DMatrix<f64>, gap_sq: f64, c_l: f64, c_u: f64, sweep: &str) -> ExperimentConfig {
    let model = MixtureModel::antipodal(cov.nrows(), gap_sq, cov, c_l, c_u).expect("valid preset model");
    let mut cfg = ExperimentConfig::base(name, DataSource::Mixture(model));
    cfg.grids.a = vec![-1.0];
    cfg.sweep = Some(sweep.parse().expect("valid preset sweep"));
    cfg
}

fn sbm_preset(name: &str, q_in: f64, q_out: f64, law: Option<DegreeLaw>) -> ExperimentConfig {
    let n = 1000;
    let spec = SbmSpec::balanced(n, q_in / n as f64, q_out / n as f64, law).expect("valid preset SBM");
    let mut cfg = ExperimentConfig::base(
        name,
        DataSource::Sbm {
            spec,
            labeled_fraction: 0.05,
        },
    );
    cfg.methods = vec![
        MethodKind::Laplacian,
        MethodKind::Centered,
        MethodKind::IteratedLaplacian,
        MethodKind::Eigenvector,
    ];
    cfg.sweep = Some("lf=0.05,0.1,0.2".parse().expect("valid preset sweep"));
    cfg.trials = Trials::Fixed(1000);
    cfg
}

/// Built-in configurations named after the figure or table they reproduce.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let p = 100;
    Ok(match name {
        "fig1-left" => mixture_preset(name, toeplitz(p, 0.1), 4.0, 1.0, 8.0, "theta=0:1:0.01"),
        "fig1-right" => mixture_preset(name, toeplitz(p, 0.1), 4.0, 4.0, 8.0, "theta=0:1:0.01"),
        "fig2-left" => mixture_preset(name, DMatrix::identity(p, p), 4.0, 2.0, 10.0, "cu=2:10:2"),
        "fig2-right" => mixture_preset(name, toeplitz(p, 0.1), 4.0, 2.0, 10.0, "cu=2:10:2"),
        "fig8" => mixture_preset(name, DMatrix::identity(p, p), 8.0, 0.5, 10.0, "cu=0:10:1"),
        "table1-case1" => sbm_preset(name, 14.0, 7.0, None),
        "table1-case2" => sbm_preset(
            name,
            35.0,
            15.0,
            Some(DegreeLaw::new(vec![0.3, 0.5, 1.0], vec![0.25, 0.5, 0.25])?),
        ),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; available: {}",
                PRESETS.join(", ")
            )))
        }
    })
}

/// Sections of an INI-like file: `[name]` headers followed by `key = value`
/// lines; `#` starts a comment.
pub fn parse_sections(text: &str) -> Result<BTreeMap<String, BTreeMap<String, String>>> {
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let section = current
            .as_ref()
            .ok_or_else(|| Error::Config(format!("line {}: key outside of a [section]", i + 1)))?;
        sections
            .get_mut(section)
            .expect("section exists")
            .insert(key.trim().to_lowercase(), value.trim().to_string());
    }
    Ok(sections)
}

fn number(key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: {value:?} is not a number")))
}

/// A probability given as a number or as `k/n`.
fn per_node(key: &str, value: &str, n: usize) -> Result<f64> {
    match value.trim().strip_suffix("/n") {
        Some(k) => Ok(number(key, k)? / n as f64),
        None => number(key, value),
    }
}

fn vector(key: &str, value: &str, p: usize) -> Result<DVector<f64>> {
    let vals = parse_values(value).map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))?;
    if vals.len() > p {
        return Err(Error::Config(format!("{key} has {} entries for p = {p}", vals.len())));
    }
    let mut v = DVector::zeros(p);
    v.rows_mut(0, vals.len()).copy_from_slice(&vals);
    Ok(v)
}

fn covariance(key: &str, value: &str, p: usize) -> Result<DMatrix<f64>> {
    let value = value.trim();
    if value == "identity" {
        return Ok(DMatrix::identity(p, p));
    }
    if let Some(r) = value.strip_prefix("toeplitz:") {
        return Ok(toeplitz(p, number(key, r)?));
    }
    Err(Error::Config(format!("{key}: expected identity or toeplitz:<r>, got {value:?}")))
}

fn kernel(value: &str) -> Result<GaussianKernel> {
    let value = value.trim();
    if value == "gaussian" {
        return Ok(GaussianKernel::default());
    }
    if let Some(b) = value.strip_prefix("gaussian:") {
        let bandwidth = number("kernel", b)?;
        if !(bandwidth > 0.0) {
            return Err(Error::Config("kernel bandwidth must be positive".into()));
        }
        return Ok(GaussianKernel { bandwidth });
    }
    Err(Error::Config(format!("unsupported kernel {value:?}; expected gaussian[:b]")))
}

fn mixture_from(keys: &BTreeMap<String, String>, base: Option<&MixtureModel>) -> Result<MixtureModel> {
    let get = |k: &str| keys.get(k).map(String::as_str);
    let p = match get("p") {
        Some(v) => number("p", v)? as usize,
        None => base.map(|m| m.p()).ok_or_else(|| Error::Config("mixture source needs p".into()))?,
    };
    let rho1 = match get("rho1") {
        Some(v) => number("rho1", v)?,
        None => base.map_or(0.5, |m| m.rho[0]),
    };
    let c_l = match get("c_l") {
        Some(v) => number("c_l", v)?,
        None => base.map_or(1.0, |m| m.c_l),
    };
    let c_u = match get("c_u") {
        Some(v) => number("c_u", v)?,
        None => base.map_or(1.0, |m| m.c_u),
    };
    let same_p = base.is_some_and(|m| m.p() == p);
    let mu = if let Some(v) = get("mu") {
        let gap = v
            .trim()
            .strip_prefix("antipodal:")
            .ok_or_else(|| Error::Config(format!("mu: expected antipodal:<gap^2>, got {v:?}")))?;
        let (a, b) = antipodal_means(p, number("mu", gap)?)?;
        [a, b]
    } else if get("mu1").is_some() || get("mu2").is_some() {
        let m1 = get("mu1").ok_or_else(|| Error::Config("mu1 missing".into()))?;
        let m2 = get("mu2").ok_or_else(|| Error::Config("mu2 missing".into()))?;
        [vector("mu1", m1, p)?, vector("mu2", m2, p)?]
    } else if same_p {
        base.expect("checked").mu.clone()
    } else {
        return Err(Error::Config("mixture source needs mu or mu1/mu2".into()));
    };
    let cov = if let Some(c) = get("c") {
        let c = covariance("C", c, p)?;
        [c.clone(), c]
    } else if get("c1").is_some() || get("c2").is_some() {
        let c1 = get("c1").ok_or_else(|| Error::Config("C1 missing".into()))?;
        let c2 = get("c2").ok_or_else(|| Error::Config("C2 missing".into()))?;
        [covariance("C1", c1, p)?, covariance("C2", c2, p)?]
    } else if same_p {
        base.expect("checked").cov.clone()
    } else {
        [DMatrix::identity(p, p), DMatrix::identity(p, p)]
    };
    MixtureModel::new(rho1, mu, cov, c_l, c_u)
}

const KNOWN_KEYS: [&str; 33] = [
    "preset", "source", "p", "rho1", "mu", "mu1", "mu2", "c", "c1", "c2", "c_l", "c_u", "kernel", "knn", "n",
    "q_in", "q_out", "degree_law", "labeled_fraction", "path", "labels_column", "n_l", "methods", "a_grid",
    "t_grid", "m_grid", "s_grid", "iterated_a", "sweep", "trials", "seed", "form", "name",
];

/// Builds a configuration from one section. A `preset = <name>` key starts from
/// that built-in preset; every other key overrides it.
pub fn config_from_section(name: &str, keys: &BTreeMap<String, String>) -> Result<ExperimentConfig> {
    if let Some(unknown) = keys.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("[{name}]: unknown key {unknown:?}")));
    }
    let get = |k: &str| keys.get(k).map(String::as_str);
    let base = match get("preset") {
        Some(p) => Some(preset(p.trim())?),
        None => None,
    };
    let source_kind = get("source").map(|s| s.trim().to_string()).or_else(|| {
        base.as_ref().map(|b| match b.source {
            DataSource::Mixture(_) => "mixture".to_string(),
            DataSource::Sbm { .. } => "sbm".to_string(),
            DataSource::Csv { .. } => "csv".to_string(),
        })
    });
    let base_source = base.as_ref().map(|b| &b.source);
    let source = match source_kind.as_deref().unwrap_or("mixture") {
        "mixture" => {
            let prior = match base_source {
                Some(DataSource::Mixture(m)) => Some(m),
                _ => None,
            };
            DataSource::Mixture(mixture_from(keys, prior)?)
        }
        "sbm" => {
            let (prior, prior_lf) = match base_source {
                Some(DataSource::Sbm { spec, labeled_fraction }) => (Some(spec), *labeled_fraction),
                _ => (None, 0.05),
            };
            let n = match get("n") {
                Some(v) => number("n", v)? as usize,
                None => prior.map(|s| s.n()).ok_or_else(|| Error::Config("sbm source needs n".into()))?,
            };
            let q_in = match get("q_in") {
                Some(v) => per_node("q_in", v, n)?,
                None => prior.map(|s| s.q_in).ok_or_else(|| Error::Config("sbm source needs q_in".into()))?,
            };
            let q_out = match get("q_out") {
                Some(v) => per_node("q_out", v, n)?,
                None => prior.map(|s| s.q_out).ok_or_else(|| Error::Config("sbm source needs q_out".into()))?,
            };
            let law = match get("degree_law") {
                Some("none") | Some("") => None,
                Some(v) => {
                    let mut values = Vec::new();
                    let mut probs = Vec::new();
                    for pair in v.split(',') {
                        let (r, pr) = pair
                            .split_once(':')
                            .ok_or_else(|| Error::Config(format!("degree_law entry {pair:?} is not r:prob")))?;
                        values.push(number("degree_law", r)?);
                        probs.push(number("degree_law", pr)?);
                    }
                    Some(DegreeLaw::new(values, probs)?)
                }
                None => prior.and_then(|s| s.degree_law.clone()),
            };
            let labeled_fraction = match get("labeled_fraction") {
                Some(v) => number("labeled_fraction", v)?,
                None => prior_lf,
            };
            DataSource::Sbm {
                spec: SbmSpec::balanced(n, q_in, q_out, law)?,
                labeled_fraction,
            }
        }
        "csv" => {
            let path = get("path").ok_or_else(|| Error::Config("csv source needs path".into()))?;
            let labels_column = number("labels_column", get("labels_column").unwrap_or("0"))? as usize;
            let n_l = number("n_l", get("n_l").ok_or_else(|| Error::Config("csv source needs n_l".into()))?)? as usize;
            DataSource::Csv {
                path: PathBuf::from(path.trim()),
                labels_column,
                n_l,
            }
        }
        other => return Err(Error::Config(format!("unknown source {other:?}"))),
    };
    let mut cfg = match base {
        Some(mut b) => {
            b.source = source;
            b
        }
        None => ExperimentConfig::base(name, source),
    };
    cfg.name = get("name").unwrap_or(name).trim().to_string();
    if let Some(v) = get("kernel") {
        cfg.kernel = kernel(v)?;
    }
    if let Some(v) = get("knn") {
        cfg.knn = match v.trim() {
            "none" => None,
            k => Some(number("knn", k)? as usize),
        };
    }
    if let Some(v) = get("methods") {
        cfg.methods = v.split(',').map(str::parse).collect::<Result<_>>()?;
    }
    if let Some(v) = get("a_grid") {
        cfg.grids.a = parse_values(v)?;
    }
    if let Some(v) = get("t_grid") {
        cfg.grids.t = parse_values(v)?;
    }
    if let Some(v) = get("m_grid") {
        cfg.grids.m = parse_values(v)?.into_iter().map(|x| x as u32).collect();
    }
    if let Some(v) = get("s_grid") {
        cfg.grids.s = parse_values(v)?.into_iter().map(|x| x as usize).collect();
    }
    if let Some(v) = get("iterated_a") {
        cfg.grids.iterated_a = number("iterated_a", v)?;
    }
    if let Some(v) = get("sweep") {
        cfg.sweep = match v.trim() {
            "none" => None,
            s => Some(s.parse()?),
        };
    }
    if let Some(v) = get("trials") {
        cfg.trials = parse_trials(v)?;
    }
    if let Some(v) = get("seed") {
        cfg.seed = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("seed: {v:?} is not an unsigned integer")))?;
    }
    if let Some(v) = get("form") {
        cfg.form = parse_form(v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_trials(v: &str) -> Result<Trials> {
    match v.trim() {
        "auto" => Ok(Trials::Auto),
        t => t
            .parse()
            .map(Trials::Fixed)
            .map_err(|_| Error::Config(format!("trials: {v:?} is neither a count nor auto"))),
    }
}

pub fn parse_form(v: &str) -> Result<TheoryForm> {
    match v.trim() {
        "lifted" => Ok(TheoryForm::Lifted),
        "direct" => Ok(TheoryForm::Direct),
        other => Err(Error::Config(format!("form: expected lifted or direct, got {other:?}"))),
    }
}

/// Parses a whole file into named configurations.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, ExperimentConfig>> {
    parse_sections(text)?
        .iter()
        .map(|(name, keys)| Ok((name.clone(), config_from_section(name, keys)?)))
        .collect()
}
