//! `cssl`: Monte Carlo experiments, theory sweeps and graph export for
//! graph-based semi-supervised learning with centered similarities.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use centered_ssl::experiment::{
    compare_optimal, config_from_section, draw_trial, parse_sections, run_trials, theory_sweep, write_optimal_csv,
    write_theory_csv, ExperimentConfig, TrialData,
};
use centered_ssl::io::{write_assignment, write_edge_list, write_scores};
use centered_ssl::solvers::{
    balanced_label_scores, centered_regularization_alpha, centered_regularization_e, centered_uu_norm,
    eigenvector_ssl, iterated_laplacian, label_propagation_iterate, laplacian_regularization, LabeledScores,
    ScoreVector,
};
use centered_ssl::spectral::spectral_cluster_centered;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "cssl", version, about = "Graph-based semi-supervised learning with centered similarities")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads for the trial pool; all cores when omitted. Output does not depend on it.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo accuracy of each method with oracle hyperparameters, one row per sweep point and method.
    Simulate {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Asymptotic accuracy predictions over a sweep (Gaussian-mixture sources only).
    Theory {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo on sparse stochastic block models.
    Sbm {
        #[command(flatten)]
        sbm: SbmArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Bayes-optimal, centered and Laplacian accuracies on an isotropic mixture.
    Optimal {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw one dataset, write its graph as an edge list and optionally the scores of one solver.
    GraphExport {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        export: ExportArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Configuration file: [section] headers followed by key = value lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Built-in preset (fig1-left, fig1-right, fig2-left, fig2-right, fig8, table1-case1, table1-case2),
    /// or the section to read from --config.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Sweep as VAR=LO:HI:STEP or VAR=V1,V2,... with VAR one of cu, cl, nu, lf, theta; "none" disables it.
    #[arg(long, value_name = "SPEC")]
    sweep: Option<String>,

    /// Labeled ratio n_l/p of a mixture source.
    #[arg(long, value_name = "X")]
    c_l: Option<f64>,

    /// Unlabeled ratio n_u/p of a mixture source.
    #[arg(long, value_name = "X")]
    c_u: Option<f64>,

    /// Similarity kernel: gaussian or gaussian:BANDWIDTH (weights exp(-||x-y||^2 / (b p))).
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,

    /// Use a symmetric k-nearest-neighbor graph instead of kernel weights; "none" disables it.
    #[arg(long, value_name = "K")]
    knn: Option<String>,

    /// Evaluation form of the centered predictor.
    #[arg(long, value_enum)]
    form: Option<Form>,
}

#[derive(Args)]
struct SbmArgs {
    /// SBM preset to start from, or the section to read from --config.
    #[arg(long, value_name = "NAME", default_value = "table1-case1")]
    case: String,

    /// Configuration file: [section] headers followed by key = value lines.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Number of nodes (two balanced blocks).
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Within-block edge probability, as a number or K/n.
    #[arg(long, value_name = "Q")]
    q_in: Option<String>,

    /// Between-block edge probability, as a number or K/n.
    #[arg(long, value_name = "Q")]
    q_out: Option<String>,

    /// Degree-correction law R1:P1,R2:P2,... or "none".
    #[arg(long, value_name = "LAW")]
    degree_law: Option<String>,

    /// Labeled fraction n_l/n when no lf sweep is given.
    #[arg(long, value_name = "X")]
    labeled_fraction: Option<f64>,

    /// Sweep as lf=LO:HI:STEP or lf=V1,V2,...; "none" disables it.
    #[arg(long, value_name = "SPEC")]
    sweep: Option<String>,
}

#[derive(Args)]
struct RunArgs {
    /// Master seed; trial j of sweep point i uses stream (i, j).
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Trials per sweep point: a count, or auto for ceil(50000 / n_u).
    #[arg(long, value_name = "N|auto")]
    trials: Option<String>,

    /// Comma-separated methods: laplacian, centered, spectral, iterated, eigenvector.
    #[arg(long, value_name = "LIST")]
    methods: Option<String>,

    /// Grid of Laplacian exponents a, as LO:HI:STEP or a list.
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    a_grid: Option<String>,

    /// Grid of t with alpha = (1 + 10^t) ||W_uu||, as LO:HI:STEP or a list.
    #[arg(long, value_name = "GRID", allow_hyphen_values = true)]
    t_grid: Option<String>,

    /// Grid of iterated-Laplacian powers m.
    #[arg(long, value_name = "GRID")]
    m_grid: Option<String>,

    /// Grid of eigenvector counts s.
    #[arg(long, value_name = "GRID")]
    s_grid: Option<String>,

    /// Laplacian exponent used by the iterated Laplacian.
    #[arg(long, value_name = "A", allow_hyphen_values = true)]
    iterated_a: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output CSV; standard output when omitted.
    #[arg(long, short, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Master seed of the draw.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,

    /// Index of the sweep point to draw.
    #[arg(long, value_name = "I", default_value_t = 0)]
    point: usize,

    /// Trial index within the sweep point.
    #[arg(long, value_name = "J", default_value_t = 0)]
    trial: u32,

    /// Write scores of --solver on the unlabeled nodes to this CSV.
    #[arg(long, value_name = "FILE", requires = "solver")]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct SolverArgs {
    /// Solver whose scores go to --scores.
    #[arg(long, value_enum)]
    solver: Option<Solver>,

    /// Laplacian normalization exponent (laplacian, iterated).
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    a: f64,

    /// Centered regularization parameter; must exceed ||W_uu|| (centered, propagation).
    #[arg(long, value_name = "ALPHA", conflicts_with = "t")]
    alpha: Option<f64>,

    /// Sets alpha = (1 + 10^t) ||W_uu|| when --alpha is absent.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,

    /// Norm target: ||f_u||^2 = n_u e^2 (centered-e).
    #[arg(long, default_value_t = 1.0)]
    e: f64,

    /// Laplacian power (iterated).
    #[arg(long, default_value_t = 2)]
    m: u32,

    /// Number of eigenvectors (eigenvector).
    #[arg(long, default_value_t = 10)]
    s: usize,

    /// Stopping tolerance of label propagation.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,

    /// Iteration cap of label propagation.
    #[arg(long, value_name = "N", default_value_t = 100_000)]
    max_iter: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Lifted,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    /// Laplacian regularization with exponent --a.
    Laplacian,
    /// Centered regularization at --alpha (or --t).
    Centered,
    /// Centered regularization under the norm constraint --e.
    CenteredE,
    /// Label propagation on centered similarities at --alpha (or --t), to --tol.
    Propagation,
    /// Iterated Laplacian, power --m, exponent --a.
    Iterated,
    /// Least-squares fit on --s Laplacian eigenvectors.
    Eigenvector,
    /// Unsupervised two-way clustering by the top centered eigenvector (all nodes).
    Spectral,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<centered_ssl::Error> for Failure {
    fn from(e: centered_ssl::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Keys = BTreeMap<String, String>;

fn set(keys: &mut Keys, key: &str, value: Option<String>) {
    if let Some(v) = value {
        keys.insert(key.into(), v);
    }
}

/// Keys of the selected config section, or `preset = <name>` for a built-in.
fn base_keys(config: Option<&Path>, name: Option<&str>) -> Result<(String, Keys), Failure> {
    match (config, name) {
        (Some(path), name) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            let mut sections = parse_sections(&text).map_err(|e| Failure::Usage(e.to_string()))?;
            let name = match name {
                Some(n) => n.to_string(),
                None if sections.len() == 1 => sections.keys().next().expect("one section").clone(),
                None => {
                    return Err(Failure::Usage(format!(
                        "{} has {} sections; choose one with --preset",
                        path.display(),
                        sections.len()
                    )))
                }
            };
            let keys = sections
                .remove(&name)
                .ok_or_else(|| Failure::Usage(format!("no section [{name}] in {}", path.display())))?;
            Ok((name, keys))
        }
        (None, Some(name)) => Ok((name.to_string(), Keys::from([("preset".into(), name.to_string())]))),
        (None, None) => Err(Failure::Usage("give --preset or --config".into())),
    }
}

fn source_keys(s: &SourceArgs, default_preset: Option<&str>) -> Result<(String, Keys), Failure> {
    let name = s.preset.as_deref().or(if s.config.is_none() { default_preset } else { None });
    let (name, mut keys) = base_keys(s.config.as_deref(), name)?;
    set(&mut keys, "sweep", s.sweep.clone());
    set(&mut keys, "c_l", s.c_l.map(|v| v.to_string()));
    set(&mut keys, "c_u", s.c_u.map(|v| v.to_string()));
    set(&mut keys, "kernel", s.kernel.clone());
    set(&mut keys, "knn", s.knn.clone());
    set(
        &mut keys,
        "form",
        s.form.map(|f| match f {
            Form::Lifted => "lifted".into(),
            Form::Direct => "direct".into(),
        }),
    );
    Ok((name, keys))
}

fn run_keys(keys: &mut Keys, r: &RunArgs) {
    set(keys, "seed", r.seed.map(|v| v.to_string()));
    set(keys, "trials", r.trials.clone());
    set(keys, "methods", r.methods.clone());
    set(keys, "a_grid", r.a_grid.clone());
    set(keys, "t_grid", r.t_grid.clone());
    set(keys, "m_grid", r.m_grid.clone());
    set(keys, "s_grid", r.s_grid.clone());
    set(keys, "iterated_a", r.iterated_a.map(|v| v.to_string()));
}

fn build(name: &str, keys: &Keys) -> Result<ExperimentConfig, Failure> {
    config_from_section(name, keys).map_err(|e| Failure::Usage(e.to_string()))
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn alpha_of(d: &TrialData, s: &SolverArgs) -> Result<f64, Failure> {
    match s.alpha {
        Some(a) => Ok(a),
        None => {
            let bound = centered_uu_norm(&d.graph, d.n_labeled())?.value;
            Ok((1.0 + 10f64.powf(s.t)) * bound)
        }
    }
}

fn export_scores(d: &TrialData, s: &SolverArgs, solver: Solver, path: &Path) -> Result<(), Failure> {
    let mut out = sink(Some(path))?;
    if let Solver::Spectral = solver {
        write_assignment(&spectral_cluster_centered(&d.graph)?, &mut out)?;
        out.flush()?;
        return Ok(());
    }
    let f_l: LabeledScores<f64> = balanced_label_scores(&d.labels, d.class_count)?;
    let scores: ScoreVector<f64> = match solver {
        Solver::Laplacian => laplacian_regularization(&d.graph, &f_l, s.a)?,
        Solver::Centered => centered_regularization_alpha(&d.graph, &f_l, alpha_of(d, s)?)?.0,
        Solver::CenteredE => centered_regularization_e(&d.graph, &f_l, s.e)?.0,
        Solver::Propagation => label_propagation_iterate(&d.graph, &f_l, alpha_of(d, s)?, s.tol, s.max_iter)?.0,
        Solver::Iterated => iterated_laplacian(&d.graph, &f_l, s.m, s.a)?,
        Solver::Eigenvector => eigenvector_ssl(&d.graph, &d.labels, d.class_count, s.s)?,
        Solver::Spectral => unreachable!("handled above"),
    };
    log::info!(
        "{:?}: accuracy {:.4} on {} unlabeled nodes",
        scores.method,
        scores.accuracy(&d.truth_unlabeled),
        d.truth_unlabeled.len()
    );
    write_scores(&scores, d.n_labeled(), &mut out)?;
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Simulate { source, run, output } => {
            let (name, mut keys) = source_keys(&source, None)?;
            run_keys(&mut keys, &run);
            let result = run_trials(&build(&name, &keys)?)?;
            let mut out = sink(output.out.as_deref())?;
            result.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Theory { source, output } => {
            let (name, keys) = source_keys(&source, None)?;
            let cfg = build(&name, &keys)?;
            let rows = theory_sweep(&cfg)?;
            let var = cfg.sweep.as_ref().map_or("point", |s| s.var.name());
            let mut out = sink(output.out.as_deref())?;
            write_theory_csv(var, &rows, &mut out)?;
            out.flush()?;
        }
        Command::Sbm { sbm, run, output } => {
            let (name, mut keys) = base_keys(sbm.config.as_deref(), Some(&sbm.case))?;
            keys.entry("source".into()).or_insert_with(|| "sbm".into());
            set(&mut keys, "n", sbm.n.map(|v| v.to_string()));
            set(&mut keys, "q_in", sbm.q_in);
            set(&mut keys, "q_out", sbm.q_out);
            set(&mut keys, "degree_law", sbm.degree_law);
            set(&mut keys, "labeled_fraction", sbm.labeled_fraction.map(|v| v.to_string()));
            set(&mut keys, "sweep", sbm.sweep);
            run_keys(&mut keys, &run);
            let result = run_trials(&build(&name, &keys)?)?;
            let mut out = sink(output.out.as_deref())?;
            result.write_csv(&mut out)?;
            out.flush()?;
        }
        Command::Optimal { source, output } => {
            let (name, keys) = source_keys(&source, Some("fig8"))?;
            let rows = compare_optimal(&build(&name, &keys)?)?;
            let mut out = sink(output.out.as_deref())?;
            write_optimal_csv(&rows, &mut out)?;
            out.flush()?;
        }
        Command::GraphExport {
            source,
            export,
            solver,
            output,
        } => {
            let (name, mut keys) = source_keys(&source, None)?;
            set(&mut keys, "seed", export.seed.map(|v| v.to_string()));
            let cfg = build(&name, &keys)?;
            let data = draw_trial(&cfg, export.point, export.trial)?;
            let mut out = sink(output.out.as_deref())?;
            write_edge_list(&data.graph, &mut out)?;
            out.flush()?;
            if let (Some(path), Some(which)) = (export.scores.as_deref(), solver.solver) {
                export_scores(&data, &solver, which, path)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
