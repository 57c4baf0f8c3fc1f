//! Seeded Monte Carlo experiments with oracle hyperparameter selection, theory
//! sweeps, and the built-in configurations reproducing the reference figures.

mod config;
mod runner;
mod theory;

pub use config::{
    config_from_section, parse_config, parse_form, parse_sections, parse_trials, parse_values, preset, range,
    DataSource, ExperimentConfig, Grids, MethodKind, Sweep, SweepVar, Trials, PRESETS,
};
pub use runner::{
    draw_trial, evaluate_methods, mean_ci, model_at, paired_win_rate, run_trials, ExperimentResult, GridAccuracies, ResultRow,
    TrialData, Z99,
};
pub use theory::{
    compare_optimal, isotropic_mean_norm_sq, optimal_row, theory_sweep, write_optimal_csv, write_theory_csv,
    OptimalRow, TheoryRow,
};
