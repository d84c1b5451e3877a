//! Causal graphs and their admissibility, discrete structural causal
//! models with exact interventional ground truth, and simulation studies.

pub mod experiment;
mod graph;
mod scm;

pub use experiment::{
    run_beta_sweep, run_experiment, run_generalisation, run_mse_experiment,
    run_recovery_experiment, run_variance, ExperimentConfig, ExperimentKind, ExperimentReport,
    ReportRow,
};
pub use graph::{
    blocks_all_spurious, check_admissible, collider_warnings, open_spurious_paths, path_blocked,
    spurious_paths, Admissibility, CausalGraph, Criterion, NodeRole, Violation,
};
pub use scm::{fig4_preset, random_admissible_scm, Condition, DiscreteScm};
