//! Configuration, orchestration of runs, sweeps, convergence studies and the
//! verification suite, and all file output.

pub mod cli;
mod config;
mod convergence;
mod initial;
mod output;
mod sweep;

pub use config::{
    load_config, DiagnosticsSettings, OutputSpec, ResolvedRun, RunConfig, RUN_SCHEMA,
    VALIDATION_SAMPLES, VALIDATION_V_MAX,
};
pub use convergence::{convergence_study, ConvergenceKind, ExactSolution, ConvergenceRow, ConvergenceTable};
pub use initial::{make_initial_data, Bump, ChemicalSpec, DensitySpec, InitialSpec};
pub use output::{initial_state, simulate, SUMMARY_SCHEMA};
pub use sweep::{run_sweep, Axis, SweepPlan, SweepRow, SweepTable, SWEEP_SCHEMA};
