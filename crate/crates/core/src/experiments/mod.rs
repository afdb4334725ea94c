//! Scenario files, experiment runners and CSV result tables.

mod runner;
mod scenario;
mod table;

pub use runner::{
    run_scenario, run_scenario_pair, run_solve, run_sweep_alpha, run_sweep_fine, run_threshold, run_trace,
    TOOL_VERSION,
};
pub use scenario::{
    default_alpha_grid, default_fine_grid, load_scenario, pair_alphas, Experiment, ExperimentEntry, FpEntry, Mode,
    ModelEntry, ModelKind, Scenario, ScenarioFile, TrojanEntry, Vary,
};
pub use table::{Cell, Column, ResultTable};
