//! Synthetic sparse-regression instances, the objective-evolution metric
//! `E(t)` and the multi-trial benchmark runner.

mod benchmark;
mod evolution;
mod instance;

pub use benchmark::{
    run_algorithm, run_benchmark, write_csv, write_manifest, Algorithm, BenchBudget, BenchmarkResult, CellResult,
    RunOutcome, SuiteConfig, CSV_HEADER,
};
pub use evolution::{
    evolution_metric, normalized_errors, staircase, time_grid, trial_f_min, Clock, EvolutionCurve, DEFAULT_GRID_POINTS,
};
pub use instance::{build_instance, gen_l12_instance, gen_logistic_instance, Family, Instance, InstanceSpec};
