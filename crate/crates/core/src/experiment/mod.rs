//! Knapsack and mean-variance experiments: instance generation, relaxation
//! solves, and budget sweeps over ranking strategies.

pub mod instance;
pub mod solver;
pub mod sweep;

pub use instance::{generate_knapsack, generate_meanvar, KnapsackInstance, MeanVarianceInstance};
pub use solver::{solve_meanvar, solve_relaxation, SolveResult, SolveStatus};
pub use sweep::{run_budget_sweep, sweep_csv, Experiment, SweepRow, CSV_HEADER, DEFAULT_STEPS, EXPERIMENT_P};
