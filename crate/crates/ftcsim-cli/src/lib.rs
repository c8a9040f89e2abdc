//! Config loading and subcommand logic for the `ftcsim` binary.

// validation guards are written as `!(v > 0.0)` so NaN fails them too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod expr;

pub use commands::{
    run_check_gains, run_compare, run_counterexample, run_simulate, run_sweep, CompareOutput,
    CounterexampleOutput, SimulateOutput, SweepParam, SweepRow,
};
pub use config::{load_scenario, Scenario};
pub use error::CliError;
