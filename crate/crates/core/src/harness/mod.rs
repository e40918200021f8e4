//! Scenario files, Monte Carlo sweeps and CSV output.

pub mod config;
pub mod csv;
pub mod experiment;
pub mod summary;

pub use config::{db_to_linear, linear_to_db, ScenarioConfig};
pub use self::csv::{emit_csv, format_sig, parse_csv, read_csv, write_csv, CsvRow};
pub use experiment::{
    avg_iterations, run_experiment, run_feasibility, run_trial, Axis, ExperimentSpec, Scheme, SchemeSelection, TrialRecord,
    TrialStatus, DEFAULT_TRIALS,
};
pub use summary::{summarize, PointSummary};
