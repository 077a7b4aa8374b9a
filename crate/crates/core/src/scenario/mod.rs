//! Scenario files, the case-study preset, runs, sweeps and CSV export.

pub mod export;
pub mod preset;
pub mod runner;
pub mod schema;
pub mod units;

pub use preset::{case_study, preset_case_study};
pub use runner::{run_scenario, sweep, RunOptions, RunOutcome, SweepParam, SweepRow};
pub use schema::{parse_scenario, parse_scenario_str, OutputTarget, Scenario, SimSettings, SCHEMA_VERSION};
pub use units::{Bases, SubsystemBase};
