//! Configuration, scenario orchestration and file output.

pub mod compare;
pub mod config;
pub mod output;
pub mod scenario;

pub use compare::{compare_scenarios, reference_trio, render_table, sweep, ComparisonRow};
pub use config::{ScenarioConfig, ScenarioKind, OUTPUT_ROOT_ENV};
pub use output::emit_outputs;
pub use scenario::{prepare, run_scenario, run_scenario_with, ScenarioResult, SeriesRow, Summary};
