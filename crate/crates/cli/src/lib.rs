//! Scenario-driven front end for the `ofdm_ici` studies.

pub mod output;
pub mod run;
pub mod scenario;

pub use run::{run_scenario, RunReport};
pub use scenario::{load_scenario, parse_scenario, Overrides, Scenario, ScenarioFile, StudyKind};
