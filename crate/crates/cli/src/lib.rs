//! Scenario files, bundled fixtures and the `design`, `simulate`, `analyze` and `check` pipelines
//! behind the `splitobs` binary.

pub mod build;
pub mod fixtures;
pub mod pipeline;
pub mod schema;

pub use build::{prepare, Overrides, Prepared};
pub use pipeline::{run, CliError, Command, Outcome};
pub use schema::{parse_scenario, parse_str, ScenarioFile};
