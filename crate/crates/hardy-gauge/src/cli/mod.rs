//! Config-driven front end: a sectioned key-value config format, the
//! orchestration that sweeps scenarios over epsilon, and CSV / JSON-lines
//! report emission.  The binary in `main.rs` is a thin argument-parsing
//! shell over this module, which keeps the whole pipeline testable
//! in-process.

pub mod config;
pub mod report;
pub mod run;

pub use config::{
    parse_config, render_config, ConditionChoice, ConfigError, EpsilonSpec, GridSpec, OutputSpec,
    ReportFormat, RunConfig, ScenarioSpec,
};
pub use report::{emit_report, Cell, ReportRow, CSV_HEADER};
pub use run::{materialize, resolve_epsilons, run_analyze, witness_cell};
