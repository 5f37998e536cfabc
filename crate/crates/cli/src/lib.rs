//! Config-driven runner for the folflow scenarios.
//!
//! A run reads one TOML file, executes one scenario and writes
//! `trajectory.csv`, `fields_<t>.csv` snapshots, `summary.json` and an
//! optional `plot.gp` into its output directory.

pub mod artifacts;
pub mod catalog;
pub mod config;
pub mod families;
pub mod run;

use serde_json::{json, Value};

pub use config::{parse_config, parse_str, serialize, ConfigError, RunConfig, Scenario};
pub use run::{execute, output_dir, run, RunOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Machine-readable error object for a configuration error.
pub fn config_error_json(path: &str, e: &ConfigError) -> Value {
    let mut v = json!({"status": "failed", "config": path, "message": e.to_string()});
    match e {
        ConfigError::Io { .. } => v["kind"] = json!("io"),
        ConfigError::Parse { line, column, field, .. } => {
            v["kind"] = json!("parse");
            v["line"] = json!(line);
            v["column"] = json!(column);
            v["field"] = json!(field);
        }
        ConfigError::Validation { violations } => {
            v["kind"] = json!("validation");
            v["violations"] = json!(violations);
        }
    }
    v
}
