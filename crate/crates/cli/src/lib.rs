//! Batch runner for halfspace experiments.

pub mod experiment;
pub mod presets;
pub mod runner;

use std::path::Path;

use anyhow::{bail, Context, Result};

pub use experiment::{CheckKind, CheckSpec, ExperimentSpec};
pub use presets::{bundled, list_presets, BUNDLED};
pub use runner::{run_checks, run_experiment, CheckOutcome, Record, RunOptions, RunSummary};

/// Reads `spec` as a file path, or as the name of a bundled experiment.
pub fn load_spec(spec: &str) -> Result<ExperimentSpec> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    } else if let Some(b) = bundled(spec) {
        b.text.to_string()
    } else {
        let names: Vec<&str> = BUNDLED.iter().map(|b| b.name).collect();
        bail!("{spec:?} is neither a file nor a bundled experiment ({})", names.join(", "));
    };
    ExperimentSpec::parse(&text).with_context(|| format!("in experiment {spec}"))
}
