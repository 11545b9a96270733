use std::path::Path;

use clap::Args;
use das_core::gen::{GenConfig, GenError};
use das_core::policies::PolicyKind;
use serde::{Deserialize, Serialize};

use crate::error::{read, CliError};

/// Sweep dimensions of `das bench`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchGrid {
    pub csf_values: Vec<f64>,
    pub walk_values_m: Vec<f64>,
    pub scenario_counts: Vec<usize>,
    pub policies: Vec<PolicyKind>,
    pub seeds_per_cell: usize,
}

impl Default for BenchGrid {
    fn default() -> Self {
        BenchGrid {
            csf_values: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            walk_values_m: vec![100.0, 150.0, 250.0, 300.0, 350.0, 400.0],
            scenario_counts: vec![5, 10, 20, 30, 40],
            policies: PolicyKind::ALL.to_vec(),
            seeds_per_cell: 5,
        }
    }
}

impl BenchGrid {
    pub fn check(&self) -> Result<(), CliError> {
        let empty = |flag: &str| Err(CliError::Usage(format!("{flag} needs at least one value")));
        if self.csf_values.is_empty() {
            return empty("--csf-values");
        }
        if self.walk_values_m.is_empty() {
            return empty("--walk-values");
        }
        if self.scenario_counts.is_empty() {
            return empty("--scenario-counts");
        }
        if self.policies.is_empty() {
            return empty("--policies");
        }
        if self.seeds_per_cell == 0 {
            return Err(CliError::Usage("--seeds-per-cell must be at least 1".into()));
        }
        Ok(())
    }
}

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub generator: GenConfig,
    pub grid: BenchGrid,
    pub jobs: Option<usize>,
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

/// Generator settings that every generating subcommand accepts.
#[derive(Args, Clone, Debug, Default)]
pub struct GenFlags {
    /// Fare of every request.
    #[arg(long)]
    pub utility: Option<f64>,
    #[arg(long)]
    pub line_stops: Option<usize>,
    /// Mean number of trips per instance.
    #[arg(long)]
    pub expected_requests: Option<f64>,
    /// Extra time per segment as a fraction of the sweep detour.
    #[arg(long)]
    pub slack: Option<f64>,
    #[arg(long)]
    pub window_width: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub cost_per_m: Option<f64>,
}

impl GenFlags {
    pub fn apply(&self, c: &mut GenConfig) {
        if let Some(v) = self.utility {
            c.utility = v;
        }
        if let Some(v) = self.line_stops {
            c.line_stops = v;
        }
        if let Some(v) = self.expected_requests {
            c.expected_requests = v;
        }
        if let Some(v) = self.slack {
            c.slack = v;
        }
        if let Some(v) = self.window_width {
            c.window_width_s = v;
        }
        if let Some(v) = self.horizon {
            c.horizon_s = v;
        }
        if let Some(v) = self.cost_per_m {
            c.cost_per_m = v;
        }
    }
}

fn flag_for(field: &str) -> String {
    let flag = match field {
        "walk_radius_m" => "walk",
        "window_width_s" => "window-width",
        "horizon_s" => "horizon",
        "csf" | "utility" | "line_stops" | "expected_requests" | "slack" | "cost_per_m" | "seed" => {
            return format!("--{}", field.replace('_', "-"));
        }
        other => return format!("config field `generator.{other}`"),
    };
    format!("--{flag}")
}

/// Rejects bad generator settings as a usage error naming the flag.
pub fn check_generator(c: &GenConfig) -> Result<(), CliError> {
    match c.check() {
        Ok(()) => Ok(()),
        Err(GenError::InvalidConfig { field, reason }) => {
            Err(CliError::Usage(format!("invalid value for {}: {reason}", flag_for(field))))
        }
        Err(e) => Err(CliError::Usage(e.to_string())),
    }
}
