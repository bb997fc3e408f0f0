//! Run configuration: defaults, JSON config files, and dotted-path
//! overrides.
//!
//! Precedence, lowest to highest: built-in defaults, then the `--config`
//! file, then `--set key.path=value` overrides, then the named flags
//! (`--seed`, `--policy`, `--overhead-ms`, `--out`). A top-level `seed`,
//! wherever it came from, is copied into `noise.seed` and `scenario.seed`
//! at the end so one value drives the whole run.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use gatesim_core::{GatingPolicy, NoiseConfig, ScenarioSpec, StageCostModel};

use crate::commands::CliError;

/// Everything a simulation command needs, in one deserializable block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub policy: GatingPolicy,
    pub cost: StageCostModel,
    pub noise: NoiseConfig,
    /// Scenario to generate in memory. Mutually exclusive with `trace`.
    pub scenario: Option<ScenarioSpec>,
    /// Path to a previously generated trace file.
    pub trace: Option<PathBuf>,
    /// Path to an enrollment database file.
    pub database: Option<PathBuf>,
    /// Where the command writes its report or trace.
    pub output: Option<PathBuf>,
    /// Master seed; when set it overrides `noise.seed` and `scenario.seed`.
    pub seed: Option<u64>,
}

/// Named flags shared by the config-driven commands.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub policy: Option<String>,
    pub overhead_ms: Option<f64>,
    pub out: Option<PathBuf>,
    pub set: Vec<String>,
}

/// Recursively overlay `overlay` onto `base`; objects merge key by key,
/// everything else replaces.
fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(base_map), Value::Object(overlay_map)) => {
            for (key, value) in overlay_map {
                match base_map.get_mut(&key) {
                    Some(slot) => merge(slot, value),
                    None => {
                        base_map.insert(key, value);
                    }
                }
            }
        }
        (slot, value) => *slot = value,
    }
}

/// Apply one `key.path=value` override. Values parse as JSON first and
/// fall back to a plain string, so `--set database=owner.db` works without
/// quoting.
fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (path, raw) = assignment.split_once('=').ok_or_else(|| {
        CliError::Validation(format!("--set expects key.path=value, got '{assignment}'"))
    })?;
    if path.is_empty() {
        return Err(CliError::Validation(format!("--set has an empty key in '{assignment}'")));
    }
    let value: Value =
        serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));

    let mut slot = root;
    let mut segments = path.split('.').peekable();
    while let Some(segment) = segments.next() {
        if segment.is_empty() {
            return Err(CliError::Validation(format!(
                "--set key '{path}' has an empty path segment"
            )));
        }
        if !slot.is_object() {
            *slot = Value::Object(serde_json::Map::new());
        }
        let map = slot.as_object_mut().unwrap();
        if segments.peek().is_none() {
            map.insert(segment.to_string(), value);
            return Ok(());
        }
        slot = map.entry(segment.to_string()).or_insert(Value::Null);
    }
    unreachable!("split('.') yields at least one segment");
}

/// Build the effective config from defaults, the optional file, and the
/// command-line overrides.
pub fn load_config(overrides: &ConfigOverrides) -> Result<RunConfig, CliError> {
    let mut root = serde_json::to_value(RunConfig::default()).expect("defaults serialize");

    if let Some(path) = &overrides.config {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let file_value: Value = serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("config file {}: {e}", path.display()))
        })?;
        merge(&mut root, file_value);
    }

    for assignment in &overrides.set {
        apply_set(&mut root, assignment)?;
    }

    let mut config: RunConfig = serde_json::from_value(root)
        .map_err(|e| CliError::Validation(format!("invalid config: {e}")))?;

    if let Some(seed) = overrides.seed {
        config.seed = Some(seed);
    }
    if let Some(policy) = &overrides.policy {
        config.policy.mode = policy
            .parse()
            .map_err(|e| CliError::Validation(format!("--policy: {e}")))?;
    }
    if let Some(overhead) = overrides.overhead_ms {
        config.cost.overhead_ms = overhead;
    }
    if let Some(out) = &overrides.out {
        config.output = Some(out.clone());
    }

    if let Some(seed) = config.seed {
        config.noise.seed = seed;
        if let Some(scenario) = &mut config.scenario {
            scenario.seed = seed;
        }
    }
    Ok(config)
}
