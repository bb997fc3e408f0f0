//! Command implementations.
//!
//! Each command validates its complete configuration before touching the
//! filesystem, so a validation failure never leaves a partial output file.
//! Errors split into two exit classes: validation problems (exit 1) and
//! runtime failures such as unreadable inputs or failed writes (exit 2).

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use gatesim_core::{
    accuracy_over_time, auc, average_precision, compare, generate_trace, load_trace,
    one_vs_rest_metrics, run_simulation, save_trace, synthesize_enrollment, trace_hash,
    validate_trace, ComparisonReport, ConfusionMatrix, Emotion, EmotionScores, OwnerDatabase,
    ScenarioSpec, ScenarioTrace, ScoredSample, SimulationReport,
};

use crate::config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments; nothing was written. Exit code 1.
    #[error("{0}")]
    Validation(String),
    /// Valid request that failed while running. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

/// Print one line to stdout. A closed pipe (the consumer stopped reading,
/// as in `gatesim eval r.json | head`) ends the process quietly instead of
/// panicking; any other write failure is a runtime error.
macro_rules! outln {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let mut stdout = std::io::stdout().lock();
        if let Err(e) = writeln!(stdout, $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(CliError::Runtime(format!("cannot write to stdout: {e}")));
        }
    }};
}

fn fail_on(errors: Vec<String>) -> Result<(), CliError> {
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(errors.join("; ")))
    }
}

fn require_output(config: &RunConfig) -> Result<&Path, CliError> {
    config.output.as_deref().ok_or_else(|| {
        CliError::Validation(
            "output path not set; pass --out or set the output field".to_string(),
        )
    })
}

/// Scenario for gen-trace: the configured one, or defaults with the master
/// seed applied.
fn effective_scenario(config: &RunConfig) -> ScenarioSpec {
    config.scenario.clone().unwrap_or_else(|| {
        let mut scenario = ScenarioSpec::default();
        if let Some(seed) = config.seed {
            scenario.seed = seed;
        }
        scenario
    })
}

pub fn cmd_gen_trace(config: &RunConfig) -> Result<(), CliError> {
    if config.trace.is_some() {
        return Err(CliError::Validation(
            "gen-trace generates from a scenario; remove the trace field".to_string(),
        ));
    }
    let scenario = effective_scenario(config);
    fail_on(scenario.validation_errors())?;
    let out = require_output(config)?;

    let trace = generate_trace(&scenario)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    save_trace(&trace, out)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    outln!(
        "wrote {} frames to {} (hash {})",
        trace.frames.len(),
        out.display(),
        trace_hash(&trace)
    );
    Ok(())
}

pub fn cmd_enroll(
    identity: &str,
    count: usize,
    sigma: f64,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let mut errors = Vec::new();
    if identity.is_empty() {
        errors.push("identity must not be empty".to_string());
    }
    if count == 0 {
        errors.push("count must be at least 1".to_string());
    }
    if !sigma.is_finite() || sigma < 0.0 {
        errors.push(format!("sigma must be finite and >= 0, got {sigma}"));
    }
    fail_on(errors)?;

    let embeddings = synthesize_enrollment(seed, identity, count, sigma);
    let db = OwnerDatabase::enroll(identity, embeddings)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    db.save(out)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    outln!("enrolled {count} embeddings for '{identity}' -> {}", out.display());
    Ok(())
}

/// Shared validation for run and compare: exactly one input source, an
/// existing database, an output path, and well-formed parameter blocks.
fn validate_simulation_config(config: &RunConfig) -> Result<(), CliError> {
    let mut errors = Vec::new();
    errors.extend(config.policy.validation_errors());
    errors.extend(config.cost.validation_errors());
    errors.extend(config.noise.validation_errors());

    match (&config.scenario, &config.trace) {
        (Some(scenario), None) => errors.extend(scenario.validation_errors()),
        (None, Some(path)) => {
            if !path.exists() {
                errors.push(format!("trace file not found: {}", path.display()));
            }
        }
        (Some(_), Some(_)) => {
            errors.push("set exactly one of scenario or trace, not both".to_string())
        }
        (None, None) => errors.push(
            "set exactly one of scenario or trace (for example --set scenario.frame_count=1000)"
                .to_string(),
        ),
    }

    match &config.database {
        Some(path) => {
            if !path.exists() {
                errors.push(format!("database file not found: {}", path.display()));
            }
        }
        None => errors.push(
            "database path not set; enroll first and pass --set database=PATH".to_string(),
        ),
    }

    if config.output.is_none() {
        errors.push("output path not set; pass --out or set the output field".to_string());
    }
    fail_on(errors)
}

fn load_inputs(config: &RunConfig) -> Result<(ScenarioTrace, OwnerDatabase), CliError> {
    let trace = match (&config.scenario, &config.trace) {
        (Some(scenario), None) => generate_trace(scenario)
            .map_err(|e| CliError::Validation(e.to_string()))?,
        (None, Some(path)) => {
            let trace = load_trace(path).map_err(|e| {
                CliError::Runtime(format!("cannot load trace {}: {e}", path.display()))
            })?;
            let violations = validate_trace(&trace);
            if let Some(first) = violations.first() {
                return Err(CliError::Runtime(format!(
                    "trace {} is invalid: {first} ({} violation(s) total)",
                    path.display(),
                    violations.len()
                )));
            }
            trace
        }
        _ => unreachable!("validated as exactly one source"),
    };

    let db_path = config.database.as_ref().expect("validated as present");
    let db = OwnerDatabase::load(db_path).map_err(|e| {
        CliError::Runtime(format!("cannot load database {}: {e}", db_path.display()))
    })?;
    Ok((trace, db))
}

pub fn cmd_run(config: &RunConfig) -> Result<(), CliError> {
    validate_simulation_config(config)?;
    let out = require_output(config)?;
    let (trace, db) = load_inputs(config)?;

    let report = run_simulation(&trace, &config.policy, &db, &config.cost, &config.noise)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(out, report.to_json_pretty())
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    outln!(
        "policy {}: {} frames, avg {:.2} ms/frame, {:.2} fps -> {}",
        report.policy.mode,
        report.frames,
        report.avg_cost_per_frame_ms,
        report.average_fps,
        out.display()
    );
    Ok(())
}

pub fn cmd_compare(config: &RunConfig) -> Result<(), CliError> {
    validate_simulation_config(config)?;
    let out = require_output(config)?;
    let (trace, db) = load_inputs(config)?;

    let report = compare(&trace, &db, &config.cost, &config.noise, &config.policy)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(out, report.to_json_pretty())
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", out.display())))?;
    outln!(
        "baseline: {:.2} ms/frame, {:.2} fps",
        report.baseline.avg_cost_per_frame_ms, report.baseline.average_fps
    );
    outln!(
        "adaptive: {:.2} ms/frame, {:.2} fps",
        report.adaptive.avg_cost_per_frame_ms, report.adaptive.average_fps
    );
    outln!(
        "fps_ratio: {:.2}, time_per_frame_reduction_pct: {:.1}, module_compute_reduction_pct: {:.1}",
        report.fps_ratio,
        report.time_per_frame_reduction_pct,
        report.module_compute_reduction_pct
    );
    outln!("-> {}", out.display());
    Ok(())
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

fn print_report_metrics(report: &SimulationReport, window: usize) -> Result<(), CliError> {
    outln!("policy: {}", report.policy.mode);
    outln!("frames: {}", report.frames);
    outln!("faces scored: {}", report.face_outcomes.len());

    let predictions: Vec<bool> =
        report.face_outcomes.iter().map(|o| o.predicted_owner).collect();
    let truths: Vec<bool> = report.face_outcomes.iter().map(|o| o.is_owner_truth).collect();
    match ConfusionMatrix::from_predictions(&predictions, &truths) {
        Ok(m) => {
            outln!(
                "owner confusion: tp {} fp {} tn {} fn {}",
                m.true_positives, m.false_positives, m.true_negatives, m.false_negatives
            );
            outln!("owner accuracy: {}", fmt_opt(m.accuracy()));
        }
        Err(_) => outln!("owner confusion: n/a (no face outcomes)"),
    }

    let samples: Vec<ScoredSample> = report
        .face_outcomes
        .iter()
        .map(|o| ScoredSample::new(o.similarity, o.is_owner_truth))
        .collect();
    outln!("owner auc: {}", fmt_opt(auc(&samples).ok()));
    outln!("owner ap: {}", fmt_opt(average_precision(&samples).ok()));

    let emotion_outcomes: Vec<(u64, bool)> = report
        .face_outcomes
        .iter()
        .filter_map(|o| {
            o.predicted_emotion.map(|predicted| (o.frame_index, predicted == o.true_emotion))
        })
        .collect();
    if emotion_outcomes.is_empty() {
        outln!("emotion_accuracy: n/a (no emotion outcomes)");
    } else {
        let correct = emotion_outcomes.iter().filter(|o| o.1).count();
        outln!("emotion_accuracy: {:.4}", correct as f64 / emotion_outcomes.len() as f64);
    }

    let scored: Vec<(EmotionScores, Emotion)> = report
        .face_outcomes
        .iter()
        .filter_map(|o| o.emotion_scores.clone().map(|s| (s, o.true_emotion)))
        .collect();
    outln!("per-class metrics:");
    for (class, metrics) in one_vs_rest_metrics(&scored) {
        outln!("  {class}: auc {}, ap {}", fmt_opt(metrics.auc), fmt_opt(metrics.ap));
    }

    let windows = accuracy_over_time(&emotion_outcomes, window);
    if windows.is_empty() {
        outln!("windowed accuracy (window {window}): n/a (fewer outcomes than the window)");
    } else {
        let min = windows.iter().map(|w| w.1).fold(f64::INFINITY, f64::min);
        let max = windows.iter().map(|w| w.1).fold(f64::NEG_INFINITY, f64::max);
        outln!(
            "windowed accuracy (window {window}): {} windows, min {min:.4}, max {max:.4}",
            windows.len()
        );
    }
    Ok(())
}

pub fn cmd_eval(path: &PathBuf, window: usize) -> Result<(), CliError> {
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "report file not found: {}",
            path.display()
        )));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Runtime(format!("cannot parse {}: {e}", path.display())))?;

    if value.get("baseline").is_some() {
        let report: ComparisonReport = serde_json::from_value(value).map_err(|e| {
            CliError::Runtime(format!("{} is not a comparison report: {e}", path.display()))
        })?;
        outln!("== baseline ==");
        print_report_metrics(&report.baseline, window)?;
        outln!("== adaptive ==");
        print_report_metrics(&report.adaptive, window)?;
        outln!(
            "fps_ratio: {:.2}, time_per_frame_reduction_pct: {:.1}, module_compute_reduction_pct: {:.1}",
            report.fps_ratio,
            report.time_per_frame_reduction_pct,
            report.module_compute_reduction_pct
        );
    } else {
        let report: SimulationReport = serde_json::from_value(value).map_err(|e| {
            CliError::Runtime(format!("{} is not a simulation report: {e}", path.display()))
        })?;
        print_report_metrics(&report, window)?;
    }
    Ok(())
}
