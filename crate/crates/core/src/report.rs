//! Serializable simulation reports.
//!
//! Reports are the simulator's only output format: a summary block
//! (throughput, cost totals, invocation counts) plus a full execution log
//! and per-face classification outcomes for the metrics tooling. Field
//! names and ordering are part of the contract; identical inputs must
//! produce byte-identical report files, so every collection here is ordered
//! and nothing depends on hash-map iteration.

use serde::{Deserialize, Serialize};

use crate::embedding::MatchResult;
use crate::model::{Emotion, EmotionScores};
use crate::scheduler::{AnnotationEvent, FrameResult, GatingPolicy};
use crate::stages::{NoiseConfig, StageCostModel, StageKind};

/// How many times each stage ran over a whole run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageInvocations {
    pub detect: u64,
    pub face: u64,
    /// One invocation per face scored, not per frame.
    pub emotion: u64,
}

/// Simulated cost charged to one frame, split by source.
///
/// `emotion_ms` is the total over all faces scored in the frame. Fields sum
/// to the frame's `cost_ms` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameCharges {
    pub overhead_ms: f64,
    pub detect_ms: f64,
    pub face_ms: f64,
    pub emotion_ms: f64,
}

/// One execution-log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    /// Stage kinds that ran at least once this frame.
    pub stages_run: Vec<StageKind>,
    pub charges: FrameCharges,
    pub cost_ms: f64,
    pub matches: Vec<MatchResult>,
    /// `(face ordinal, dominant emotion)` for each face scored.
    pub dominant_emotions: Vec<(usize, Emotion)>,
    pub annotations: Vec<AnnotationEvent>,
}

impl FrameRecord {
    pub fn from_result(result: &FrameResult, cost: &StageCostModel) -> Self {
        let mut stages_run = vec![StageKind::Detect];
        if result.plan.run_face {
            stages_run.push(StageKind::Face);
        }
        if !result.emotions.is_empty() {
            stages_run.push(StageKind::Emotion);
        }
        Self {
            index: result.frame_index,
            stages_run,
            charges: FrameCharges {
                overhead_ms: cost.overhead_ms,
                detect_ms: cost.detect_ms,
                face_ms: if result.plan.run_face { cost.face_ms } else { 0.0 },
                emotion_ms: result.emotions.len() as f64 * cost.emotion_ms,
            },
            cost_ms: result.cost_ms,
            matches: result.matches.clone(),
            dominant_emotions: result
                .emotions
                .iter()
                .map(|(ordinal, scores)| (*ordinal, scores.dominant()))
                .collect(),
            annotations: result.annotations.clone(),
        }
    }
}

/// Per-face classification outcome, the input to the metrics tooling.
///
/// Only faces the face stage actually saw appear here; faces on non-gated
/// frames produce no outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceOutcome {
    pub frame_index: u64,
    pub face_ordinal: usize,
    pub true_identity: String,
    /// Whether the face truly belongs to the enrolled identity.
    pub is_owner_truth: bool,
    /// Best cosine similarity against the enrolled set.
    pub similarity: f64,
    pub predicted_owner: bool,
    pub true_emotion: Emotion,
    /// Absent when the emotion stage did not run for this face.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub predicted_emotion: Option<Emotion>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub emotion_scores: Option<EmotionScores>,
}

/// Full record of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy: GatingPolicy,
    pub frames: u64,
    /// Sum of per-frame simulated costs.
    pub total_time_ms: f64,
    /// `1000 * frames / total_time_ms`; zero for degenerate runs.
    pub average_fps: f64,
    pub avg_cost_per_frame_ms: f64,
    /// Stage cost only, overhead excluded.
    pub module_time_ms: f64,
    pub stage_invocations: StageInvocations,
    /// Most distinct stages active within any single frame. A proxy for
    /// pipeline load: the simulator itself never runs stages concurrently.
    pub peak_stage_concurrency: u32,
    /// Share of simulated time spent inside perception stages, in percent.
    /// A proxy for CPU utilisation, not a process measurement.
    pub cpu_busy_pct_proxy: f64,
    /// Static footprint constant for the policy mode, in MB. A labelled
    /// proxy, not a measurement.
    pub memory_footprint_mb_proxy: f64,
    /// FNV-1a 64 hash of the trace, as fixed-width hex.
    pub trace_hash: String,
    pub seed: u64,
    pub cost_model: StageCostModel,
    pub noise: NoiseConfig,
    pub face_outcomes: Vec<FaceOutcome>,
    pub frame_log: Vec<FrameRecord>,
}

impl SimulationReport {
    /// Pretty JSON with a trailing newline; the exact bytes written to
    /// report files.
    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}

/// Baseline and adaptive runs over the same trace, with derived ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: SimulationReport,
    pub adaptive: SimulationReport,
    /// `adaptive.average_fps / baseline.average_fps`.
    pub fps_ratio: f64,
    /// Percent drop in average frame cost, overhead included.
    pub time_per_frame_reduction_pct: f64,
    /// Percent drop in summed stage cost, overhead excluded.
    pub module_compute_reduction_pct: f64,
    /// Notes on how the default latencies relate to reference timings.
    pub calibration_note: String,
}

impl ComparisonReport {
    pub fn to_json_pretty(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }
}
