//! Per-frame gating decisions and pipeline execution.
//!
//! The detector runs on every frame. In adaptive mode the face stage runs
//! only when the frame index hits the configured period AND the trigger
//! class survives confidence filtering; the emotion stage then runs only for
//! faces the matcher accepted (or for all faces, depending on scope).
//! Baseline mode runs everything on every frame for every face and is the
//! reference the adaptive policy is compared against.
//!
//! ```text
//!              every frame                  gated                owner-gated
//!  FrameTruth ──> detect ──> filter ──┬──> face match ──┬──> emotion
//!                                     │    (period &    │    (scope)
//!                                     │     trigger)    │
//!                                     └── skip ── skip ─┴── skip
//! ```
//!
//! Frame counting starts at zero, so frame 0 is always period-eligible.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{MatchResult, OwnerDatabase};
use crate::model::{
    contains_class, filter_by_confidence, BoundingBox, Detection, EmotionScores, FrameTruth,
    ScenarioTrace,
};
use crate::stages::{MockStages, StageCostModel};

/// Scheduling policy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// Gate the face stage by frame period and trigger class.
    Adaptive,
    /// Run every stage on every frame for every face.
    Baseline,
}

impl fmt::Display for PolicyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyMode::Adaptive => "adaptive",
            PolicyMode::Baseline => "baseline",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown policy mode: {0} (expected adaptive or baseline)")]
pub struct UnknownPolicyMode(String);

impl FromStr for PolicyMode {
    type Err = UnknownPolicyMode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(PolicyMode::Adaptive),
            "baseline" => Ok(PolicyMode::Baseline),
            other => Err(UnknownPolicyMode(other.to_string())),
        }
    }
}

/// Which matched faces get emotion analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmotionScope {
    /// Only faces the matcher accepted as the owner.
    OwnerOnly,
    /// Every face seen by the face stage.
    AllFaces,
}

/// Complete gating configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatingPolicy {
    pub mode: PolicyMode,
    /// Face stage may run only on frames whose index is a multiple of this.
    pub face_period: u64,
    /// Detection class that must be present for the face stage to run.
    pub face_trigger_class: String,
    pub emotion_scope: EmotionScope,
    /// Detections at or below this confidence are discarded before gating.
    pub confidence_threshold: f64,
    /// Minimum cosine similarity for an owner match.
    pub match_threshold: f64,
}

impl Default for GatingPolicy {
    fn default() -> Self {
        Self {
            mode: PolicyMode::Adaptive,
            face_period: 5,
            face_trigger_class: "person".to_string(),
            emotion_scope: EmotionScope::OwnerOnly,
            confidence_threshold: 0.5,
            match_threshold: 0.7,
        }
    }
}

impl GatingPolicy {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.face_period == 0 {
            errors.push("face_period must be at least 1".to_string());
        }
        if self.face_trigger_class.is_empty() {
            errors.push("face_trigger_class must not be empty".to_string());
        }
        if !self.confidence_threshold.is_finite()
            || !(0.0..=1.0).contains(&self.confidence_threshold)
        {
            errors.push(format!(
                "confidence_threshold out of range [0, 1]: {}",
                self.confidence_threshold
            ));
        }
        if !self.match_threshold.is_finite() || !(-1.0..=1.0).contains(&self.match_threshold) {
            errors.push(format!(
                "match_threshold out of range [-1, 1]: {}",
                self.match_threshold
            ));
        }
        errors
    }
}

/// Stage activation decisions for one frame.
///
/// `run_emotion_for` cannot be known at planning time (it depends on match
/// results), so the planner leaves it empty and [`execute_frame`] fills it
/// with the ordinals of faces that actually received emotion analysis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ExecutionPlan {
    pub run_detect: bool,
    pub run_face: bool,
    pub run_emotion_for: Vec<usize>,
}

/// What an on-screen overlay would draw for this frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnotationKind {
    /// Matched owner face (rendered green).
    OwnerGreen,
    /// Unmatched face (rendered red).
    UnknownRed,
    /// Detected object box.
    ObjectBox,
    /// Dominant emotion tag on a face.
    EmotionLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationEvent {
    pub kind: AnnotationKind,
    pub label: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

/// Everything one frame produced.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: u64,
    /// The plan as executed, `run_emotion_for` included.
    pub plan: ExecutionPlan,
    /// Raw detector output, before confidence filtering.
    pub detections: Vec<Detection>,
    /// One match per face, in face order, when the face stage ran.
    pub matches: Vec<MatchResult>,
    /// `(face ordinal, scores)` for each face that received emotion
    /// analysis.
    pub emotions: Vec<(usize, EmotionScores)>,
    pub annotations: Vec<AnnotationEvent>,
    /// Simulated cost of this frame under the cost model.
    pub cost_ms: f64,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("frame {frame_index}: face stage is enabled but no owner database was provided")]
    MissingDatabase { frame_index: u64 },
}

/// Decide which stages may run on this frame.
///
/// Baseline enables the face stage unconditionally. Adaptive requires both
/// the period hit (`frame_index mod face_period == 0`) and the trigger class
/// among the filtered detections.
pub fn plan_frame(
    frame_index: u64,
    filtered_detections: &[Detection],
    policy: &GatingPolicy,
) -> ExecutionPlan {
    let run_face = match policy.mode {
        PolicyMode::Baseline => true,
        PolicyMode::Adaptive => {
            frame_index.is_multiple_of(policy.face_period)
                && contains_class(filtered_detections, &policy.face_trigger_class)
        }
    };
    ExecutionPlan { run_detect: true, run_face, run_emotion_for: Vec::new() }
}

/// Run one frame under an existing plan, detector included.
pub fn execute_frame(
    frame: &FrameTruth,
    plan: ExecutionPlan,
    db: Option<&OwnerDatabase>,
    stages: &MockStages,
    cost: &StageCostModel,
    policy: &GatingPolicy,
) -> Result<FrameResult, PipelineError> {
    let detections = stages.detect(frame);
    execute_with_detections(frame, detections, plan, db, stages, cost, policy)
}

fn execute_with_detections(
    frame: &FrameTruth,
    detections: Vec<Detection>,
    mut plan: ExecutionPlan,
    db: Option<&OwnerDatabase>,
    stages: &MockStages,
    cost: &StageCostModel,
    policy: &GatingPolicy,
) -> Result<FrameResult, PipelineError> {
    plan.run_emotion_for.clear();
    let filtered = filter_by_confidence(&detections, policy.confidence_threshold);

    let mut annotations: Vec<AnnotationEvent> = filtered
        .iter()
        .map(|d| AnnotationEvent {
            kind: AnnotationKind::ObjectBox,
            label: d.class.clone(),
            bbox: d.bbox,
        })
        .collect();

    let mut matches = Vec::new();
    let mut emotions = Vec::new();
    if plan.run_face {
        let db = db.ok_or(PipelineError::MissingDatabase { frame_index: frame.index })?;
        for (ordinal, face) in frame.faces.iter().enumerate() {
            let probe = stages.embed(face, frame.index, ordinal);
            let result = db.match_probe(&probe, policy.match_threshold);
            annotations.push(AnnotationEvent {
                kind: if result.is_owner {
                    AnnotationKind::OwnerGreen
                } else {
                    AnnotationKind::UnknownRed
                },
                label: if result.is_owner { db.identity().to_string() } else { "unknown".to_string() },
                bbox: face.bbox,
            });
            matches.push(result);
        }
        for (ordinal, face) in frame.faces.iter().enumerate() {
            let permitted = match policy.emotion_scope {
                EmotionScope::OwnerOnly => matches[ordinal].is_owner,
                EmotionScope::AllFaces => true,
            };
            if permitted {
                let scores = stages.emotion(face, frame.index, ordinal);
                annotations.push(AnnotationEvent {
                    kind: AnnotationKind::EmotionLabel,
                    label: scores.dominant().label().to_string(),
                    bbox: face.bbox,
                });
                emotions.push((ordinal, scores));
                plan.run_emotion_for.push(ordinal);
            }
        }
    }

    let cost_ms = cost.frame_cost(plan.run_face, emotions.len());
    Ok(FrameResult {
        frame_index: frame.index,
        plan,
        detections,
        matches,
        emotions,
        annotations,
        cost_ms,
    })
}

fn process_frame(
    frame: &FrameTruth,
    policy: &GatingPolicy,
    db: Option<&OwnerDatabase>,
    stages: &MockStages,
    cost: &StageCostModel,
) -> Result<FrameResult, PipelineError> {
    let detections = stages.detect(frame);
    let filtered = filter_by_confidence(&detections, policy.confidence_threshold);
    let plan = plan_frame(frame.index, &filtered, policy);
    execute_with_detections(frame, detections, plan, db, stages, cost, policy)
}

/// Run the whole trace, one [`FrameResult`] per frame in frame order.
///
/// With the `parallel` feature (the default) frames are processed by rayon;
/// every per-frame random draw is keyed by frame index, so the parallel and
/// sequential paths produce identical results. On error, the failure from
/// the earliest frame is reported.
#[cfg(feature = "parallel")]
pub fn run_pipeline(
    trace: &ScenarioTrace,
    policy: &GatingPolicy,
    db: Option<&OwnerDatabase>,
    stages: &MockStages,
    cost: &StageCostModel,
) -> Result<Vec<FrameResult>, PipelineError> {
    use rayon::prelude::*;
    let results: Vec<Result<FrameResult, PipelineError>> = trace
        .frames
        .par_iter()
        .map(|frame| process_frame(frame, policy, db, stages, cost))
        .collect();
    results.into_iter().collect()
}

/// Sequential fallback when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn run_pipeline(
    trace: &ScenarioTrace,
    policy: &GatingPolicy,
    db: Option<&OwnerDatabase>,
    stages: &MockStages,
    cost: &StageCostModel,
) -> Result<Vec<FrameResult>, PipelineError> {
    run_pipeline_sequential(trace, policy, db, stages, cost)
}

/// Single-threaded pipeline run. Always available; used by benchmarks to
/// compare against the parallel path and by callers that need to bound
/// thread usage.
pub fn run_pipeline_sequential(
    trace: &ScenarioTrace,
    policy: &GatingPolicy,
    db: Option<&OwnerDatabase>,
    stages: &MockStages,
    cost: &StageCostModel,
) -> Result<Vec<FrameResult>, PipelineError> {
    trace
        .frames
        .iter()
        .map(|frame| process_frame(frame, policy, db, stages, cost))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Emotion, GroundFace, GroundObject};
    use crate::stages::{IdentityPrototypes, NoiseConfig};

    fn unit_box() -> BoundingBox {
        BoundingBox { x: 0.0, y: 0.0, w: 50.0, h: 50.0 }
    }

    fn person_detection(confidence: f64) -> Detection {
        Detection { class: "person".into(), confidence, bbox: unit_box() }
    }

    fn frame(index: u64, identities: &[&str]) -> FrameTruth {
        FrameTruth {
            index,
            objects: if identities.is_empty() {
                vec![]
            } else {
                vec![GroundObject { class: "person".into(), confidence: 0.9, bbox: unit_box() }]
            },
            faces: identities
                .iter()
                .map(|id| GroundFace {
                    identity: (*id).into(),
                    emotion: Emotion::Happy,
                    bbox: unit_box(),
                })
                .collect(),
        }
    }

    fn trace(frames: Vec<FrameTruth>) -> ScenarioTrace {
        ScenarioTrace { version: 1, seed: 42, frames }
    }

    fn exact_noise() -> NoiseConfig {
        NoiseConfig { embedding_sigma: 0.0, confidence_jitter: 0.0, ..NoiseConfig::default() }
    }

    fn owner_setup(noise: NoiseConfig) -> (OwnerDatabase, MockStages) {
        let prototypes = IdentityPrototypes::build(noise.seed, "owner", ["intruder"]);
        let db = OwnerDatabase::enroll(
            "owner",
            vec![IdentityPrototypes::base_prototype(noise.seed, "owner")],
        )
        .unwrap();
        (db, MockStages::new(prototypes, noise))
    }

    #[test]
    fn adaptive_plan_requires_period_and_trigger() {
        let policy = GatingPolicy::default();
        let person = vec![person_detection(0.9)];
        assert!(plan_frame(5, &person, &policy).run_face);
        assert!(!plan_frame(3, &person, &policy).run_face);
        assert!(!plan_frame(10, &[], &policy).run_face);
        assert!(plan_frame(0, &person, &policy).run_face);
    }

    #[test]
    fn baseline_plan_always_runs_face() {
        let policy = GatingPolicy { mode: PolicyMode::Baseline, ..GatingPolicy::default() };
        assert!(plan_frame(3, &[], &policy).run_face);
        assert!(plan_frame(7, &[person_detection(0.9)], &policy).run_face);
    }

    #[test]
    fn trigger_class_must_survive_filtering() {
        let policy = GatingPolicy::default();
        let weak_person = vec![person_detection(0.4)];
        assert!(!plan_frame(0, &filter_by_confidence(&weak_person, 0.5), &policy).run_face);
    }

    #[test]
    fn owner_face_on_gated_frame_costs_full_pipeline() {
        let (db, stages) = owner_setup(exact_noise());
        let policy = GatingPolicy::default();
        let cost = StageCostModel::default();
        let f = frame(0, &["owner"]);
        let plan = plan_frame(0, &filter_by_confidence(&stages.detect(&f), 0.5), &policy);
        let result = execute_frame(&f, plan, Some(&db), &stages, &cost, &policy).unwrap();
        assert_eq!(result.matches.len(), 1);
        assert!(result.matches[0].is_owner);
        assert_eq!(result.emotions.len(), 1);
        assert_eq!(result.cost_ms, 240.0);
        assert!(result
            .annotations
            .iter()
            .any(|a| a.kind == AnnotationKind::OwnerGreen && a.label == "owner"));
        assert!(result.annotations.iter().any(|a| a.kind == AnnotationKind::EmotionLabel));
        assert_eq!(result.plan.run_emotion_for, vec![0]);
    }

    #[test]
    fn unknown_face_on_gated_frame_skips_emotion() {
        let (db, stages) = owner_setup(exact_noise());
        let policy = GatingPolicy::default();
        let cost = StageCostModel { overhead_ms: 10.0, ..StageCostModel::default() };
        let f = frame(0, &["intruder"]);
        let plan = plan_frame(0, &filter_by_confidence(&stages.detect(&f), 0.5), &policy);
        let result = execute_frame(&f, plan, Some(&db), &stages, &cost, &policy).unwrap();
        assert_eq!(result.matches.len(), 1);
        assert!(!result.matches[0].is_owner);
        assert!(result.emotions.is_empty());
        assert_eq!(result.cost_ms, 10.0 + 160.0);
        assert!(result
            .annotations
            .iter()
            .any(|a| a.kind == AnnotationKind::UnknownRed && a.label == "unknown"));
        assert!(result.plan.run_emotion_for.is_empty());
    }

    #[test]
    fn non_gated_frame_is_detector_only() {
        let (db, stages) = owner_setup(exact_noise());
        let policy = GatingPolicy::default();
        let cost = StageCostModel::default();
        let f = frame(3, &[]);
        let plan = plan_frame(3, &[], &policy);
        let result = execute_frame(&f, plan, Some(&db), &stages, &cost, &policy).unwrap();
        assert!(result.matches.is_empty());
        assert!(result.emotions.is_empty());
        assert_eq!(result.cost_ms, 40.0);
    }

    #[test]
    fn missing_database_fails_with_frame_index() {
        let (_, stages) = owner_setup(exact_noise());
        let policy = GatingPolicy::default();
        let f = frame(0, &["owner"]);
        let plan = ExecutionPlan { run_detect: true, run_face: true, run_emotion_for: vec![] };
        let err = execute_frame(&f, plan, None, &stages, &StageCostModel::default(), &policy)
            .unwrap_err();
        assert!(err.to_string().contains("frame 0"));
        assert!(matches!(err, PipelineError::MissingDatabase { frame_index: 0 }));
    }

    #[test]
    fn all_owner_trace_gates_exactly_a_fifth_of_frames() {
        let (db, stages) = owner_setup(exact_noise());
        let frames = (0..1000).map(|i| frame(i, &["owner"])).collect();
        let results = run_pipeline_sequential(
            &trace(frames),
            &GatingPolicy::default(),
            Some(&db),
            &stages,
            &StageCostModel::default(),
        )
        .unwrap();
        assert_eq!(results.len(), 1000);
        let gated = results.iter().filter(|r| r.plan.run_face).count();
        assert_eq!(gated, 200);
        for r in &results {
            assert_eq!(r.plan.run_face, r.frame_index % 5 == 0);
        }
    }

    #[test]
    fn baseline_runs_face_on_every_frame() {
        let (db, stages) = owner_setup(exact_noise());
        let frames = (0..1000).map(|i| frame(i, &["owner"])).collect();
        let policy = GatingPolicy {
            mode: PolicyMode::Baseline,
            emotion_scope: EmotionScope::AllFaces,
            ..GatingPolicy::default()
        };
        let results = run_pipeline_sequential(
            &trace(frames),
            &policy,
            Some(&db),
            &stages,
            &StageCostModel::default(),
        )
        .unwrap();
        assert_eq!(results.iter().filter(|r| r.plan.run_face).count(), 1000);
    }

    #[test]
    fn empty_trace_runs_to_empty_result() {
        let (db, stages) = owner_setup(exact_noise());
        let results = run_pipeline_sequential(
            &trace(vec![]),
            &GatingPolicy::default(),
            Some(&db),
            &stages,
            &StageCostModel::default(),
        )
        .unwrap();
        assert!(results.is_empty());
    }

    #[test]
    fn pipeline_error_carries_earliest_failing_frame() {
        let (_, stages) = owner_setup(exact_noise());
        let frames = (0..12).map(|i| frame(i, &["owner"])).collect();
        let err = run_pipeline_sequential(
            &trace(frames),
            &GatingPolicy::default(),
            None,
            &stages,
            &StageCostModel::default(),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::MissingDatabase { frame_index: 0 }));
    }

    #[test]
    fn owner_only_emotions_are_a_subset_of_all_faces() {
        let (db, stages) = owner_setup(exact_noise());
        let frames: Vec<FrameTruth> = (0..100)
            .map(|i| {
                if i % 2 == 0 {
                    frame(i, &["owner", "intruder"])
                } else {
                    frame(i, &["intruder"])
                }
            })
            .collect();
        let t = trace(frames);
        let owner_only = GatingPolicy::default();
        let all_faces =
            GatingPolicy { emotion_scope: EmotionScope::AllFaces, ..GatingPolicy::default() };
        let cost = StageCostModel::default();
        let narrow = run_pipeline_sequential(&t, &owner_only, Some(&db), &stages, &cost).unwrap();
        let wide = run_pipeline_sequential(&t, &all_faces, Some(&db), &stages, &cost).unwrap();
        for (n, w) in narrow.iter().zip(&wide) {
            let narrow_set: Vec<usize> = n.emotions.iter().map(|(o, _)| *o).collect();
            let wide_set: Vec<usize> = w.emotions.iter().map(|(o, _)| *o).collect();
            assert!(narrow_set.iter().all(|o| wide_set.contains(o)));
            let owner_matched: Vec<usize> = n
                .matches
                .iter()
                .enumerate()
                .filter(|(_, m)| m.is_owner)
                .map(|(o, _)| o)
                .collect();
            assert_eq!(narrow_set, owner_matched);
            if n.plan.run_face {
                assert_eq!(wide_set.len(), n.matches.len());
            }
        }
    }

    #[test]
    fn baseline_cost_dominates_adaptive_on_every_frame() {
        let (db, stages) = owner_setup(NoiseConfig::default());
        let frames: Vec<FrameTruth> = (0..200)
            .map(|i| if i % 3 == 0 { frame(i, &["owner"]) } else { frame(i, &[]) })
            .collect();
        let t = trace(frames);
        let cost = StageCostModel { overhead_ms: 7.5, ..StageCostModel::default() };
        let adaptive =
            run_pipeline_sequential(&t, &GatingPolicy::default(), Some(&db), &stages, &cost)
                .unwrap();
        let baseline_policy = GatingPolicy {
            mode: PolicyMode::Baseline,
            emotion_scope: EmotionScope::AllFaces,
            ..GatingPolicy::default()
        };
        let baseline =
            run_pipeline_sequential(&t, &baseline_policy, Some(&db), &stages, &cost).unwrap();
        for (a, b) in adaptive.iter().zip(&baseline) {
            assert!(b.cost_ms >= a.cost_ms, "frame {}", a.frame_index);
        }
    }

    #[test]
    fn identical_inputs_give_identical_results() {
        let (db, stages) = owner_setup(NoiseConfig::default());
        let frames: Vec<FrameTruth> = (0..50)
            .map(|i| if i % 2 == 0 { frame(i, &["owner"]) } else { frame(i, &["intruder"]) })
            .collect();
        let t = trace(frames);
        let policy = GatingPolicy::default();
        let cost = StageCostModel::default();
        let first = run_pipeline_sequential(&t, &policy, Some(&db), &stages, &cost).unwrap();
        let second = run_pipeline_sequential(&t, &policy, Some(&db), &stages, &cost).unwrap();
        assert_eq!(first, second);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_and_sequential_agree() {
        let (db, stages) = owner_setup(NoiseConfig::default());
        let frames: Vec<FrameTruth> = (0..300)
            .map(|i| match i % 4 {
                0 => frame(i, &["owner"]),
                1 => frame(i, &["intruder"]),
                2 => frame(i, &["owner", "intruder"]),
                _ => frame(i, &[]),
            })
            .collect();
        let t = trace(frames);
        let policy = GatingPolicy::default();
        let cost = StageCostModel::default();
        let parallel = run_pipeline(&t, &policy, Some(&db), &stages, &cost).unwrap();
        let sequential = run_pipeline_sequential(&t, &policy, Some(&db), &stages, &cost).unwrap();
        assert_eq!(parallel, sequential);
    }

    #[test]
    fn policy_validation_names_offending_fields() {
        let policy = GatingPolicy {
            face_period: 0,
            confidence_threshold: 1.5,
            ..GatingPolicy::default()
        };
        let errors = policy.validation_errors();
        assert_eq!(errors.len(), 2);
        assert!(errors[0].contains("face_period"));
        assert!(errors[1].contains("confidence_threshold out of range"));
    }

    #[test]
    fn policy_mode_parses_from_strings() {
        assert_eq!("adaptive".parse::<PolicyMode>().unwrap(), PolicyMode::Adaptive);
        assert_eq!("baseline".parse::<PolicyMode>().unwrap(), PolicyMode::Baseline);
        assert!("hybrid".parse::<PolicyMode>().is_err());
    }
}
