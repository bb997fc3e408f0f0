//! Trace-driven simulator for adaptive gating of multi-stage perception
//! pipelines.
//!
//! A three-stage pipeline (object detection, face matching, emotion
//! analysis) is driven over a ground-truth scenario trace. The detector runs
//! on every frame; under the adaptive policy the face stage runs only every
//! Nth frame and only when a trigger class was detected, and the emotion
//! stage runs only for faces matched as the enrolled owner. The baseline
//! policy runs everything everywhere and serves as the comparison reference.
//!
//! Stages are deterministic mocks over trace ground truth, and stage
//! latencies come from a configurable cost model rather than measurement, so
//! a simulated run is a pure function of `(trace, policy, cost model, noise
//! config, seed)` and full runs complete in milliseconds.
//!
//! Module map:
//!
//! * [`rng`] keyed deterministic random streams and stable hashing
//! * [`model`] traces, frames, detections, emotions
//! * [`embedding`] embedding vectors, cosine matching, database persistence
//! * [`stages`] mock stages, noise model, latency model
//! * [`scheduler`] gating policies, per-frame planning and execution
//! * [`simulator`] scenario generation, full runs, baseline comparison
//! * [`metrics`] ROC/AUC, precision-recall, confusion, windowed accuracy
//! * [`report`] serializable run reports with stable field order
//!
//! The `parallel` feature (on by default) processes frames with rayon;
//! disabling it falls back to a sequential pipeline with identical output.

pub mod embedding;
pub mod metrics;
pub mod model;
pub mod report;
pub mod rng;
pub mod scheduler;
pub mod simulator;
pub mod stages;

pub use embedding::{
    cosine_similarity, DatabaseError, EmbeddingError, EmbeddingVector, MatchResult,
    OwnerDatabase, EMBEDDING_DIM,
};
pub use metrics::{
    accuracy_over_time, auc, auc_pairwise_oracle, average_precision, one_vs_rest_metrics,
    pr_curve, roc_curve, ClassMetrics, ConfusionMatrix, CurvePoint, MetricsError, ScoredSample,
};
pub use model::{
    contains_class, filter_by_confidence, validate_trace, BoundingBox, Detection, Emotion,
    EmotionScores, FrameTruth, GroundFace, GroundObject, ScenarioTrace, TraceViolation,
};
pub use report::{
    ComparisonReport, FaceOutcome, FrameCharges, FrameRecord, SimulationReport, StageInvocations,
};
pub use scheduler::{
    execute_frame, plan_frame, run_pipeline, run_pipeline_sequential, AnnotationEvent,
    AnnotationKind, EmotionScope, ExecutionPlan, FrameResult, GatingPolicy, PipelineError,
    PolicyMode,
};
pub use simulator::{
    compare, generate_trace, load_trace, run_simulation, save_trace, trace_hash,
    InvalidScenario, ScenarioSpec, TraceFileError,
};
pub use stages::{
    mock_detect, mock_embed, mock_emotion, perturb_embedding, synthesize_enrollment,
    IdentityPrototypes, MockStages, NoiseConfig, StageCostModel, StageKind,
};
