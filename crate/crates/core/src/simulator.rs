//! Scenario generation and end-to-end simulation.
//!
//! [`generate_trace`] turns a compact statistical description of a scene
//! into a concrete ground-truth trace; [`run_simulation`] drives the whole
//! pipeline over a trace and aggregates a report; [`compare`] runs the
//! baseline and adaptive policies over the identical trace and derives the
//! headline ratios.
//!
//! Time here is simulated: frame costs come from the cost model and are
//! summed arithmetically, so runs are exactly reproducible and finish in
//! milliseconds regardless of the configured latencies.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::OwnerDatabase;
use crate::model::{
    BoundingBox, Emotion, EmotionScores, FrameTruth, GroundFace, GroundObject, ScenarioTrace,
    TRACE_FORMAT_VERSION,
};
use crate::report::{
    ComparisonReport, FaceOutcome, FrameRecord, SimulationReport, StageInvocations,
};
use crate::rng::{fnv1a64, KeyedRng, StreamKind};
use crate::scheduler::{
    run_pipeline, EmotionScope, FrameResult, GatingPolicy, PipelineError, PolicyMode,
};
use crate::stages::{IdentityPrototypes, MockStages, NoiseConfig, StageCostModel};

/// Scene width and height, in pixels, for generated boxes.
const CANVAS_W: f64 = 640.0;
const CANVAS_H: f64 = 480.0;

/// Footprint constants reported as memory proxies, per policy mode.
const BASELINE_FOOTPRINT_MB: f64 = 520.0;
const ADAPTIVE_FOOTPRINT_MB: f64 = 450.0;

/// Emitted in every comparison report alongside the derived ratios.
pub const CALIBRATION_NOTE: &str = "With stage latencies 40/120/80 ms and face period 5 on an \
    all-owner scene, overhead_ms = 236 calibrates the baseline to 476 ms/frame (2.1 FPS), while \
    a 179 ms/frame adaptive average would require overhead_ms = 99; no single overhead_ms \
    reproduces both reference rows at once. module_compute_reduction_pct excludes overhead by \
    definition and is unaffected by this calibration choice.";

/// Statistical description of a scene to generate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub frame_count: u64,
    /// Probability a frame contains a person (with a face).
    pub person_presence_rate: f64,
    /// Probability a person-frame's face is the owner rather than an
    /// intruder.
    pub owner_fraction: f64,
    /// Identity tag used for owner faces. Enroll the database under the
    /// same name.
    pub owner_identity: String,
    /// Identity tags drawn uniformly for non-owner faces.
    pub intruder_names: Vec<String>,
    /// True-emotion distribution for generated faces, summing to one.
    pub emotion_distribution: BTreeMap<Emotion, f64>,
    /// Additional `(class, per-frame probability)` background objects.
    pub extra_object_classes: Vec<(String, f64)>,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            frame_count: 1000,
            person_presence_rate: 0.5,
            owner_fraction: 0.5,
            owner_identity: "owner".to_string(),
            intruder_names: vec!["intruder".to_string()],
            emotion_distribution: Emotion::ALL.into_iter().map(|e| (e, 1.0 / 6.0)).collect(),
            extra_object_classes: Vec::new(),
            seed: 42,
        }
    }
}

impl ScenarioSpec {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.frame_count == 0 {
            errors.push("frame_count must be at least 1".to_string());
        }
        for (field, value) in [
            ("person_presence_rate", self.person_presence_rate),
            ("owner_fraction", self.owner_fraction),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                errors.push(format!("{field} out of range [0, 1]: {value}"));
            }
        }
        if self.owner_identity.is_empty() {
            errors.push("owner_identity must not be empty".to_string());
        }
        if self.owner_fraction < 1.0
            && self.person_presence_rate > 0.0
            && self.intruder_names.is_empty()
        {
            errors.push(
                "intruder_names must not be empty when owner_fraction < 1".to_string(),
            );
        }
        for name in &self.intruder_names {
            if name.is_empty() {
                errors.push("intruder_names must not contain empty strings".to_string());
            } else if *name == self.owner_identity {
                errors.push(format!(
                    "intruder_names must not contain the owner identity: {name}"
                ));
            }
        }
        for (emotion, weight) in &self.emotion_distribution {
            if !weight.is_finite() || *weight < 0.0 {
                errors.push(format!(
                    "emotion_distribution weight for {emotion} must be finite and non-negative: \
                     {weight}"
                ));
            }
        }
        let sum: f64 = self.emotion_distribution.values().sum();
        if (sum - 1.0).abs() > 1e-9 {
            errors.push(format!("emotion_distribution must sum to 1, got {sum}"));
        }
        for (class, rate) in &self.extra_object_classes {
            if class.is_empty() {
                errors.push("extra_object_classes must not contain empty class names".to_string());
            } else if class == "person" {
                errors.push(
                    "extra_object_classes must not include person (person objects are governed \
                     by person_presence_rate)"
                        .to_string(),
                );
            }
            if !rate.is_finite() || !(0.0..=1.0).contains(rate) {
                errors.push(format!("extra_object_classes rate for {class} out of range [0, 1]: {rate}"));
            }
        }
        errors
    }
}

#[derive(Debug, Error)]
#[error("invalid scenario spec: {}", errors.join("; "))]
pub struct InvalidScenario {
    pub errors: Vec<String>,
}

#[derive(Debug, Error)]
pub enum TraceFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace does not parse: {0}")]
    Parse(#[from] serde_json::Error),
}

fn sample_emotion(distribution: &BTreeMap<Emotion, f64>, rng: &mut KeyedRng) -> Emotion {
    let draw = rng.next_f64();
    let mut cumulative = 0.0;
    let mut last_nonzero = Emotion::Neutral;
    for (&emotion, &weight) in distribution {
        if weight > 0.0 {
            last_nonzero = emotion;
        }
        cumulative += weight;
        if draw < cumulative {
            return emotion;
        }
    }
    last_nonzero
}

/// Generate a ground-truth trace from a scenario description.
///
/// Deterministic per seed: each frame draws from its own keyed stream in a
/// fixed order (person gate, person confidence and box, identity, emotion,
/// then extra objects in their configured order), so the same spec always
/// yields the same trace.
pub fn generate_trace(spec: &ScenarioSpec) -> Result<ScenarioTrace, InvalidScenario> {
    let errors = spec.validation_errors();
    if !errors.is_empty() {
        return Err(InvalidScenario { errors });
    }

    let frames = (0..spec.frame_count)
        .map(|index| {
            let mut rng = KeyedRng::for_key(spec.seed, StreamKind::TraceGen, index, 0);
            let mut objects = Vec::new();
            let mut faces = Vec::new();

            if rng.next_f64() < spec.person_presence_rate {
                let confidence = rng.uniform(0.7, 0.98);
                let w = rng.uniform(80.0, 200.0);
                let h = 1.5 * w;
                let x = rng.uniform(0.0, CANVAS_W - w);
                let y = rng.uniform(0.0, CANVAS_H - h);
                objects.push(GroundObject {
                    class: "person".to_string(),
                    confidence,
                    bbox: BoundingBox { x, y, w, h },
                });

                let identity = if rng.next_f64() < spec.owner_fraction {
                    spec.owner_identity.clone()
                } else {
                    let pick = ((rng.next_f64() * spec.intruder_names.len() as f64) as usize)
                        .min(spec.intruder_names.len() - 1);
                    spec.intruder_names[pick].clone()
                };
                let emotion = sample_emotion(&spec.emotion_distribution, &mut rng);
                faces.push(GroundFace {
                    identity,
                    emotion,
                    bbox: BoundingBox {
                        x: x + 0.25 * w,
                        y: y + 0.08 * h,
                        w: 0.5 * w,
                        h: 0.35 * h,
                    },
                });
            }

            for (class, rate) in &spec.extra_object_classes {
                if rng.next_f64() < *rate {
                    let confidence = rng.uniform(0.3, 0.95);
                    let w = rng.uniform(20.0, 120.0);
                    let h = rng.uniform(20.0, 120.0);
                    let x = rng.uniform(0.0, CANVAS_W - w);
                    let y = rng.uniform(0.0, CANVAS_H - h);
                    objects.push(GroundObject {
                        class: class.clone(),
                        confidence,
                        bbox: BoundingBox { x, y, w, h },
                    });
                }
            }

            FrameTruth { index, objects, faces }
        })
        .collect();

    Ok(ScenarioTrace { version: TRACE_FORMAT_VERSION, seed: spec.seed, frames })
}

/// FNV-1a 64 fingerprint of a trace's compact JSON form, as 16 hex digits.
pub fn trace_hash(trace: &ScenarioTrace) -> String {
    let json = serde_json::to_string(trace).expect("trace serializes");
    format!("{:016x}", fnv1a64(json.as_bytes()))
}

/// Write a trace as pretty JSON with a trailing newline.
pub fn save_trace(trace: &ScenarioTrace, path: impl AsRef<Path>) -> Result<(), TraceFileError> {
    let mut out = serde_json::to_string_pretty(trace)?;
    out.push('\n');
    std::fs::write(path, out)?;
    Ok(())
}

/// Read a trace back. Structural validation is the caller's job (see
/// [`crate::model::validate_trace`]); this only parses.
pub fn load_trace(path: impl AsRef<Path>) -> Result<ScenarioTrace, TraceFileError> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn footprint_proxy(mode: PolicyMode) -> f64 {
    match mode {
        PolicyMode::Baseline => BASELINE_FOOTPRINT_MB,
        PolicyMode::Adaptive => ADAPTIVE_FOOTPRINT_MB,
    }
}

fn build_report(
    trace: &ScenarioTrace,
    policy: &GatingPolicy,
    db: &OwnerDatabase,
    cost: &StageCostModel,
    noise: &NoiseConfig,
    results: &[FrameResult],
) -> SimulationReport {
    let mut total_time_ms = 0.0;
    let mut module_time_ms = 0.0;
    let mut invocations = StageInvocations::default();
    let mut peak_stage_concurrency = 0u32;
    let mut face_outcomes = Vec::new();
    let mut frame_log = Vec::with_capacity(results.len());

    for (frame, result) in trace.frames.iter().zip(results) {
        total_time_ms += result.cost_ms;
        module_time_ms += cost.detect_ms
            + if result.plan.run_face { cost.face_ms } else { 0.0 }
            + result.emotions.len() as f64 * cost.emotion_ms;

        invocations.detect += 1;
        let mut active = 1u32;
        if result.plan.run_face {
            invocations.face += 1;
            active += 1;
        }
        if !result.emotions.is_empty() {
            invocations.emotion += result.emotions.len() as u64;
            active += 1;
        }
        peak_stage_concurrency = peak_stage_concurrency.max(active);

        if result.plan.run_face {
            for (ordinal, (face, matched)) in
                frame.faces.iter().zip(&result.matches).enumerate()
            {
                let scores = result
                    .emotions
                    .iter()
                    .find(|(o, _)| *o == ordinal)
                    .map(|(_, s)| s.clone());
                face_outcomes.push(FaceOutcome {
                    frame_index: result.frame_index,
                    face_ordinal: ordinal,
                    true_identity: face.identity.clone(),
                    is_owner_truth: face.identity == db.identity(),
                    similarity: matched.similarity,
                    predicted_owner: matched.is_owner,
                    true_emotion: face.emotion,
                    predicted_emotion: scores.as_ref().map(EmotionScores::dominant),
                    emotion_scores: scores,
                });
            }
        }

        frame_log.push(FrameRecord::from_result(result, cost));
    }

    let frames = results.len() as u64;
    let average_fps =
        if total_time_ms > 0.0 { 1000.0 * frames as f64 / total_time_ms } else { 0.0 };
    let avg_cost_per_frame_ms =
        if frames > 0 { total_time_ms / frames as f64 } else { 0.0 };
    let cpu_busy_pct_proxy =
        if total_time_ms > 0.0 { 100.0 * module_time_ms / total_time_ms } else { 0.0 };

    SimulationReport {
        policy: policy.clone(),
        frames,
        total_time_ms,
        average_fps,
        avg_cost_per_frame_ms,
        module_time_ms,
        stage_invocations: invocations,
        peak_stage_concurrency,
        cpu_busy_pct_proxy,
        memory_footprint_mb_proxy: footprint_proxy(policy.mode),
        trace_hash: trace_hash(trace),
        seed: noise.seed,
        cost_model: cost.clone(),
        noise: noise.clone(),
        face_outcomes,
        frame_log,
    }
}

/// Run one policy over a trace and aggregate a report.
///
/// Identity prototypes are built from the union of the database identity
/// (pinned, unsalted) and every identity appearing in the trace, so probe
/// synthesis is consistent with enrollment under a shared seed.
pub fn run_simulation(
    trace: &ScenarioTrace,
    policy: &GatingPolicy,
    db: &OwnerDatabase,
    cost: &StageCostModel,
    noise: &NoiseConfig,
) -> Result<SimulationReport, PipelineError> {
    let identities: BTreeSet<&str> = trace
        .frames
        .iter()
        .flat_map(|f| f.faces.iter().map(|face| face.identity.as_str()))
        .collect();
    let prototypes = IdentityPrototypes::build(noise.seed, db.identity(), identities);
    let stages = MockStages::new(prototypes, noise.clone());
    let results = run_pipeline(trace, policy, Some(db), &stages, cost)?;
    Ok(build_report(trace, policy, db, cost, noise, &results))
}

/// Run baseline and adaptive policies over the identical trace and derive
/// the comparison ratios.
///
/// The baseline run forces `mode = baseline` and `emotion_scope =
/// all_faces` (every stage, every frame, every face); the adaptive run
/// forces `mode = adaptive` and keeps the rest of the supplied policy. With
/// the `parallel` feature the two simulations execute concurrently.
pub fn compare(
    trace: &ScenarioTrace,
    db: &OwnerDatabase,
    cost: &StageCostModel,
    noise: &NoiseConfig,
    adaptive_policy: &GatingPolicy,
) -> Result<ComparisonReport, PipelineError> {
    let baseline_policy = GatingPolicy {
        mode: PolicyMode::Baseline,
        emotion_scope: EmotionScope::AllFaces,
        ..adaptive_policy.clone()
    };
    let adaptive_policy =
        GatingPolicy { mode: PolicyMode::Adaptive, ..adaptive_policy.clone() };

    #[cfg(feature = "parallel")]
    let (baseline, adaptive) = rayon::join(
        || run_simulation(trace, &baseline_policy, db, cost, noise),
        || run_simulation(trace, &adaptive_policy, db, cost, noise),
    );
    #[cfg(not(feature = "parallel"))]
    let (baseline, adaptive) = (
        run_simulation(trace, &baseline_policy, db, cost, noise),
        run_simulation(trace, &adaptive_policy, db, cost, noise),
    );
    let (baseline, adaptive) = (baseline?, adaptive?);

    let fps_ratio = if baseline.average_fps > 0.0 {
        adaptive.average_fps / baseline.average_fps
    } else {
        0.0
    };
    let time_per_frame_reduction_pct = if baseline.avg_cost_per_frame_ms > 0.0 {
        100.0 * (1.0 - adaptive.avg_cost_per_frame_ms / baseline.avg_cost_per_frame_ms)
    } else {
        0.0
    };
    let module_compute_reduction_pct = if baseline.module_time_ms > 0.0 {
        100.0 * (1.0 - adaptive.module_time_ms / baseline.module_time_ms)
    } else {
        0.0
    };

    Ok(ComparisonReport {
        baseline,
        adaptive,
        fps_ratio,
        time_per_frame_reduction_pct,
        module_compute_reduction_pct,
        calibration_note: CALIBRATION_NOTE.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_trace;
    use crate::stages::synthesize_enrollment;

    fn all_owner_spec(frame_count: u64) -> ScenarioSpec {
        ScenarioSpec {
            frame_count,
            person_presence_rate: 1.0,
            owner_fraction: 1.0,
            ..ScenarioSpec::default()
        }
    }

    fn enrolled_db(seed: u64) -> OwnerDatabase {
        OwnerDatabase::enroll("owner", synthesize_enrollment(seed, "owner", 20, 0.05)).unwrap()
    }

    #[test]
    fn degenerate_rates_generate_degenerate_scenes() {
        let all = generate_trace(&all_owner_spec(100)).unwrap();
        assert_eq!(all.frames.len(), 100);
        for frame in &all.frames {
            assert_eq!(frame.faces.len(), 1);
            assert_eq!(frame.faces[0].identity, "owner");
            assert_eq!(frame.objects.len(), 1);
            assert_eq!(frame.objects[0].class, "person");
        }

        let empty = generate_trace(&ScenarioSpec {
            person_presence_rate: 0.0,
            frame_count: 100,
            ..ScenarioSpec::default()
        })
        .unwrap();
        assert!(empty.frames.iter().all(|f| f.faces.is_empty() && f.objects.is_empty()));
    }

    #[test]
    fn generated_traces_validate_cleanly() {
        let spec = ScenarioSpec {
            frame_count: 300,
            extra_object_classes: vec![("cup".to_string(), 0.3), ("laptop".to_string(), 0.1)],
            ..ScenarioSpec::default()
        };
        let trace = generate_trace(&spec).unwrap();
        assert!(validate_trace(&trace).is_empty());
    }

    #[test]
    fn person_frame_count_concentrates_around_rate() {
        let spec = ScenarioSpec { frame_count: 10_000, ..ScenarioSpec::default() };
        let trace = generate_trace(&spec).unwrap();
        let persons = trace.frames.iter().filter(|f| !f.faces.is_empty()).count();
        assert!((4900..=5100).contains(&persons), "person frames: {persons}");
    }

    #[test]
    fn invalid_spec_lists_every_violated_bound() {
        let spec = ScenarioSpec {
            person_presence_rate: 1.5,
            owner_fraction: -0.1,
            ..ScenarioSpec::default()
        };
        let err = generate_trace(&spec).unwrap_err();
        assert_eq!(err.errors.len(), 2);
        assert!(err.errors[0].contains("person_presence_rate out of range"));
        assert!(err.to_string().contains("owner_fraction out of range"));
    }

    #[test]
    fn intruders_required_when_owner_fraction_below_one() {
        let spec = ScenarioSpec {
            owner_fraction: 0.5,
            intruder_names: vec![],
            ..ScenarioSpec::default()
        };
        let err = generate_trace(&spec).unwrap_err();
        assert!(err.errors[0].contains("intruder_names must not be empty"));
    }

    #[test]
    fn trace_generation_is_deterministic() {
        let spec = ScenarioSpec::default();
        assert_eq!(generate_trace(&spec).unwrap(), generate_trace(&spec).unwrap());
        let other_seed = ScenarioSpec { seed: 43, ..spec.clone() };
        assert_ne!(generate_trace(&other_seed).unwrap(), generate_trace(&spec).unwrap());
    }

    #[test]
    fn trace_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.trace.json");
        let trace = generate_trace(&all_owner_spec(25)).unwrap();
        save_trace(&trace, &path).unwrap();
        let back = load_trace(&path).unwrap();
        assert_eq!(back, trace);
        assert_eq!(trace_hash(&back), trace_hash(&trace));
    }

    #[test]
    fn baseline_all_owner_run_hits_reference_throughput() {
        let trace = generate_trace(&all_owner_spec(1000)).unwrap();
        let db = enrolled_db(42);
        let policy = GatingPolicy {
            mode: PolicyMode::Baseline,
            emotion_scope: EmotionScope::AllFaces,
            ..GatingPolicy::default()
        };
        let report = run_simulation(
            &trace,
            &policy,
            &db,
            &StageCostModel::default(),
            &NoiseConfig::default(),
        )
        .unwrap();
        assert_eq!(report.avg_cost_per_frame_ms, 240.0);
        assert!((report.average_fps - 4.1667).abs() < 1e-3);
        assert_eq!(report.stage_invocations.face, 1000);
        assert_eq!(report.stage_invocations.emotion, 1000);
        assert_eq!(report.peak_stage_concurrency, 3);
        assert_eq!(report.memory_footprint_mb_proxy, 520.0);
    }

    #[test]
    fn adaptive_all_owner_run_hits_reference_throughput() {
        let trace = generate_trace(&all_owner_spec(1000)).unwrap();
        let db = enrolled_db(42);
        let report = run_simulation(
            &trace,
            &GatingPolicy::default(),
            &db,
            &StageCostModel::default(),
            &NoiseConfig::default(),
        )
        .unwrap();
        assert_eq!(report.avg_cost_per_frame_ms, 80.0);
        assert!((report.average_fps - 12.5).abs() < 1e-9);
        assert_eq!(report.stage_invocations.face, 200);
        assert_eq!(report.stage_invocations.emotion, 200);
        assert_eq!(report.memory_footprint_mb_proxy, 450.0);
    }

    #[test]
    fn empty_scene_costs_detector_only() {
        let spec = ScenarioSpec {
            person_presence_rate: 0.0,
            frame_count: 200,
            ..ScenarioSpec::default()
        };
        let trace = generate_trace(&spec).unwrap();
        let db = enrolled_db(42);
        let report = run_simulation(
            &trace,
            &GatingPolicy::default(),
            &db,
            &StageCostModel::default(),
            &NoiseConfig::default(),
        )
        .unwrap();
        assert_eq!(report.avg_cost_per_frame_ms, 40.0);
        assert_eq!(report.stage_invocations.face, 0);
        assert_eq!(report.peak_stage_concurrency, 1);
    }

    #[test]
    fn comparison_reproduces_reference_ratios() {
        let trace = generate_trace(&all_owner_spec(1000)).unwrap();
        let db = enrolled_db(42);
        let report = compare(
            &trace,
            &db,
            &StageCostModel::default(),
            &NoiseConfig::default(),
            &GatingPolicy::default(),
        )
        .unwrap();
        assert!((report.fps_ratio - 3.0).abs() < 0.05);
        assert!((report.module_compute_reduction_pct - 66.7).abs() < 0.5);
        assert!((report.time_per_frame_reduction_pct - 66.7).abs() < 0.5);
        assert_eq!(report.baseline.trace_hash, report.adaptive.trace_hash);
        assert!(report.calibration_note.contains("179"));
    }

    #[test]
    fn overhead_calibration_pins_the_baseline_row() {
        let trace = generate_trace(&all_owner_spec(1000)).unwrap();
        let db = enrolled_db(42);
        let cost = StageCostModel { overhead_ms: 236.0, ..StageCostModel::default() };
        let report =
            compare(&trace, &db, &cost, &NoiseConfig::default(), &GatingPolicy::default())
                .unwrap();
        assert_eq!(report.baseline.avg_cost_per_frame_ms, 476.0);
        let rounded_fps = (report.baseline.average_fps * 10.0).round() / 10.0;
        assert!((rounded_fps - 2.1).abs() < 1e-12);
    }

    #[test]
    fn module_reduction_ignores_overhead() {
        let trace = generate_trace(&all_owner_spec(400)).unwrap();
        let db = enrolled_db(42);
        let noise = NoiseConfig::default();
        let policy = GatingPolicy::default();
        let with_zero =
            compare(&trace, &db, &StageCostModel::default(), &noise, &policy).unwrap();
        let with_big = compare(
            &trace,
            &db,
            &StageCostModel { overhead_ms: 236.0, ..StageCostModel::default() },
            &noise,
            &policy,
        )
        .unwrap();
        assert!(
            (with_zero.module_compute_reduction_pct - with_big.module_compute_reduction_pct)
                .abs()
                < 1e-9
        );
    }

    #[test]
    fn reports_are_self_consistent() {
        let trace = generate_trace(&ScenarioSpec::default()).unwrap();
        let db = enrolled_db(42);
        let report = run_simulation(
            &trace,
            &GatingPolicy::default(),
            &db,
            &StageCostModel::default(),
            &NoiseConfig::default(),
        )
        .unwrap();
        let product = report.average_fps * report.total_time_ms;
        let expected = 1000.0 * report.frames as f64;
        assert!((product - expected).abs() / expected < 1e-6);
        assert_eq!(report.frames as usize, report.frame_log.len());
        let logged_total: f64 = report.frame_log.iter().map(|r| r.cost_ms).sum();
        assert!((logged_total - report.total_time_ms).abs() < 1e-9);
    }

    #[test]
    fn sample_emotion_respects_point_mass() {
        let mut distribution: BTreeMap<Emotion, f64> =
            Emotion::ALL.into_iter().map(|e| (e, 0.0)).collect();
        distribution.insert(Emotion::Surprise, 1.0);
        let mut rng = KeyedRng::from_seed(5);
        for _ in 0..50 {
            assert_eq!(sample_emotion(&distribution, &mut rng), Emotion::Surprise);
        }
    }
}
