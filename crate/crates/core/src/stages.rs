//! Mock perception stages and their latency model.
//!
//! The simulator never runs real vision models. Each stage is a cheap
//! deterministic stand-in that reads ground truth and corrupts it with keyed
//! noise:
//!
//! * detection passes the true objects through with confidence jitter,
//! * face embedding perturbs a per-identity prototype vector,
//! * emotion classification returns the true label with configurable
//!   accuracy and a plausible score distribution.
//!
//! Wall-clock latency is not measured; it is charged from a
//! [`StageCostModel`], so a simulated run's timing is a pure function of
//! which stages executed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, EmbeddingVector, EMBEDDING_DIM};
use crate::model::{Detection, Emotion, EmotionScores, FrameTruth, GroundFace};
use crate::rng::{fnv1a64, KeyedRng, StreamKind};

/// Prototypes for distinct identities must stay below this cosine
/// similarity.
pub const PROTOTYPE_SEPARATION_LIMIT: f64 = 0.2;

/// Share of probability mass given to the winning emotion class.
const EMOTION_DOMINANT_MASS_MIN: f64 = 0.6;
const EMOTION_DOMINANT_MASS_SPAN: f64 = 0.3;

/// The three pipeline stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Detect,
    Face,
    Emotion,
}

impl StageKind {
    pub const ALL: [StageKind; 3] = [StageKind::Detect, StageKind::Face, StageKind::Emotion];

    pub fn name(self) -> &'static str {
        match self {
            StageKind::Detect => "detect",
            StageKind::Face => "face",
            StageKind::Emotion => "emotion",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown stage name: {0}")]
pub struct UnknownStage(String);

impl FromStr for StageKind {
    type Err = UnknownStage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| UnknownStage(s.to_string()))
    }
}

/// Simulated latency charged per stage invocation, in milliseconds.
///
/// `overhead_ms` is a fixed per-frame charge covering everything outside the
/// perception stages (capture, preprocessing, bookkeeping).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageCostModel {
    pub detect_ms: f64,
    pub face_ms: f64,
    pub emotion_ms: f64,
    pub overhead_ms: f64,
}

impl Default for StageCostModel {
    fn default() -> Self {
        Self { detect_ms: 40.0, face_ms: 120.0, emotion_ms: 80.0, overhead_ms: 0.0 }
    }
}

impl StageCostModel {
    pub fn stage_cost(&self, kind: StageKind) -> f64 {
        match kind {
            StageKind::Detect => self.detect_ms,
            StageKind::Face => self.face_ms,
            StageKind::Emotion => self.emotion_ms,
        }
    }

    /// Cost of one frame: overhead plus detection, plus the face stage when
    /// it ran (charged once per frame regardless of face count), plus the
    /// emotion stage once per face scored.
    pub fn frame_cost(&self, face_ran: bool, emotion_count: usize) -> f64 {
        self.overhead_ms
            + self.detect_ms
            + if face_ran { self.face_ms } else { 0.0 }
            + emotion_count as f64 * self.emotion_ms
    }

    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        for (field, value) in [
            ("detect_ms", self.detect_ms),
            ("face_ms", self.face_ms),
            ("emotion_ms", self.emotion_ms),
            ("overhead_ms", self.overhead_ms),
        ] {
            if !value.is_finite() || value < 0.0 {
                errors.push(format!("{field} must be finite and non-negative: {value}"));
            }
        }
        errors
    }
}

/// Noise parameters for the mock stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Scale of the gaussian perturbation applied to prototype embeddings,
    /// expressed as the expected L2 norm of the whole 128-dimensional noise
    /// vector. Per-component standard deviation is `sigma / sqrt(128)`, so
    /// at the default 0.1 a probe keeps a mean cosine similarity of about
    /// 0.995 to its prototype.
    pub embedding_sigma: f64,
    /// Probability the emotion stage scores the true class highest.
    pub emotion_accuracy: f64,
    /// Standard deviation of additive noise on detector confidences.
    pub confidence_jitter: f64,
    /// Seed for every keyed noise stream.
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { embedding_sigma: 0.1, emotion_accuracy: 0.75, confidence_jitter: 0.05, seed: 42 }
    }
}

impl NoiseConfig {
    pub fn validation_errors(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if !self.embedding_sigma.is_finite() || self.embedding_sigma < 0.0 {
            errors.push(format!(
                "embedding_sigma must be finite and non-negative: {}",
                self.embedding_sigma
            ));
        }
        if !self.emotion_accuracy.is_finite() || !(0.0..=1.0).contains(&self.emotion_accuracy) {
            errors.push(format!(
                "emotion_accuracy out of range [0, 1]: {}",
                self.emotion_accuracy
            ));
        }
        if !self.confidence_jitter.is_finite() || self.confidence_jitter < 0.0 {
            errors.push(format!(
                "confidence_jitter must be finite and non-negative: {}",
                self.confidence_jitter
            ));
        }
        errors
    }
}

/// Perturb an embedding with gaussian noise of expected total norm `sigma`,
/// then rescale to unit norm. `sigma == 0` returns the input unchanged.
pub fn perturb_embedding(
    embedding: &EmbeddingVector,
    sigma: f64,
    rng: &mut KeyedRng,
) -> EmbeddingVector {
    if sigma == 0.0 {
        return embedding.clone();
    }
    let per_component = sigma / (EMBEDDING_DIM as f64).sqrt();
    let components = embedding
        .components()
        .iter()
        .map(|&c| c + per_component * rng.next_gaussian())
        .collect();
    EmbeddingVector::unit(components).expect("perturbed embedding has nonzero norm")
}

/// Deterministic unit-norm prototype embeddings, one per identity.
///
/// Each identity's prototype is drawn from a stream keyed by the identity's
/// content hash, so the same `(seed, identity)` pair always yields the same
/// vector no matter which other identities exist. When a freshly drawn
/// prototype lands too close to one already placed, the draw is retried with
/// a bumped salt; the `pinned` identity is placed first and never salted, so
/// it matches what enrollment produced for the same seed.
#[derive(Debug, Clone)]
pub struct IdentityPrototypes {
    seed: u64,
    prototypes: BTreeMap<String, EmbeddingVector>,
}

impl IdentityPrototypes {
    fn candidate(seed: u64, identity: &str, salt: u64) -> EmbeddingVector {
        let mut rng =
            KeyedRng::for_key(seed, StreamKind::Prototype, fnv1a64(identity.as_bytes()), salt);
        let components = (0..EMBEDDING_DIM).map(|_| rng.next_gaussian()).collect();
        EmbeddingVector::unit(components).expect("gaussian prototype has nonzero norm")
    }

    /// The unsalted prototype for an identity. Enrollment synthesis uses
    /// this directly, which is what keeps an enrolled database consistent
    /// with a simulation run under the same seed.
    pub fn base_prototype(seed: u64, identity: &str) -> EmbeddingVector {
        Self::candidate(seed, identity, 0)
    }

    /// Place prototypes for `pinned` plus every identity in `others`.
    ///
    /// `pinned` (the enrolled identity) keeps its unsalted prototype;
    /// remaining identities are placed in sorted order and re-drawn until
    /// every pair is separated below [`PROTOTYPE_SEPARATION_LIMIT`].
    pub fn build<I, S>(seed: u64, pinned: &str, others: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut prototypes = BTreeMap::new();
        prototypes.insert(pinned.to_string(), Self::base_prototype(seed, pinned));
        let names: BTreeSet<String> = others
            .into_iter()
            .map(|s| s.as_ref().to_string())
            .filter(|name| name != pinned)
            .collect();
        for name in names {
            let mut salt = 0;
            let placed = loop {
                let candidate = Self::candidate(seed, &name, salt);
                let separated = prototypes
                    .values()
                    .all(|p| cosine_similarity(&candidate, p) < PROTOTYPE_SEPARATION_LIMIT);
                if separated {
                    break candidate;
                }
                salt += 1;
                assert!(salt < 10_000, "cannot separate a prototype for {name}");
            };
            prototypes.insert(name, placed);
        }
        Self { seed, prototypes }
    }

    /// Prototype for an identity. Identities never passed to [`build`]
    /// fall back to their unsalted prototype.
    ///
    /// [`build`]: IdentityPrototypes::build
    pub fn prototype_for(&self, identity: &str) -> EmbeddingVector {
        self.prototypes
            .get(identity)
            .cloned()
            .unwrap_or_else(|| Self::base_prototype(self.seed, identity))
    }

    pub fn identities(&self) -> impl Iterator<Item = &str> {
        self.prototypes.keys().map(String::as_str)
    }
}

/// Mock object detector: ground-truth objects with jittered confidences.
///
/// Boxes and class labels pass through unchanged; each confidence gains
/// gaussian noise of standard deviation `confidence_jitter` and is clamped
/// back into `[0, 1]`. Zero jitter reproduces the truth exactly.
pub fn mock_detect(frame: &FrameTruth, noise: &NoiseConfig) -> Vec<Detection> {
    frame
        .objects
        .iter()
        .enumerate()
        .map(|(ordinal, object)| {
            let confidence = if noise.confidence_jitter == 0.0 {
                object.confidence
            } else {
                let mut rng =
                    KeyedRng::for_key(noise.seed, StreamKind::Detect, frame.index, ordinal as u64);
                (object.confidence + noise.confidence_jitter * rng.next_gaussian()).clamp(0.0, 1.0)
            };
            Detection { class: object.class.clone(), confidence, bbox: object.bbox }
        })
        .collect()
}

/// Mock face embedder: the identity's prototype plus keyed noise.
pub fn mock_embed(
    face: &GroundFace,
    frame_index: u64,
    face_ordinal: usize,
    prototypes: &IdentityPrototypes,
    noise: &NoiseConfig,
) -> EmbeddingVector {
    let prototype = prototypes.prototype_for(&face.identity);
    let mut rng =
        KeyedRng::for_key(noise.seed, StreamKind::Embed, frame_index, face_ordinal as u64);
    perturb_embedding(&prototype, noise.embedding_sigma, &mut rng)
}

/// Mock emotion classifier.
///
/// With probability `emotion_accuracy` the true class wins; otherwise one of
/// the five other classes is picked uniformly. The winner receives a mass
/// drawn from `[0.6, 0.9)` and the rest is split evenly, so the winner is
/// always the strict argmax.
pub fn mock_emotion(
    face: &GroundFace,
    frame_index: u64,
    face_ordinal: usize,
    noise: &NoiseConfig,
) -> EmotionScores {
    let mut rng =
        KeyedRng::for_key(noise.seed, StreamKind::Emotion, frame_index, face_ordinal as u64);
    let dominant = if rng.next_f64() < noise.emotion_accuracy {
        face.emotion
    } else {
        let others: Vec<Emotion> =
            Emotion::ALL.into_iter().filter(|e| *e != face.emotion).collect();
        let pick = ((rng.next_f64() * others.len() as f64) as usize).min(others.len() - 1);
        others[pick]
    };
    let mass = EMOTION_DOMINANT_MASS_MIN + EMOTION_DOMINANT_MASS_SPAN * rng.next_f64();
    let rest = (1.0 - mass) / 5.0;
    let mut scores = [rest; 6];
    scores[dominant.index()] = mass;
    EmotionScores::new(scores).expect("mock emotion scores form a distribution")
}

/// Synthetic enrollment set: `count` perturbations of the identity's
/// unsalted prototype at noise scale `sigma`.
pub fn synthesize_enrollment(
    seed: u64,
    identity: &str,
    count: usize,
    sigma: f64,
) -> Vec<EmbeddingVector> {
    let prototype = IdentityPrototypes::base_prototype(seed, identity);
    let identity_key = fnv1a64(identity.as_bytes());
    (0..count)
        .map(|i| {
            let mut rng = KeyedRng::for_key(seed, StreamKind::Enroll, identity_key, i as u64);
            perturb_embedding(&prototype, sigma, &mut rng)
        })
        .collect()
}

/// Prototype table and noise parameters bundled for the scheduler.
#[derive(Debug, Clone)]
pub struct MockStages {
    prototypes: IdentityPrototypes,
    noise: NoiseConfig,
}

impl MockStages {
    pub fn new(prototypes: IdentityPrototypes, noise: NoiseConfig) -> Self {
        Self { prototypes, noise }
    }

    pub fn noise(&self) -> &NoiseConfig {
        &self.noise
    }

    pub fn prototypes(&self) -> &IdentityPrototypes {
        &self.prototypes
    }

    pub fn detect(&self, frame: &FrameTruth) -> Vec<Detection> {
        mock_detect(frame, &self.noise)
    }

    pub fn embed(&self, face: &GroundFace, frame_index: u64, face_ordinal: usize) -> EmbeddingVector {
        mock_embed(face, frame_index, face_ordinal, &self.prototypes, &self.noise)
    }

    pub fn emotion(&self, face: &GroundFace, frame_index: u64, face_ordinal: usize) -> EmotionScores {
        mock_emotion(face, frame_index, face_ordinal, &self.noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundingBox, GroundObject};

    fn face(identity: &str, emotion: Emotion) -> GroundFace {
        GroundFace {
            identity: identity.into(),
            emotion,
            bbox: BoundingBox { x: 0.0, y: 0.0, w: 64.0, h: 64.0 },
        }
    }

    fn frame_with_objects(confidences: &[f64]) -> FrameTruth {
        FrameTruth {
            index: 0,
            objects: confidences
                .iter()
                .map(|&confidence| GroundObject {
                    class: "person".into(),
                    confidence,
                    bbox: BoundingBox { x: 0.0, y: 0.0, w: 10.0, h: 10.0 },
                })
                .collect(),
            faces: vec![],
        }
    }

    #[test]
    fn zero_jitter_detection_is_exact_passthrough() {
        let frame = frame_with_objects(&[0.9, 0.51, 0.02]);
        let noise = NoiseConfig { confidence_jitter: 0.0, ..NoiseConfig::default() };
        let detections = mock_detect(&frame, &noise);
        let confidences: Vec<f64> = detections.iter().map(|d| d.confidence).collect();
        assert_eq!(confidences, vec![0.9, 0.51, 0.02]);
    }

    #[test]
    fn jittered_confidences_stay_in_unit_interval() {
        let frame = frame_with_objects(&[0.0, 0.5, 1.0]);
        let noise = NoiseConfig { confidence_jitter: 5.0, ..NoiseConfig::default() };
        for index in 0..200 {
            let frame = FrameTruth { index, ..frame.clone() };
            for d in mock_detect(&frame, &noise) {
                assert!((0.0..=1.0).contains(&d.confidence));
            }
        }
    }

    #[test]
    fn detection_is_deterministic_per_key() {
        let frame = frame_with_objects(&[0.7, 0.6]);
        let noise = NoiseConfig::default();
        assert_eq!(mock_detect(&frame, &noise), mock_detect(&frame, &noise));
    }

    #[test]
    fn perfect_emotion_accuracy_always_matches_truth() {
        let noise = NoiseConfig { emotion_accuracy: 1.0, ..NoiseConfig::default() };
        for i in 0..100 {
            let truth = Emotion::ALL[(i % 6) as usize];
            let scores = mock_emotion(&face("owner", truth), i, 0, &noise);
            assert_eq!(scores.dominant(), truth);
        }
    }

    #[test]
    fn zero_emotion_accuracy_never_matches_truth() {
        let noise = NoiseConfig { emotion_accuracy: 0.0, ..NoiseConfig::default() };
        for i in 0..100 {
            let scores = mock_emotion(&face("owner", Emotion::Happy), i, 0, &noise);
            assert_ne!(scores.dominant(), Emotion::Happy);
        }
    }

    #[test]
    fn emotion_scores_have_dominant_mass_and_even_remainder() {
        let noise = NoiseConfig::default();
        for i in 0..200 {
            let scores = mock_emotion(&face("owner", Emotion::Sad), i, 0, &noise);
            let dominant = scores.dominant();
            let mass = scores.score(dominant);
            assert!((0.6..0.9).contains(&mass), "mass {mass}");
            for emotion in Emotion::ALL {
                if emotion != dominant {
                    assert!((scores.score(emotion) - (1.0 - mass) / 5.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn emotion_accuracy_calibrates_to_configured_rate() {
        let noise = NoiseConfig { emotion_accuracy: 0.75, ..NoiseConfig::default() };
        let n = 4000;
        let mut correct = 0;
        for i in 0..n {
            let truth = Emotion::ALL[(i % 6) as usize];
            let scores = mock_emotion(&face("owner", truth), i, 0, &noise);
            if scores.dominant() == truth {
                correct += 1;
            }
        }
        let rate = correct as f64 / n as f64;
        assert!((rate - 0.75).abs() < 0.025, "observed accuracy {rate}");
    }

    #[test]
    fn zero_sigma_embedding_is_the_prototype() {
        let prototypes = IdentityPrototypes::build(42, "owner", Vec::<String>::new());
        let noise = NoiseConfig { embedding_sigma: 0.0, ..NoiseConfig::default() };
        let embedded = mock_embed(&face("owner", Emotion::Neutral), 3, 0, &prototypes, &noise);
        let prototype = prototypes.prototype_for("owner");
        for (a, b) in embedded.components().iter().zip(prototype.components()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn default_sigma_keeps_probes_close_to_prototype() {
        let prototypes = IdentityPrototypes::build(42, "owner", Vec::<String>::new());
        let prototype = prototypes.prototype_for("owner");
        let noise = NoiseConfig::default();
        let n = 1000;
        let mean: f64 = (0..n)
            .map(|i| {
                let probe = mock_embed(&face("owner", Emotion::Neutral), i, 0, &prototypes, &noise);
                cosine_similarity(&probe, &prototype)
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean > 0.9, "mean cosine {mean}");
    }

    #[test]
    fn similarity_degrades_monotonically_with_sigma() {
        let prototypes = IdentityPrototypes::build(42, "owner", Vec::<String>::new());
        let prototype = prototypes.prototype_for("owner");
        let mut means = Vec::new();
        for sigma in [0.0, 0.1, 0.3, 0.6] {
            let noise = NoiseConfig { embedding_sigma: sigma, ..NoiseConfig::default() };
            let mean: f64 = (0..500)
                .map(|i| {
                    let probe =
                        mock_embed(&face("owner", Emotion::Neutral), i, 0, &prototypes, &noise);
                    cosine_similarity(&probe, &prototype)
                })
                .sum::<f64>()
                / 500.0;
            means.push(mean);
        }
        assert_eq!(means[0], 1.0);
        for pair in means.windows(2) {
            assert!(pair[0] > pair[1], "means not decreasing: {means:?}");
        }
    }

    #[test]
    fn prototypes_are_pairwise_separated() {
        let others = ["alice", "bob", "carol", "dave", "erin", "frank", "grace"];
        let prototypes = IdentityPrototypes::build(42, "owner", others);
        let vectors: Vec<EmbeddingVector> =
            prototypes.identities().map(|id| prototypes.prototype_for(id)).collect();
        assert_eq!(vectors.len(), 8);
        for i in 0..vectors.len() {
            for j in (i + 1)..vectors.len() {
                let sim = cosine_similarity(&vectors[i], &vectors[j]);
                assert!(sim < PROTOTYPE_SEPARATION_LIMIT, "pair ({i}, {j}) at {sim}");
            }
        }
    }

    #[test]
    fn pinned_identity_keeps_unsalted_prototype() {
        let alone = IdentityPrototypes::build(7, "owner", Vec::<String>::new());
        let crowded = IdentityPrototypes::build(7, "owner", ["a", "b", "c", "d", "e"]);
        assert_eq!(alone.prototype_for("owner"), crowded.prototype_for("owner"));
        assert_eq!(
            alone.prototype_for("owner"),
            IdentityPrototypes::base_prototype(7, "owner")
        );
    }

    #[test]
    fn unknown_identity_falls_back_to_base_prototype() {
        let prototypes = IdentityPrototypes::build(42, "owner", Vec::<String>::new());
        assert_eq!(
            prototypes.prototype_for("stranger"),
            IdentityPrototypes::base_prototype(42, "stranger")
        );
    }

    #[test]
    fn different_identities_get_different_prototypes() {
        let a = IdentityPrototypes::base_prototype(42, "alice");
        let b = IdentityPrototypes::base_prototype(42, "bob");
        assert!(cosine_similarity(&a, &b) < 0.5);
    }

    #[test]
    fn enrollment_synthesis_is_deterministic_and_near_prototype() {
        let first = synthesize_enrollment(42, "owner", 20, 0.05);
        let second = synthesize_enrollment(42, "owner", 20, 0.05);
        assert_eq!(first, second);
        let prototype = IdentityPrototypes::base_prototype(42, "owner");
        for embedding in &first {
            assert!(cosine_similarity(embedding, &prototype) > 0.99);
        }
    }

    #[test]
    fn stage_kind_parses_known_names() {
        assert_eq!("detect".parse::<StageKind>().unwrap(), StageKind::Detect);
        assert_eq!("face".parse::<StageKind>().unwrap(), StageKind::Face);
        assert_eq!("emotion".parse::<StageKind>().unwrap(), StageKind::Emotion);
        assert_eq!(
            "segmentation".parse::<StageKind>().unwrap_err(),
            UnknownStage("segmentation".into())
        );
    }

    #[test]
    fn default_cost_model_matches_reference_latencies() {
        let cost = StageCostModel::default();
        assert_eq!(cost.stage_cost(StageKind::Detect), 40.0);
        assert_eq!(cost.stage_cost(StageKind::Face), 120.0);
        assert_eq!(cost.stage_cost(StageKind::Emotion), 80.0);
        assert_eq!(cost.overhead_ms, 0.0);
        assert_eq!(cost.frame_cost(true, 1), 240.0);
        assert_eq!(cost.frame_cost(false, 0), 40.0);
    }

    #[test]
    fn invalid_configs_report_field_names() {
        let cost = StageCostModel { face_ms: -1.0, ..StageCostModel::default() };
        let errors = cost.validation_errors();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].contains("face_ms"));

        let noise = NoiseConfig { emotion_accuracy: 1.5, ..NoiseConfig::default() };
        let errors = noise.validation_errors();
        assert_eq!(errors.len(), 1);
        assert!(errors[0].contains("emotion_accuracy out of range"));
    }
}
