//! Ground-truth traces and detection records.
//!
//! A scenario trace is the simulator's input: per-frame ground truth listing
//! the objects in view and the faces present, each face tagged with an
//! identity and a true emotion. Mock perception stages read this truth and
//! produce noisy observations from it; nothing downstream ever sees the
//! truth directly except through those stages.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Trace file format revision accepted by this crate.
pub const TRACE_FORMAT_VERSION: u32 = 1;

const SCORE_SUM_TOLERANCE: f64 = 1e-9;

/// The six emotion classes the mock classifier distinguishes.
///
/// `ALL` fixes a canonical order; score maps serialize in this order and
/// argmax ties resolve to the earliest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Emotion {
    Angry,
    Fear,
    Happy,
    Sad,
    Surprise,
    Neutral,
}

impl Emotion {
    pub const ALL: [Emotion; 6] = [
        Emotion::Angry,
        Emotion::Fear,
        Emotion::Happy,
        Emotion::Sad,
        Emotion::Surprise,
        Emotion::Neutral,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Emotion::Angry => "Angry",
            Emotion::Fear => "Fear",
            Emotion::Happy => "Happy",
            Emotion::Sad => "Sad",
            Emotion::Surprise => "Surprise",
            Emotion::Neutral => "Neutral",
        }
    }

    /// Position in [`Emotion::ALL`].
    pub fn index(self) -> usize {
        Emotion::ALL.iter().position(|e| *e == self).expect("emotion is in ALL")
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Emotion {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.label() == s)
            .ok_or_else(|| ModelError::UnknownEmotion(s.to_string()))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unknown emotion label: {0}")]
    UnknownEmotion(String),
    #[error("emotion score for {label} out of range [0, 1]: {value}")]
    ScoreOutOfRange { label: &'static str, value: f64 },
    #[error("emotion scores must sum to 1, got {0}")]
    ScoreSum(f64),
}

/// A probability distribution over the six emotion classes.
///
/// Scores are stored in [`Emotion::ALL`] order, each in `[0, 1]`, summing to
/// one within `1e-9`. Serialized form is a map keyed by class label so
/// reports stay self-describing.
#[derive(Debug, Clone, PartialEq)]
pub struct EmotionScores([f64; 6]);

impl EmotionScores {
    pub fn new(scores: [f64; 6]) -> Result<Self, ModelError> {
        for (emotion, &value) in Emotion::ALL.iter().zip(&scores) {
            if !(0.0..=1.0).contains(&value) || !value.is_finite() {
                return Err(ModelError::ScoreOutOfRange { label: emotion.label(), value });
            }
        }
        let sum: f64 = scores.iter().sum();
        if (sum - 1.0).abs() > SCORE_SUM_TOLERANCE {
            return Err(ModelError::ScoreSum(sum));
        }
        Ok(Self(scores))
    }

    pub fn score(&self, emotion: Emotion) -> f64 {
        self.0[emotion.index()]
    }

    pub fn scores(&self) -> &[f64; 6] {
        &self.0
    }

    /// Highest-scoring class; ties go to the earliest class in
    /// [`Emotion::ALL`].
    pub fn dominant(&self) -> Emotion {
        let mut best = Emotion::ALL[0];
        for &emotion in &Emotion::ALL[1..] {
            if self.score(emotion) > self.score(best) {
                best = emotion;
            }
        }
        best
    }
}

impl Serialize for EmotionScores {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(6))?;
        for emotion in Emotion::ALL {
            map.serialize_entry(emotion.label(), &self.score(emotion))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for EmotionScores {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(deserializer)?;
        let mut scores = [0.0; 6];
        let mut seen = 0usize;
        for (label, value) in &raw {
            let emotion = Emotion::from_str(label).map_err(DeError::custom)?;
            scores[emotion.index()] = *value;
            seen += 1;
        }
        if seen != 6 {
            return Err(DeError::custom(format!("expected 6 emotion scores, got {seen}")));
        }
        EmotionScores::new(scores).map_err(DeError::custom)
    }
}

/// Axis-aligned box in pixel coordinates, serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl From<[f64; 4]> for BoundingBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// Ground-truth object in a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundObject {
    /// Object class, e.g. `"person"`.
    pub class: String,
    /// Confidence the mock detector reports before jitter.
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

/// Ground-truth face in a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundFace {
    /// Identity tag, e.g. `"owner"` or an intruder name.
    pub identity: String,
    /// Emotion the subject is actually expressing.
    pub emotion: Emotion,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

/// Ground truth for a single frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameTruth {
    pub index: u64,
    #[serde(default)]
    pub objects: Vec<GroundObject>,
    #[serde(default)]
    pub faces: Vec<GroundFace>,
}

/// A full scenario: ordered frames plus the seed that generated them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTrace {
    pub version: u32,
    pub seed: u64,
    pub frames: Vec<FrameTruth>,
}

/// One detector output. Produced by the mock detector, never stored in
/// traces.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub class: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
}

/// A single problem found by [`validate_trace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TraceViolation {
    /// Frame the problem was found in, when frame-specific.
    pub frame_index: Option<u64>,
    pub message: String,
}

impl fmt::Display for TraceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.frame_index {
            Some(index) => write!(f, "frame {index}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Detections whose confidence strictly exceeds `threshold`.
pub fn filter_by_confidence(detections: &[Detection], threshold: f64) -> Vec<Detection> {
    detections.iter().filter(|d| d.confidence > threshold).cloned().collect()
}

/// Whether any detection carries exactly this class label.
///
/// Comparison is case-sensitive: `"Person"` does not trigger a gate
/// configured for `"person"`.
pub fn contains_class(detections: &[Detection], class: &str) -> bool {
    detections.iter().any(|d| d.class == class)
}

/// Structural checks on a trace. Returns every violation found, in frame
/// order; an empty result means the trace is safe to simulate.
pub fn validate_trace(trace: &ScenarioTrace) -> Vec<TraceViolation> {
    let mut violations = Vec::new();
    if trace.version != TRACE_FORMAT_VERSION {
        violations.push(TraceViolation {
            frame_index: None,
            message: format!(
                "unsupported trace version {}, expected {TRACE_FORMAT_VERSION}",
                trace.version
            ),
        });
    }
    for (position, frame) in trace.frames.iter().enumerate() {
        let mut report = |message: String| {
            violations.push(TraceViolation { frame_index: Some(frame.index), message });
        };
        if frame.index != position as u64 {
            report(format!(
                "non-consecutive index at position {position}: expected {position}, found {}",
                frame.index
            ));
        }
        for (i, object) in frame.objects.iter().enumerate() {
            if object.class.is_empty() {
                report(format!("object {i} has an empty class label"));
            }
            if !object.confidence.is_finite() || !(0.0..=1.0).contains(&object.confidence) {
                report(format!(
                    "object {i} confidence out of range [0, 1]: {}",
                    object.confidence
                ));
            }
            let positive_box = object.bbox.w > 0.0 && object.bbox.h > 0.0;
            if !positive_box {
                report(format!("object {i} has a non-positive box size"));
            }
        }
        for (i, face) in frame.faces.iter().enumerate() {
            if face.identity.is_empty() {
                report(format!("face {i} has an empty identity tag"));
            }
            let positive_box = face.bbox.w > 0.0 && face.bbox.h > 0.0;
            if !positive_box {
                report(format!("face {i} has a non-positive box size"));
            }
        }
        if !frame.faces.is_empty() && !frame.objects.iter().any(|o| o.class == "person") {
            report("face present without a person object".to_string());
        }
    }
    violations
}
