//! Classification and ranking metrics.
//!
//! Everything here is a pure function over immutable sample lists: confusion
//! matrices, ROC/AUC, precision-recall/AP, one-vs-rest multi-class wrappers,
//! and windowed accuracy series. AUC ships with an independent brute-force
//! oracle ([`auc_pairwise_oracle`]) so the trapezoidal implementation can be
//! cross-checked on any input.
//!
//! Conventions: AUC counts ties as one half (Mann-Whitney). AP is the mean
//! of precision evaluated at each positive's rank in the score-sorted list,
//! without interpolation; ranking ties are broken by stable input order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Emotion, EmotionScores};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("prediction and truth lists differ in length: {predictions} vs {truths}")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("metric requires at least one sample")]
    EmptyInput,
    #[error("ROC undefined: all samples share one class")]
    SingleClass,
    #[error("AP undefined: no positive samples")]
    NoPositives,
    #[error("sample {index} has a non-finite score")]
    NonFiniteScore { index: usize },
}

/// One scored observation with its binary ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredSample {
    pub score: f64,
    /// `true` marks a positive.
    pub label: bool,
}

impl ScoredSample {
    pub fn new(score: f64, label: bool) -> Self {
        Self { score, label }
    }
}

/// Binary classification counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positives: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
    pub false_negatives: u64,
}

impl ConfusionMatrix {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fne: u64) -> Self {
        Self {
            true_positives: tp,
            false_positives: fp,
            true_negatives: tn,
            false_negatives: fne,
        }
    }

    pub fn from_predictions(
        predictions: &[bool],
        truths: &[bool],
    ) -> Result<Self, MetricsError> {
        if predictions.len() != truths.len() {
            return Err(MetricsError::LengthMismatch {
                predictions: predictions.len(),
                truths: truths.len(),
            });
        }
        if predictions.is_empty() {
            return Err(MetricsError::EmptyInput);
        }
        let mut matrix = Self::default();
        for (&pred, &truth) in predictions.iter().zip(truths) {
            match (pred, truth) {
                (true, true) => matrix.true_positives += 1,
                (true, false) => matrix.false_positives += 1,
                (false, false) => matrix.true_negatives += 1,
                (false, true) => matrix.false_negatives += 1,
            }
        }
        Ok(matrix)
    }

    pub fn total(&self) -> u64 {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }

    /// Fraction of correct predictions; `None` when there are no samples.
    pub fn accuracy(&self) -> Option<f64> {
        let total = self.total();
        (total > 0)
            .then(|| (self.true_positives + self.true_negatives) as f64 / total as f64)
    }
}

/// A point on a metric curve. ROC uses (false positive rate, true positive
/// rate); PR uses (recall, precision).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

fn check_scores(samples: &[ScoredSample]) -> Result<(), MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if let Some(index) = samples.iter().position(|s| !s.score.is_finite()) {
        return Err(MetricsError::NonFiniteScore { index });
    }
    Ok(())
}

fn class_counts(samples: &[ScoredSample]) -> (usize, usize) {
    let positives = samples.iter().filter(|s| s.label).count();
    (positives, samples.len() - positives)
}

/// ROC curve swept over unique scores in descending order.
///
/// The curve always starts at (0, 0) and ends at (1, 1); samples sharing a
/// score enter as one group, which is what gives ties their one-half
/// contribution to the area.
pub fn roc_curve(samples: &[ScoredSample]) -> Result<Vec<CurvePoint>, MetricsError> {
    check_scores(samples)?;
    let (positives, negatives) = class_counts(samples);
    if positives == 0 || negatives == 0 {
        return Err(MetricsError::SingleClass);
    }

    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = vec![CurvePoint { x: 0.0, y: 0.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let score = sorted[i].score;
        while i < sorted.len() && sorted[i].score == score {
            if sorted[i].label {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(CurvePoint {
            x: fp as f64 / negatives as f64,
            y: tp as f64 / positives as f64,
        });
    }
    Ok(points)
}

/// Area under the ROC curve, computed by the trapezoidal rule.
pub fn auc(samples: &[ScoredSample]) -> Result<f64, MetricsError> {
    let points = roc_curve(samples)?;
    let area = points
        .windows(2)
        .map(|pair| (pair[1].x - pair[0].x) * (pair[0].y + pair[1].y) / 2.0)
        .sum();
    Ok(area)
}

/// Brute-force AUC over all positive-negative pairs, ties counting one half.
///
/// Quadratic and deliberately naive: this is the oracle the trapezoidal
/// implementation is checked against.
pub fn auc_pairwise_oracle(samples: &[ScoredSample]) -> Result<f64, MetricsError> {
    check_scores(samples)?;
    let positives: Vec<f64> =
        samples.iter().filter(|s| s.label).map(|s| s.score).collect();
    let negatives: Vec<f64> =
        samples.iter().filter(|s| !s.label).map(|s| s.score).collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(MetricsError::SingleClass);
    }
    let mut won = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                won += 1.0;
            } else if p == n {
                won += 0.5;
            }
        }
    }
    Ok(won / (positives.len() as f64 * negatives.len() as f64))
}

/// Precision-recall pairs at each rank of the score-sorted sample list.
pub fn pr_curve(samples: &[ScoredSample]) -> Result<Vec<CurvePoint>, MetricsError> {
    check_scores(samples)?;
    let (positives, _) = class_counts(samples);
    if positives == 0 {
        return Err(MetricsError::NoPositives);
    }
    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut points = Vec::with_capacity(sorted.len());
    let mut hits = 0usize;
    for (rank, sample) in sorted.iter().enumerate() {
        if sample.label {
            hits += 1;
        }
        points.push(CurvePoint {
            x: hits as f64 / positives as f64,
            y: hits as f64 / (rank + 1) as f64,
        });
    }
    Ok(points)
}

/// Mean precision at each positive's rank (non-interpolated AP).
///
/// The sort is stable, so equal scores keep their input order.
pub fn average_precision(samples: &[ScoredSample]) -> Result<f64, MetricsError> {
    check_scores(samples)?;
    let (positives, _) = class_counts(samples);
    if positives == 0 {
        return Err(MetricsError::NoPositives);
    }
    let mut sorted: Vec<&ScoredSample> = samples.iter().collect();
    sorted.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, sample) in sorted.iter().enumerate() {
        if sample.label {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// Per-class AUC/AP in one-vs-rest form. `None` marks a metric undefined for
/// that class (no positives, or a single class present).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub auc: Option<f64>,
    pub ap: Option<f64>,
}

/// One-vs-rest metrics for all six emotion classes.
///
/// For each class, the positives are samples whose true label is that class
/// and the score is that class's entry in the score distribution. Undefined
/// metrics are reported as absent rather than as errors.
pub fn one_vs_rest_metrics(
    results: &[(EmotionScores, Emotion)],
) -> BTreeMap<Emotion, ClassMetrics> {
    let mut per_class = BTreeMap::new();
    for class in Emotion::ALL {
        let samples: Vec<ScoredSample> = results
            .iter()
            .map(|(scores, truth)| ScoredSample::new(scores.score(class), *truth == class))
            .collect();
        per_class.insert(
            class,
            ClassMetrics { auc: auc(&samples).ok(), ap: average_precision(&samples).ok() },
        );
    }
    per_class
}

/// Sliding-window accuracy over `(frame index, correct)` outcomes.
///
/// Only full windows are emitted; each point carries the frame index of the
/// window's last outcome. Fewer outcomes than `window` (or a zero window)
/// yields an empty series.
pub fn accuracy_over_time(outcomes: &[(u64, bool)], window: usize) -> Vec<(u64, f64)> {
    if window == 0 || outcomes.len() < window {
        return Vec::new();
    }
    let mut prefix = vec![0u64];
    for (_, correct) in outcomes {
        prefix.push(prefix.last().unwrap() + u64::from(*correct));
    }
    (window..=outcomes.len())
        .map(|end| {
            let correct = prefix[end] - prefix[end - window];
            (outcomes[end - 1].0, correct as f64 / window as f64)
        })
        .collect()
}
