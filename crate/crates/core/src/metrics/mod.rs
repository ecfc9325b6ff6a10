//! Confusion counts, summary metrics, repeat stability and report tables.

mod report;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::llm::{ParsedLabel, PredictionRecord};
use crate::pairs::{Label, LabeledDataset};

pub use report::{render_report, Layout, Report, TableFile, AVG, UNDEFINED};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("{predictions} predictions for {truths} truths")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("record for pair {pair_index} does not match the dataset: {message}")]
    Misaligned { pair_index: usize, message: String },
    #[error("no scored examples")]
    Empty,
    #[error("pair {pair_index} has {found} repeats, expected {expected}")]
    MissingRepeats { pair_index: usize, found: usize, expected: usize },
    #[error("no summaries to report")]
    NoSummaries,
}

/// What to do with predictions that could not be parsed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InvalidPolicy {
    /// An invalid answer on a positive is a false negative, on a negative a
    /// false positive.
    #[default]
    CountAsWrong,
    /// Invalid answers are left out of the four cells.
    Exclude,
}

impl std::str::FromStr for InvalidPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "count_as_wrong" => Ok(Self::CountAsWrong),
            "exclude" => Ok(Self::Exclude),
            _ => Err(format!("unknown invalid policy {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Predictions that parsed as invalid, under either policy.
    pub invalid: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, truth: Label, predicted: ParsedLabel, policy: InvalidPolicy) {
        let predicted = match predicted.label() {
            Some(l) => l,
            None => {
                self.invalid += 1;
                match policy {
                    InvalidPolicy::Exclude => return,
                    // Score the opposite of the truth.
                    InvalidPolicy::CountAsWrong => match truth {
                        Label::Interaction => Label::NoInteraction,
                        Label::NoInteraction => Label::Interaction,
                    },
                }
            }
        };
        match (truth, predicted) {
            (Label::Interaction, Label::Interaction) => self.tp += 1,
            (Label::Interaction, Label::NoInteraction) => self.fn_ += 1,
            (Label::NoInteraction, Label::Interaction) => self.fp += 1,
            (Label::NoInteraction, Label::NoInteraction) => self.tn += 1,
        }
    }
}

/// Tallies predictions against truths of the same length and order.
pub fn tally_confusion(
    predictions: &[ParsedLabel],
    truths: &[Label],
    policy: InvalidPolicy,
) -> Result<ConfusionCounts, MetricsError> {
    if predictions.len() != truths.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (p, t) in predictions.iter().zip(truths) {
        c.add(*t, *p, policy);
    }
    Ok(c)
}

/// Tallies every record (each repeat counts once) against the dataset it
/// was produced from. Records are matched by `pair_index` and must name the
/// same drugs as that pair.
pub fn tally_records(
    records: &[PredictionRecord],
    dataset: &LabeledDataset,
    policy: InvalidPolicy,
) -> Result<ConfusionCounts, MetricsError> {
    let mut c = ConfusionCounts::default();
    for r in records {
        let misaligned = |message: String| MetricsError::Misaligned {
            pair_index: r.pair_index,
            message,
        };
        let pair = dataset
            .pairs
            .get(r.pair_index)
            .ok_or_else(|| misaligned(format!("dataset has {} pairs", dataset.len())))?;
        if pair.drug1 != r.drug1 || pair.drug2 != r.drug2 {
            return Err(misaligned(format!(
                "record names ({}, {}), dataset has ({}, {})",
                r.drug1, r.drug2, pair.drug1, pair.drug2
            )));
        }
        let truth = pair
            .label
            .ok_or_else(|| misaligned("pair is unlabeled".into()))?;
        c.add(truth, r.parsed, policy);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    Precision,
    Sensitivity,
    Specificity,
    F1,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Accuracy,
        Metric::Precision,
        Metric::Sensitivity,
        Metric::Specificity,
        Metric::F1,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Precision => "precision",
            Metric::Sensitivity => "sensitivity",
            Metric::Specificity => "specificity",
            Metric::F1 => "f1",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Metric::Accuracy => "Accuracy",
            Metric::Precision => "Precision",
            Metric::Sensitivity => "Sensitivity",
            Metric::Specificity => "Specificity",
            Metric::F1 => "F1",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown metric {s:?}"))
    }
}

/// Metric values; `None` where a denominator is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub dataset: String,
    pub model: String,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub counts: ConfusionCounts,
}

impl MetricsSummary {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::Precision => self.precision,
            Metric::Sensitivity => self.sensitivity,
            Metric::Specificity => self.specificity,
            Metric::F1 => self.f1,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(
    counts: &ConfusionCounts,
    dataset: &str,
    model: &str,
) -> Result<MetricsSummary, MetricsError> {
    let c = counts;
    if c.total() == 0 {
        return Err(MetricsError::Empty);
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let sensitivity = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, sensitivity) {
        (Some(p), Some(s)) if p + s > 0.0 => Some(2.0 * p * s / (p + s)),
        _ => None,
    };
    Ok(MetricsSummary {
        dataset: dataset.to_string(),
        model: model.to_string(),
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        sensitivity,
        specificity: ratio(c.tn, c.tn + c.fp),
        f1,
        counts: *c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleStability {
    pub pair_index: usize,
    pub majority: ParsedLabel,
    /// Repeats whose answer differs from the majority answer.
    pub disagreements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub repeats: usize,
    pub examples: Vec<ExampleStability>,
    /// Fraction of examples with at least one disagreeing repeat.
    pub aggregate: f64,
}

/// Checks that every example was answered the same way on each repeat.
/// Invalid answers take part in the vote like any other answer.
pub fn stability_report(records: &[PredictionRecord], repeats: usize) -> Result<StabilityReport, MetricsError> {
    let mut by_pair: BTreeMap<usize, Vec<ParsedLabel>> = BTreeMap::new();
    for r in records {
        by_pair.entry(r.pair_index).or_default().push(r.parsed);
    }
    let mut examples = Vec::with_capacity(by_pair.len());
    for (pair_index, answers) in by_pair {
        if answers.len() != repeats {
            return Err(MetricsError::MissingRepeats {
                pair_index,
                found: answers.len(),
                expected: repeats,
            });
        }
        let mut votes: BTreeMap<ParsedLabel, usize> = BTreeMap::new();
        for a in &answers {
            *votes.entry(*a).or_default() += 1;
        }
        // Highest count wins; on a tie the first label in declaration order.
        let (majority, top) = votes
            .iter()
            .fold((ParsedLabel::Invalid, 0), |best, (l, n)| if *n > best.1 { (*l, *n) } else { best });
        examples.push(ExampleStability {
            pair_index,
            majority,
            disagreements: answers.len() - top,
        });
    }
    let unstable = examples.iter().filter(|e| e.disagreements > 0).count();
    let aggregate = if examples.is_empty() {
        0.0
    } else {
        unstable as f64 / examples.len() as f64
    };
    Ok(StabilityReport { repeats, examples, aggregate })
}
