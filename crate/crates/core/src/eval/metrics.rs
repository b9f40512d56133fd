//! Confusion matrices, macro-F1, one-vs-rest recall and first-error positions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::synth::Label;

use super::{Conclusion, EvalRecord, StepCurvature};

/// Rows: true convex, concave, neither. Columns: predicted convex, concave,
/// neither, invalid. Invalid predictions are wrong for every row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: [[u64; 4]; 3],
}

impl Confusion {
    pub fn from_rows(matrix: [[u64; 4]; 3]) -> Self {
        Confusion { matrix }
    }

    pub fn add(&mut self, truth: Label, predicted: Conclusion) {
        self.matrix[Conclusion::from_label(truth).column()][predicted.column()] += 1;
    }

    pub fn of<'a>(records: impl IntoIterator<Item = &'a EvalRecord>) -> Self {
        let mut c = Confusion::default();
        for r in records {
            c.add(r.label, r.predicted());
        }
        c
    }

    pub fn support(&self, row: usize) -> u64 {
        self.matrix[row].iter().sum()
    }

    pub fn total(&self) -> u64 {
        (0..3).map(|r| self.support(r)).sum()
    }

    fn predicted(&self, col: usize) -> u64 {
        (0..3).map(|r| self.matrix[r][col]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: Label,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no records to score")]
    NoRecords,
    #[error("class {0} has no records; macro-F1 is undefined")]
    EmptyClass(Label),
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn class_metrics(c: &Confusion) -> Vec<ClassMetrics> {
    Label::ALL
        .iter()
        .enumerate()
        .map(|(k, &label)| {
            let tp = c.matrix[k][k];
            let precision = ratio(tp, c.predicted(k));
            let recall = ratio(tp, c.support(k));
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            ClassMetrics { label, support: c.support(k), precision, recall, f1 }
        })
        .collect()
}

/// Per-class metrics and their unweighted mean F1.
pub fn metrics_from_confusion(c: &Confusion) -> Result<(Vec<ClassMetrics>, f64), MetricsError> {
    if c.total() == 0 {
        return Err(MetricsError::NoRecords);
    }
    let classes = class_metrics(c);
    if let Some(m) = classes.iter().find(|m| m.support == 0) {
        return Err(MetricsError::EmptyClass(m.label));
    }
    let macro_f1 = classes.iter().map(|m| m.f1).sum::<f64>() / 3.0;
    Ok((classes, macro_f1))
}

/// Scores for one subset of records. `macro_f1` averages only the classes
/// present, so single-class subsets still get a value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub n: usize,
    pub confusion: Confusion,
    pub classes: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub accuracy: f64,
    pub invalid: usize,
    pub failed: usize,
    pub mean_tokens_in: f64,
    pub mean_tokens_out: f64,
    /// Mean sub-function count over agentic records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_steps: Option<f64>,
    /// Normalized first-error positions bucketed into tenths; last bucket
    /// counts runs without error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error_hist: Option<[usize; 11]>,
}

impl GroupMetrics {
    pub fn of(records: &[&EvalRecord]) -> Self {
        let n = records.len();
        let confusion = Confusion::of(records.iter().copied());
        let classes = class_metrics(&confusion);
        let present: Vec<&ClassMetrics> = classes.iter().filter(|m| m.support > 0).collect();
        let macro_f1 =
            if present.is_empty() { 0.0 } else { present.iter().map(|m| m.f1).sum::<f64>() / present.len() as f64 };
        let mean = |f: &dyn Fn(&EvalRecord) -> f64| {
            if n == 0 {
                0.0
            } else {
                records.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        let agentic: Vec<&&EvalRecord> = records.iter().filter(|r| r.paradigm.is_agentic()).collect();
        let (mean_steps, first_error_hist) = if agentic.is_empty() {
            (None, None)
        } else {
            let steps = agentic.iter().map(|r| r.steps.len() as f64).sum::<f64>() / agentic.len() as f64;
            let mut hist = [0usize; 11];
            for r in &agentic {
                match first_error_position(r) {
                    Some((_, frac)) => hist[((frac * 10.0).ceil() as usize).clamp(1, 10) - 1] += 1,
                    None => hist[10] += 1,
                }
            }
            (Some(steps), Some(hist))
        };
        GroupMetrics {
            n,
            confusion,
            classes,
            macro_f1,
            accuracy: ratio(records.iter().filter(|r| r.is_correct()).count() as u64, n as u64),
            invalid: records.iter().filter(|r| r.predicted() == Conclusion::Invalid).count(),
            failed: records.iter().filter(|r| r.error.is_some()).count(),
            mean_tokens_in: mean(&|r| r.tokens_in as f64),
            mean_tokens_out: mean(&|r| r.tokens_out as f64),
            mean_steps,
            first_error_hist,
        }
    }

    pub fn recall(&self, l: Label) -> f64 {
        self.classes.iter().find(|m| m.label == l).map_or(0.0, |m| m.recall)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub confusion: Confusion,
    pub classes: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub overall: GroupMetrics,
    pub by_depth: BTreeMap<usize, GroupMetrics>,
}

impl MetricsReport {
    pub fn recall(&self, l: Label) -> f64 {
        self.classes.iter().find(|m| m.label == l).map_or(0.0, |m| m.recall)
    }
}

/// Needs at least one record of every class.
pub fn compute_metrics(records: &[EvalRecord]) -> Result<MetricsReport, MetricsError> {
    let confusion = Confusion::of(records);
    let (classes, macro_f1) = metrics_from_confusion(&confusion)?;
    let all: Vec<&EvalRecord> = records.iter().collect();
    let mut depths: BTreeMap<usize, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        depths.entry(r.depth).or_default().push(r);
    }
    Ok(MetricsReport {
        n: records.len(),
        confusion,
        classes,
        macro_f1,
        overall: GroupMetrics::of(&all),
        by_depth: depths.into_iter().map(|(d, rs)| (d, GroupMetrics::of(&rs))).collect(),
    })
}

/// First step whose voted curvature differs from the ground truth, with its
/// position as a fraction of the step count.
pub fn first_error_position(rec: &EvalRecord) -> Option<(usize, f64)> {
    let k = rec.ground_truth.len().max(rec.steps.len());
    let i = (0..k).find(|&i| {
        let got = rec.steps.get(i).map_or(StepCurvature::Invalid, |s| s.state.curvature);
        rec.ground_truth.get(i).is_none_or(|t| t.curvature != got)
    })?;
    Some((i + 1, (i + 1) as f64 / k as f64))
}

/// First step whose voted range differs from the ground truth.
pub fn first_range_error(rec: &EvalRecord) -> Option<usize> {
    rec.steps.iter().zip(&rec.ground_truth).position(|(s, t)| s.state.range != t.range).map(|i| i + 1)
}
