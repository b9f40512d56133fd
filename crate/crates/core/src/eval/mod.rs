//! Solver evaluation under the four reasoning paradigms.
//!
//! [`run_oneshot`] and [`run_agentic`] drive a [`Solver`] over one
//! [`BenchmarkInstance`](crate::synth::BenchmarkInstance) and return an
//! [`EvalRecord`]; [`compute_metrics`] scores a batch of records.

mod metrics;
mod oracle;
mod parse;
mod prompt;
mod run;
mod solver;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::atoms::Curvature;
use crate::interval::CoarseRange;
use crate::synth::Label;

pub use metrics::{
    compute_metrics, first_error_position, first_range_error, metrics_from_confusion, ClassMetrics, Confusion,
    GroupMetrics, MetricsError, MetricsReport,
};
pub use oracle::RuleOracle;
pub use parse::{parse_step, parse_verdict};
pub use prompt::{
    estimate_tokens, render_agentic, render_context_line, render_listing, render_oneshot, render_oneshot_decomp,
    AGENTIC_TEMPLATE, JSON_REMINDER, ONESHOT_DECOMP_TEMPLATE, ONESHOT_TEMPLATE,
};
pub use run::{ground_truth_states, run_agentic, run_instance, run_oneshot, vote_conclusion, vote_step, EvalConfig};
pub use solver::{
    Completion, Fallback, HttpChat, HttpChatConfig, Request, ScriptedResponse, ScriptedSolver, Solver, SolverError,
    TokenBucket,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Paradigm {
    Oneshot,
    OneshotDecomp,
    AgenticFull,
    AgenticFocused,
}

impl Paradigm {
    pub const ALL: [Paradigm; 4] =
        [Paradigm::Oneshot, Paradigm::OneshotDecomp, Paradigm::AgenticFull, Paradigm::AgenticFocused];

    pub fn as_str(self) -> &'static str {
        match self {
            Paradigm::Oneshot => "oneshot",
            Paradigm::OneshotDecomp => "oneshot_decomp",
            Paradigm::AgenticFull => "agentic_full",
            Paradigm::AgenticFocused => "agentic_focused",
        }
    }

    pub fn is_agentic(self) -> bool {
        matches!(self, Paradigm::AgenticFull | Paradigm::AgenticFocused)
    }

    pub fn uses_decomposition(self) -> bool {
        self != Paradigm::Oneshot
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Paradigm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Paradigm::ALL
            .into_iter()
            .find(|p| p.as_str() == s.trim())
            .ok_or_else(|| format!("unknown paradigm {s:?} (oneshot, oneshot_decomp, agentic_full, agentic_focused)"))
    }
}

/// Final answer of a one-shot vote.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Conclusion {
    Convex,
    Concave,
    Neither,
    Invalid,
}

impl Conclusion {
    pub fn as_str(self) -> &'static str {
        match self {
            Conclusion::Convex => "convex",
            Conclusion::Concave => "concave",
            Conclusion::Neither => "neither",
            Conclusion::Invalid => "invalid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "convex" => Some(Conclusion::Convex),
            "concave" => Some(Conclusion::Concave),
            "neither" => Some(Conclusion::Neither),
            _ => None,
        }
    }

    pub fn from_label(l: Label) -> Self {
        match l {
            Label::Convex => Conclusion::Convex,
            Label::Concave => Conclusion::Concave,
            Label::Neither => Conclusion::Neither,
        }
    }

    /// Index 0..3 for the three classes, 3 for invalid.
    pub fn column(self) -> usize {
        match self {
            Conclusion::Convex => 0,
            Conclusion::Concave => 1,
            Conclusion::Neither => 2,
            Conclusion::Invalid => 3,
        }
    }
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub conclusion: Conclusion,
    pub analysis_text: String,
    pub raw: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepCurvature {
    Affine,
    Convex,
    Concave,
    Neither,
    Invalid,
}

impl StepCurvature {
    pub fn as_str(self) -> &'static str {
        match self {
            StepCurvature::Affine => "affine",
            StepCurvature::Convex => "convex",
            StepCurvature::Concave => "concave",
            StepCurvature::Neither => "neither",
            StepCurvature::Invalid => "invalid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "affine" => Some(StepCurvature::Affine),
            "convex" => Some(StepCurvature::Convex),
            "concave" => Some(StepCurvature::Concave),
            "neither" => Some(StepCurvature::Neither),
            _ => None,
        }
    }

    pub fn from_curvature(c: Curvature) -> Self {
        match c {
            Curvature::Affine => StepCurvature::Affine,
            Curvature::Convex => StepCurvature::Convex,
            Curvature::Concave => StepCurvature::Concave,
            Curvature::Unknown => StepCurvature::Neither,
        }
    }

    /// Rule-engine curvature a caller may assume; invalid reads as neither.
    pub fn to_curvature(self) -> Curvature {
        match self {
            StepCurvature::Affine => Curvature::Affine,
            StepCurvature::Convex => Curvature::Convex,
            StepCurvature::Concave => Curvature::Concave,
            StepCurvature::Neither | StepCurvature::Invalid => Curvature::Unknown,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRange {
    Pos,
    Neg,
    Any,
    Invalid,
}

impl StepRange {
    pub fn as_str(self) -> &'static str {
        match self {
            StepRange::Pos => "pos",
            StepRange::Neg => "neg",
            StepRange::Any => "any",
            StepRange::Invalid => "invalid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CoarseRange::parse(s).map(Self::from_coarse)
    }

    pub fn from_coarse(c: CoarseRange) -> Self {
        match c {
            CoarseRange::Pos => StepRange::Pos,
            CoarseRange::Neg => StepRange::Neg,
            CoarseRange::Any => StepRange::Any,
        }
    }

    /// Invalid reads as `any`.
    pub fn to_coarse(self) -> CoarseRange {
        match self {
            StepRange::Pos => CoarseRange::Pos,
            StepRange::Neg => CoarseRange::Neg,
            StepRange::Any | StepRange::Invalid => CoarseRange::Any,
        }
    }
}

/// Solver-side `(curvature, range)` for one sub-function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StepState {
    pub curvature: StepCurvature,
    pub range: StepRange,
}

impl StepState {
    pub const INVALID: StepState = StepState { curvature: StepCurvature::Invalid, range: StepRange::Invalid };

    pub fn new(curvature: StepCurvature, range: StepRange) -> Self {
        StepState { curvature, range }
    }

    pub fn is_invalid(&self) -> bool {
        self.curvature == StepCurvature::Invalid || self.range == StepRange::Invalid
    }

    /// What later steps are told; invalid fields degrade to neither/any.
    pub fn as_context(&self) -> StepState {
        let curvature = match self.curvature {
            StepCurvature::Invalid => StepCurvature::Neither,
            c => c,
        };
        StepState { curvature, range: StepRange::from_coarse(self.range.to_coarse()) }
    }
}

/// One agentic step: all votes and the voted state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub votes: Vec<StepState>,
    pub state: StepState,
    pub prompt_chars: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub label: Label,
    pub depth: usize,
    pub paradigm: Paradigm,
    pub solver: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub granularity: Option<usize>,
    /// One-shot votes (empty for agentic runs).
    #[serde(default)]
    pub votes: Vec<Conclusion>,
    pub verdict: Conclusion,
    /// The final sub-function came out affine, which scores as either label.
    #[serde(default)]
    pub affine_final: bool,
    #[serde(default)]
    pub steps: Vec<StepRecord>,
    #[serde(default)]
    pub ground_truth: Vec<StepState>,
    pub tokens_in: u64,
    pub tokens_out: u64,
    pub wall_ms: u64,
    /// Set when the solver failed after its retries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl EvalRecord {
    /// Prediction used for scoring.
    pub fn predicted(&self) -> Conclusion {
        if self.affine_final && self.label != Label::Neither {
            Conclusion::from_label(self.label)
        } else {
            self.verdict
        }
    }

    pub fn is_correct(&self) -> bool {
        self.predicted() == Conclusion::from_label(self.label)
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }
}
