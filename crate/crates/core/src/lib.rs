//! Synthesis, certification, decomposition and evaluation of deeply composed
//! scalar functions with known convexity.
//!
//! The pipeline: [`synth`] grows label-directed chains from the [`atoms`]
//! library under the [`dcp`] rules, [`jensen`] supplies counterexamples for
//! the `neither` class, [`decompose`] cuts instances into sub-functions, and
//! [`eval`] runs solvers over them and scores the answers.

pub mod atoms;
pub mod dcp;
pub mod decompose;
pub mod eval;
pub mod expr;
pub mod interval;
pub mod io;
pub mod jensen;
pub mod synth;

pub use atoms::{AtomId, AtomSpec, Curvature, Monotonicity};
pub use dcp::{analyze, certified_label, CertifiedLabel, CurvatureState};
pub use decompose::{decompose, recompose, DependencyGraph, SubFunction};
pub use eval::{EvalConfig, EvalRecord, Paradigm, RuleOracle, Solver};
pub use expr::{evaluate, parse, print, Expr};
pub use interval::{CoarseRange, Interval};
pub use jensen::{jensen_scan, JensenConfig, JensenReport};
pub use synth::{BenchmarkInstance, Label, SynthesisTarget};
