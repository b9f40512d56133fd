//! Paradigm drivers and vote aggregation.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dcp::{analyze_with, CurvatureState, RangeMode, RefStates};
use crate::decompose::{decompose, focused_context, full_context, DependencyGraph, SubFunction};
use crate::synth::BenchmarkInstance;

use super::parse::{parse_step, parse_verdict};
use super::prompt::{estimate_tokens, render_agentic, render_oneshot, render_oneshot_decomp, JSON_REMINDER};
use super::solver::{Request, Solver, SolverError};
use super::{Conclusion, EvalRecord, Paradigm, StepCurvature, StepRange, StepRecord, StepState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub temperature: f64,
    /// `None`: 64 for solvers that can vary between samples, else 1.
    pub n_votes: Option<usize>,
    pub max_output_tokens: u64,
    pub seed: u64,
    pub granularity: usize,
    /// Re-asks per vote when no valid JSON came back.
    pub json_retries: usize,
    pub parallel_votes: bool,
    /// When false `wall_ms` is 0, making records byte-reproducible.
    pub record_timing: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            temperature: 0.1,
            n_votes: None,
            max_output_tokens: 50_000,
            seed: 0,
            granularity: 50,
            json_retries: 2,
            parallel_votes: true,
            record_timing: true,
        }
    }
}

impl EvalConfig {
    pub fn votes_for(&self, solver: &dyn Solver) -> usize {
        self.n_votes.unwrap_or(if solver.supports_votes() { 64 } else { 1 }).max(1)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_votes == Some(0) {
            return Err("n_votes must be at least 1".into());
        }
        if self.max_output_tokens < 256 {
            return Err("max_output_tokens must be at least 256".into());
        }
        if self.granularity < 8 {
            return Err("granularity must be at least 8".into());
        }
        Ok(())
    }
}

/// Majority over valid votes; ties go to neither, then convex, then concave.
pub fn vote_conclusion(votes: &[Conclusion]) -> Conclusion {
    let order = [Conclusion::Neither, Conclusion::Convex, Conclusion::Concave];
    majority(votes, &order).unwrap_or(Conclusion::Invalid)
}

/// Curvature and range are voted separately over their valid values.
pub fn vote_step(votes: &[StepState]) -> StepState {
    let curv: Vec<_> = votes.iter().map(|v| v.curvature).collect();
    let range: Vec<_> = votes.iter().map(|v| v.range).collect();
    StepState {
        curvature: majority(
            &curv,
            &[StepCurvature::Neither, StepCurvature::Convex, StepCurvature::Concave, StepCurvature::Affine],
        )
        .unwrap_or(StepCurvature::Invalid),
        range: majority(&range, &[StepRange::Any, StepRange::Pos, StepRange::Neg]).unwrap_or(StepRange::Invalid),
    }
}

/// Most frequent member of `order` (earlier wins ties); `None` if no vote is
/// in `order`.
fn majority<T: PartialEq + Copy>(votes: &[T], order: &[T]) -> Option<T> {
    let mut best: Option<(T, usize)> = None;
    for &c in order {
        let n = votes.iter().filter(|&&v| v == c).count();
        if n > 0 && best.is_none_or(|(_, m)| n > m) {
            best = Some((c, n));
        }
    }
    best.map(|b| b.0)
}

/// States a perfect solver reports: each body analyzed with its references
/// known only by (curvature, coarse range).
pub fn ground_truth_states(subs: &[SubFunction]) -> Vec<StepState> {
    let mut refs = RefStates::new();
    subs.iter()
        .map(|s| {
            let st = match analyze_with(&s.body, &refs, RangeMode::Coarse) {
                Ok(cs) => {
                    StepState::new(StepCurvature::from_curvature(cs.curvature), StepRange::from_coarse(cs.coarse_range))
                }
                Err(_) => StepState::new(StepCurvature::Neither, StepRange::Any),
            };
            refs.insert(s.index, CurvatureState::from_summary(st.curvature.to_curvature(), st.range.to_coarse()));
            st
        })
        .collect()
}

fn fnv(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn call_seed(base: u64, id: &str, step: Option<usize>, vote: usize, attempt: usize) -> u64 {
    let mut h = base ^ fnv(id);
    for v in [step.map_or(0, |s| s as u64 + 1), vote as u64, attempt as u64] {
        h = (h ^ v).wrapping_mul(0x9e37_79b9_7f4a_7c15).rotate_left(29);
    }
    h
}

struct Tally {
    tokens_in: u64,
    tokens_out: u64,
}

/// One vote with JSON retries. `valid` decides whether to retry.
#[allow(clippy::too_many_arguments)]
fn sample<T>(
    solver: &dyn Solver,
    cfg: &EvalConfig,
    id: &str,
    step: Option<usize>,
    vote: usize,
    prompt: &str,
    parse: impl Fn(&str) -> T,
    valid: impl Fn(&T) -> bool,
) -> Result<(T, Tally), SolverError> {
    let mut tally = Tally { tokens_in: 0, tokens_out: 0 };
    let mut out = None;
    for attempt in 0..=cfg.json_retries {
        let p = if attempt == 0 { prompt.to_string() } else { format!("{prompt}\n\n{JSON_REMINDER}") };
        let req = Request {
            prompt: &p,
            instance: id,
            step,
            vote,
            attempt,
            seed: call_seed(cfg.seed, id, step, vote, attempt),
            temperature: cfg.temperature,
            max_output_tokens: cfg.max_output_tokens,
        };
        let c = solver.generate(&req)?;
        tally.tokens_in += c.tokens_in;
        tally.tokens_out += c.tokens_out;
        let v = parse(&c.text);
        let ok = valid(&v);
        out = Some(v);
        if ok {
            break;
        }
    }
    Ok((out.expect("at least one attempt"), tally))
}

fn check_size(solver: &dyn Solver, prompt: &str) -> Result<(), SolverError> {
    match solver.context_limit() {
        Some(limit) if estimate_tokens(prompt.len()) > limit => {
            Err(SolverError::PromptTooLong { tokens: estimate_tokens(prompt.len()), limit })
        }
        _ => Ok(()),
    }
}

/// `n` votes, concurrently when configured; results in vote order.
fn votes<T: Send>(
    n: usize,
    cfg: &EvalConfig,
    f: impl Fn(usize) -> Result<(T, Tally), SolverError> + Sync + Send,
) -> Result<(Vec<T>, Tally), SolverError> {
    let results: Vec<_> =
        if cfg.parallel_votes && n > 1 { (0..n).into_par_iter().map(&f).collect() } else { (0..n).map(&f).collect() };
    let mut tally = Tally { tokens_in: 0, tokens_out: 0 };
    let mut out = Vec::with_capacity(n);
    for r in results {
        let (v, t) = r?;
        tally.tokens_in += t.tokens_in;
        tally.tokens_out += t.tokens_out;
        out.push(v);
    }
    Ok((out, tally))
}

fn subfunctions(inst: &BenchmarkInstance, granularity: usize) -> Vec<SubFunction> {
    match inst.decomposition(granularity) {
        Some(s) => s.to_vec(),
        None => decompose(&inst.expression, granularity).0,
    }
}

fn blank_record(inst: &BenchmarkInstance, paradigm: Paradigm, solver: &dyn Solver, cfg: &EvalConfig) -> EvalRecord {
    EvalRecord {
        id: inst.id.clone(),
        label: inst.label,
        depth: inst.depth,
        paradigm,
        solver: solver.name(),
        granularity: paradigm.uses_decomposition().then_some(cfg.granularity),
        votes: Vec::new(),
        verdict: Conclusion::Invalid,
        affine_final: false,
        steps: Vec::new(),
        ground_truth: Vec::new(),
        tokens_in: 0,
        tokens_out: 0,
        wall_ms: 0,
        error: None,
        extra: serde_json::Map::new(),
    }
}

/// One-shot paradigm, on the raw expression or on the full sub-function
/// listing. Solver failures are recorded in `error`, never dropped.
pub fn run_oneshot(inst: &BenchmarkInstance, solver: &dyn Solver, cfg: &EvalConfig, with_decomp: bool) -> EvalRecord {
    let start = Instant::now();
    let paradigm = if with_decomp { Paradigm::OneshotDecomp } else { Paradigm::Oneshot };
    let mut rec = blank_record(inst, paradigm, solver, cfg);
    let prompt = if with_decomp {
        render_oneshot_decomp(&subfunctions(inst, cfg.granularity))
    } else {
        render_oneshot(&inst.expression)
    };
    let result = check_size(solver, &prompt).and_then(|_| {
        votes(cfg.votes_for(solver), cfg, |v| {
            sample(
                solver,
                cfg,
                &inst.id,
                None,
                v,
                &prompt,
                |t| parse_verdict(t).conclusion,
                |c| *c != Conclusion::Invalid,
            )
        })
    });
    match result {
        Ok((vs, tally)) => {
            rec.verdict = vote_conclusion(&vs);
            rec.votes = vs;
            rec.tokens_in = tally.tokens_in;
            rec.tokens_out = tally.tokens_out;
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    if cfg.record_timing {
        rec.wall_ms = start.elapsed().as_millis() as u64;
    }
    rec
}

/// Agentic paradigm: one localized call per sub-function in order, with the
/// full (`focused = false`) or parents-only context of earlier answers.
pub fn run_agentic(inst: &BenchmarkInstance, solver: &dyn Solver, cfg: &EvalConfig, focused: bool) -> EvalRecord {
    let start = Instant::now();
    let paradigm = if focused { Paradigm::AgenticFocused } else { Paradigm::AgenticFull };
    let mut rec = blank_record(inst, paradigm, solver, cfg);
    let subs = subfunctions(inst, cfg.granularity);
    let graph = DependencyGraph::of(&subs);
    rec.ground_truth = ground_truth_states(&subs);
    let n = cfg.votes_for(solver);
    let mut answers: BTreeMap<usize, StepState> = BTreeMap::new();
    for sub in &subs {
        let ctx = if focused {
            focused_context(sub.index, &subs, &graph, &answers)
        } else {
            full_context(sub.index, &subs, &answers)
        };
        let ctx = match ctx {
            Ok(c) => c,
            Err(e) => {
                rec.error = Some(e.to_string());
                break;
            }
        };
        let prompt = render_agentic(&ctx, sub);
        let step = Some(sub.index);
        let result = check_size(solver, &prompt).and_then(|_| {
            votes(n, cfg, |v| sample(solver, cfg, &inst.id, step, v, &prompt, parse_step, |s| !s.is_invalid()))
        });
        match result {
            Ok((vs, tally)) => {
                let state = vote_step(&vs);
                rec.tokens_in += tally.tokens_in;
                rec.tokens_out += tally.tokens_out;
                rec.steps.push(StepRecord { index: sub.index, votes: vs, state, prompt_chars: prompt.len() });
                answers.insert(sub.index, state);
            }
            Err(e) => {
                rec.error = Some(e.to_string());
                break;
            }
        }
    }
    if rec.error.is_none() {
        let last = rec.steps.last().map_or(StepCurvature::Invalid, |s| s.state.curvature);
        rec.verdict = match last {
            StepCurvature::Affine => {
                rec.affine_final = true;
                Conclusion::Convex
            }
            StepCurvature::Convex => Conclusion::Convex,
            StepCurvature::Concave => Conclusion::Concave,
            StepCurvature::Neither => Conclusion::Neither,
            StepCurvature::Invalid => Conclusion::Invalid,
        };
    }
    if cfg.record_timing {
        rec.wall_ms = start.elapsed().as_millis() as u64;
    }
    rec
}

pub fn run_instance(inst: &BenchmarkInstance, paradigm: Paradigm, solver: &dyn Solver, cfg: &EvalConfig) -> EvalRecord {
    match paradigm {
        Paradigm::Oneshot => run_oneshot(inst, solver, cfg, false),
        Paradigm::OneshotDecomp => run_oneshot(inst, solver, cfg, true),
        Paradigm::AgenticFull => run_agentic(inst, solver, cfg, false),
        Paradigm::AgenticFocused => run_agentic(inst, solver, cfg, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::solver::Fallback;
    use crate::eval::{first_error_position, RuleOracle, ScriptedResponse, ScriptedSolver};
    use crate::synth::{sample_chain, sample_neither, Label, SynthesisTarget};

    fn cfg() -> EvalConfig {
        EvalConfig { record_timing: false, ..EvalConfig::default() }
    }

    #[test]
    fn voting() {
        use Conclusion::*;
        let mut v = vec![Convex; 30];
        v.extend(vec![Neither; 20]);
        v.extend(vec![Invalid; 14]);
        assert_eq!(vote_conclusion(&v), Convex);
        assert_eq!(vote_conclusion(&[Convex, Neither]), Neither);
        assert_eq!(vote_conclusion(&[Convex, Concave]), Convex);
        assert_eq!(vote_conclusion(&[Invalid, Invalid]), Invalid);
        assert_eq!(vote_conclusion(&[]), Invalid);
        let s = vote_step(&[
            StepState::new(StepCurvature::Convex, StepRange::Invalid),
            StepState::new(StepCurvature::Invalid, StepRange::Pos),
        ]);
        assert_eq!(s, StepState::new(StepCurvature::Convex, StepRange::Pos));
        assert_eq!(vote_step(&[StepState::INVALID]), StepState::INVALID);
    }

    #[test]
    fn oracle_every_paradigm() {
        for label in [Label::Convex, Label::Concave] {
            let inst = sample_chain(&SynthesisTarget::new(label, 12, 4)).unwrap();
            for p in Paradigm::ALL {
                let r = run_instance(&inst, p, &RuleOracle, &cfg());
                assert!(r.is_correct(), "{p} {label}: {:?}", r.verdict);
                assert_eq!(r.votes.len(), if p.is_agentic() { 0 } else { 1 });
                if p.is_agentic() {
                    assert_eq!(first_error_position(&r), None);
                    assert_eq!(r.steps.len(), r.ground_truth.len());
                }
            }
        }
        let inst = sample_neither(&SynthesisTarget::new(Label::Neither, 6, 4)).unwrap();
        for p in Paradigm::ALL {
            assert!(run_instance(&inst, p, &RuleOracle, &cfg()).is_correct());
        }
    }

    #[test]
    fn json_retries_and_tokens() {
        let s = ScriptedSolver::new(
            vec![ScriptedResponse { attempt: Some(0), ..ScriptedResponse::text("thinking...") }],
            Fallback::Text(r#"{"conclusion":"concave"}"#.into()),
        );
        let inst = sample_chain(&SynthesisTarget::new(Label::Concave, 3, 1)).unwrap();
        let c = EvalConfig { n_votes: Some(3), ..cfg() };
        let r = run_oneshot(&inst, &s, &c, false);
        assert_eq!(r.verdict, Conclusion::Concave);
        assert_eq!(r.votes, vec![Conclusion::Concave; 3]);
        assert_eq!(r.tokens_out, 3 * (estimate_tokens(11) + estimate_tokens(24)));
        let always_bad = ScriptedSolver::new(vec![], Fallback::Text("?".into()));
        let r = run_oneshot(&inst, &always_bad, &c, false);
        assert_eq!(r.verdict, Conclusion::Invalid);
        assert!(!r.is_correct());
    }

    #[test]
    fn failures_are_recorded() {
        let inst = sample_chain(&SynthesisTarget::new(Label::Convex, 3, 1)).unwrap();
        let fail = ScriptedSolver::new(vec![], Fallback::Fail);
        for p in Paradigm::ALL {
            let r = run_instance(&inst, p, &fail, &cfg());
            assert!(r.error.is_some());
        }
    }

    #[test]
    fn deterministic_records() {
        let inst = sample_chain(&SynthesisTarget::new(Label::Convex, 15, 2)).unwrap();
        let s = ScriptedSolver::inject([(2, r#"{"curvature":"concave","range":"any"}"#.to_string())]);
        let c = EvalConfig { n_votes: Some(4), ..cfg() };
        let a = serde_json::to_string(&run_agentic(&inst, &s, &c, true)).unwrap();
        let b = serde_json::to_string(&run_agentic(&inst, &s, &c, true)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn focused_prompts_are_no_longer() {
        let inst = sample_chain(&SynthesisTarget::new(Label::Convex, 30, 9)).unwrap();
        let full = run_agentic(&inst, &RuleOracle, &cfg(), false);
        let foc = run_agentic(&inst, &RuleOracle, &cfg(), true);
        for (f, g) in full.steps.iter().zip(&foc.steps) {
            assert!(g.prompt_chars <= f.prompt_chars);
        }
    }
}
