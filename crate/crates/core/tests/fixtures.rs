//! Fixed expressions with hand-checked structure.

use std::sync::Mutex;

use deepcvx::dcp::{analyze, certified_label, CertifiedLabel};
use deepcvx::decompose::{decompose, recompose, DependencyGraph};
use deepcvx::eval::{
    parse_verdict, run_agentic, run_oneshot, Completion, Conclusion, EvalConfig, Fallback, Request, RuleOracle,
    ScriptedSolver, Solver, SolverError,
};
use deepcvx::expr::{evaluate, parse, print};
use deepcvx::synth::{BenchmarkInstance, Label};

const AST: &str = include_str!("fixtures/ast_depth8.txt");
const LONG: &str = include_str!("fixtures/lazy_depth_instance.txt");

fn instance(id: &str, label: Label, expr: &str) -> BenchmarkInstance {
    let e = parse(expr.trim()).unwrap();
    serde_json::from_value(serde_json::json!({
        "id": id, "label": label, "depth": e.structural_depth(), "expression": print(&e),
        "atom_trace": [], "seed": 0
    }))
    .unwrap()
}

#[test]
fn ast_fixture_structure() {
    let e = parse(AST.trim()).unwrap();
    // Eight tree nodes, five composition layers.
    assert_eq!(e.structural_depth(), 5);
    assert_eq!(print(&e), AST.trim());
    let (subs, graph) = decompose(&e, 10);
    let forms: Vec<String> = subs.iter().map(|s| s.printed_form()).collect();
    assert_eq!(
        forms,
        [
            "-0.342x+1.24",
            "0.656g_1+0.76",
            "-exp(g_2)",
            "-||1.37x+0.0336||_1",
            "-0.263x-1.33",
            "0.534g_3+0.238g_4+g_5",
            "exp(-g_6)",
            "exp(g_7)",
        ]
    );
    assert_eq!(graph.pa(6), vec![3, 4, 5]);
    assert_eq!(graph, DependencyGraph::of(&subs));
    assert_eq!(recompose(&subs).unwrap(), e);
    assert_eq!(evaluate(&subs[0].body, 0.0), Some(1.24));
    assert_eq!(parse("exp(0.656(-0.342x+1.24)+0.76)").unwrap().structural_depth(), 2);
    // exp(exp(concave-negated)) is certified convex.
    assert_eq!(certified_label(&e).unwrap().label, CertifiedLabel::Convex);
}

/// Delegates to the oracle and keeps every prompt.
struct Recorder(Mutex<Vec<(Option<usize>, String)>>);

impl Solver for Recorder {
    fn name(&self) -> String {
        "recorder".into()
    }

    fn generate(&self, req: &Request<'_>) -> Result<Completion, SolverError> {
        self.0.lock().unwrap().push((req.step, req.prompt.to_string()));
        RuleOracle.generate(req)
    }
}

#[test]
fn ast_fixture_focused_prompt() {
    let inst = instance("ast", Label::Convex, AST);
    let cfg = EvalConfig { granularity: 10, record_timing: false, ..EvalConfig::default() };
    let rec = Recorder(Mutex::new(Vec::new()));
    let out = run_agentic(&inst, &rec, &cfg, true);
    assert_eq!(out.steps.len(), 8);
    assert_eq!(out.verdict, Conclusion::Convex);
    let prompts = rec.0.into_inner().unwrap();
    let (_, p6) = prompts.iter().find(|(s, _)| *s == Some(6)).unwrap();
    let ctx: Vec<&str> = p6.lines().filter(|l| l.contains("; curvature:")).collect();
    assert_eq!(
        ctx,
        [
            "g_3 = -exp(g_2); curvature: concave; range: neg",
            "g_4 = -||1.37x+0.0336||_1; curvature: concave; range: any",
            "g_5 = -0.263x-1.33; curvature: affine; range: any",
        ]
    );
    assert!(p6.contains("Target: g_6 = 0.534g_3+0.238g_4+g_5"));
}

#[test]
fn long_fixture_is_certified() {
    let e = parse(LONG.trim()).unwrap();
    assert_eq!(parse(&print(&e)).unwrap(), e);
    let s = analyze(&e).unwrap();
    assert_eq!(certified_label(&e).unwrap().label, CertifiedLabel::Convex, "{s:?}");
    let counts: Vec<usize> = [10, 50, 100].iter().map(|&g| decompose(&e, g).0.len()).collect();
    assert!(counts[0] > counts[1] && counts[1] > counts[2], "{counts:?}");
    for g in [10, 50, 100] {
        assert_eq!(recompose(&decompose(&e, g).0).unwrap(), e);
    }
}

#[test]
fn prose_answer_is_read_as_neither() {
    let text = "Splitting the terms, several pieces look convex and several look concave.\n\
                Mixing them gives no clear curvature.\n\nTherefore, the conclusion should be neither.";
    assert_eq!(parse_verdict(text).conclusion, Conclusion::Neither);
    let inst = instance("long", Label::Convex, LONG);
    let s = ScriptedSolver::new(vec![], Fallback::Text(text.into()));
    let rec = run_oneshot(&inst, &s, &EvalConfig { n_votes: Some(1), ..EvalConfig::default() }, false);
    assert_eq!(rec.verdict, Conclusion::Neither);
    assert!(!rec.is_correct());
}
