//! A solver that answers from the curvature rules.
//!
//! It reads only the rendered prompt, exactly as a remote model would, so it
//! doubles as a check that prompts carry enough information.

use serde_json::json;

use crate::atoms::Curvature;
use crate::dcp::{analyze, analyze_with, certify_state, CertifiedLabel, CurvatureState, RangeMode, RefStates};
use crate::expr::{parse, Expr};

use super::solver::{Completion, Request, Solver, SolverError};
use super::{Conclusion, StepCurvature, StepRange, StepState};

const TAIL_MARKER: &str = "Now, analyze the following function:";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RuleOracle;

fn sub_index(name: &str) -> Option<usize> {
    name.trim().strip_prefix("g_")?.parse().ok()
}

/// Splits `g_i = <body>`.
fn definition(line: &str) -> Option<(usize, Expr)> {
    let (name, body) = line.split_once('=')?;
    Some((sub_index(name)?, parse(body.trim()).ok()?))
}

impl RuleOracle {
    pub fn conclusion_for(e: &Expr) -> Conclusion {
        match analyze(e) {
            Ok(s) => Self::conclusion_of(&s),
            Err(_) => Conclusion::Neither,
        }
    }

    fn conclusion_of(s: &CurvatureState) -> Conclusion {
        match certify_state(s).label {
            CertifiedLabel::Convex => Conclusion::Convex,
            CertifiedLabel::Concave => Conclusion::Concave,
            CertifiedLabel::Uncertified => Conclusion::Neither,
        }
    }

    /// State of a sub-function body given what is known about its references.
    pub fn step_for(body: &Expr, refs: &RefStates) -> StepState {
        match analyze_with(body, refs, RangeMode::Coarse) {
            Ok(s) => StepState::new(StepCurvature::from_curvature(s.curvature), StepRange::from_coarse(s.coarse_range)),
            Err(_) => StepState::new(StepCurvature::Neither, StepRange::Any),
        }
    }

    fn answer(prompt: &str) -> Option<String> {
        let tail = prompt.rsplit_once(TAIL_MARKER).map_or(prompt, |(_, t)| t);
        let lines: Vec<&str> = tail.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if let Some(target) = lines.iter().find_map(|l| l.strip_prefix("Target:")) {
            let mut refs = RefStates::new();
            for l in &lines {
                let Some((def, rest)) = l.split_once("; curvature:") else { continue };
                let (i, _) = definition(def)?;
                let (curv, range) = rest.split_once("; range:")?;
                let c = StepCurvature::parse(curv).unwrap_or(StepCurvature::Neither);
                let r = StepRange::parse(range).unwrap_or(StepRange::Any);
                refs.insert(i, CurvatureState::from_summary(c.to_curvature(), r.to_coarse()));
            }
            let (_, body) = definition(target)?;
            let s = Self::step_for(&body, &refs);
            return Some(json!({"curvature": s.curvature.as_str(), "range": s.range.as_str()}).to_string());
        }
        let f = lines.iter().rev().find_map(|l| l.strip_prefix("f(x) ="))?.trim();
        let (conclusion, how) = if let Some(root) = sub_index(f) {
            Self::listing(&lines, root)?
        } else {
            (Self::conclusion_for(&parse(f).ok()?), "rules applied to the full expression")
        };
        let analysis = format!("Curvature {how}; certified result: {conclusion}.");
        Some(json!({"analysis": analysis, "conclusion": conclusion.as_str()}).to_string())
    }

    /// Precise analysis through a `g_i = ...` listing, in order.
    fn listing(lines: &[&str], root: usize) -> Option<(Conclusion, &'static str)> {
        let mut refs = RefStates::new();
        for l in lines {
            if l.starts_with("f(x)") {
                continue;
            }
            let Some((i, body)) = definition(l) else { continue };
            match analyze_with(&body, &refs, RangeMode::Precise) {
                Ok(s) => refs.insert(i, s),
                Err(_) => {
                    refs.insert(i, CurvatureState::from_summary(Curvature::Unknown, crate::interval::CoarseRange::Any))
                }
            };
        }
        let s = refs.get(&root)?;
        Some((Self::conclusion_of(s), "propagated through each listed sub-function"))
    }
}

impl Solver for RuleOracle {
    fn name(&self) -> String {
        "rule_oracle".into()
    }

    fn generate(&self, req: &Request<'_>) -> Result<Completion, SolverError> {
        let text = Self::answer(req.prompt).unwrap_or_else(|| "unrecognized prompt".to_string());
        Ok(Completion::estimated(req.prompt, text))
    }

    fn supports_votes(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose;
    use crate::eval::{parse_step, parse_verdict, render_agentic, render_oneshot, render_oneshot_decomp};

    fn ask(prompt: &str) -> String {
        let r = Request {
            prompt,
            instance: "i",
            step: None,
            vote: 0,
            attempt: 0,
            seed: 0,
            temperature: 0.1,
            max_output_tokens: 256,
        };
        RuleOracle.generate(&r).unwrap().text
    }

    #[test]
    fn oneshot_answers() {
        for (s, want) in [
            ("exp(-(0.5x+1))", Conclusion::Convex),
            ("-exp(x)", Conclusion::Concave),
            ("exp(-max(0,x))", Conclusion::Neither),
        ] {
            let e = parse(s).unwrap();
            assert_eq!(parse_verdict(&ask(&render_oneshot(&e))).conclusion, want, "{s}");
            let (subs, _) = decompose(&e, 8);
            assert_eq!(parse_verdict(&ask(&render_oneshot_decomp(&subs))).conclusion, want, "{s}");
        }
    }

    #[test]
    fn agentic_step() {
        let (subs, _) = decompose(&parse("exp(exp(x))").unwrap(), 8);
        let ctx = [(&subs[0], StepState::new(StepCurvature::Convex, StepRange::Pos))];
        let s = parse_step(&ask(&render_agentic(&ctx, &subs[1])));
        assert_eq!(s, StepState::new(StepCurvature::Convex, StepRange::Pos));
        let ctx = [(&subs[0], StepState::new(StepCurvature::Concave, StepRange::Pos))];
        let s = parse_step(&ask(&render_agentic(&ctx, &subs[1])));
        assert_eq!(s.curvature, StepCurvature::Neither);
        let s = parse_step(&ask(&render_agentic(&[], &subs[0])));
        assert_eq!(s, StepState::new(StepCurvature::Convex, StepRange::Pos));
    }

    #[test]
    fn garbage_prompt() {
        assert_eq!(parse_verdict(&ask("hello")).conclusion, Conclusion::Invalid);
    }
}
