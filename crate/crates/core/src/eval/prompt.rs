//! Prompt templates and their rendering.
//!
//! Rendered prompts end with a machine-readable tail that both remote models
//! and [`RuleOracle`](super::RuleOracle) read:
//! `f(x) = <expr>` (one-shot), `g_i = <body>` lines closed by `f(x) = g_k`
//! (one-shot with decomposition), or `g_j = <body>; curvature: c; range: r`
//! context lines followed by `Target: g_i = <body>` (agentic).

use crate::decompose::SubFunction;
use crate::expr::{print, Expr};

use super::StepState;

pub const ONESHOT_TEMPLATE: &str = include_str!("../../assets/oneshot.txt");
pub const ONESHOT_DECOMP_TEMPLATE: &str = include_str!("../../assets/oneshot_decomp.txt");
pub const AGENTIC_TEMPLATE: &str = include_str!("../../assets/agentic.txt");

/// Appended to a prompt whose answer had no usable JSON.
pub const JSON_REMINDER: &str = "Output only the JSON.";

/// Token estimate for character counts (4 characters per token).
pub fn estimate_tokens(chars: usize) -> u64 {
    chars.div_ceil(4) as u64
}

pub fn render_oneshot(e: &Expr) -> String {
    ONESHOT_TEMPLATE.replace("{FUNCTION}", &print(e))
}

/// `g_1 = ...` through `g_k = ...`, then `f(x) = g_k`.
pub fn render_listing(subs: &[SubFunction]) -> String {
    let mut out: Vec<String> = subs.iter().map(SubFunction::definition).collect();
    if let Some(last) = subs.last() {
        out.push(format!("f(x) = {}", last.name));
    }
    out.join("\n")
}

pub fn render_oneshot_decomp(subs: &[SubFunction]) -> String {
    ONESHOT_DECOMP_TEMPLATE.replace("{SUBFUNCTIONS}", &render_listing(subs))
}

pub fn render_context_line(sub: &SubFunction, state: &StepState) -> String {
    let s = state.as_context();
    format!("{}; curvature: {}; range: {}", sub.definition(), s.curvature.as_str(), s.range.as_str())
}

pub fn render_agentic(context: &[(&SubFunction, StepState)], target: &SubFunction) -> String {
    let ctx = if context.is_empty() {
        "(none)".to_string()
    } else {
        context.iter().map(|(s, st)| render_context_line(s, st)).collect::<Vec<_>>().join("\n")
    };
    AGENTIC_TEMPLATE.replace("{CONTEXT}", &ctx).replace("{TARGET}", &target.definition())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose;
    use crate::eval::{StepCurvature, StepRange};
    use crate::expr::parse;

    #[test]
    fn templates_have_placeholders() {
        assert!(ONESHOT_TEMPLATE.contains("{FUNCTION}"));
        assert!(ONESHOT_DECOMP_TEMPLATE.contains("{SUBFUNCTIONS}"));
        assert!(AGENTIC_TEMPLATE.contains("{CONTEXT}") && AGENTIC_TEMPLATE.contains("{TARGET}"));
        for t in [ONESHOT_TEMPLATE, ONESHOT_DECOMP_TEMPLATE, AGENTIC_TEMPLATE] {
            assert!(t.contains("Only this JSON format, nothing else"));
            assert!(t.contains("log(1+exp(u)) is convex if u is convex/affine"));
        }
    }

    #[test]
    fn rendering() {
        let e = parse("exp(-x)").unwrap();
        assert!(render_oneshot(&e).trim_end().ends_with("f(x) = exp(-x)"));
        let (subs, _) = decompose(&parse("exp(exp(x))").unwrap(), 8);
        assert_eq!(render_listing(&subs), "g_1 = exp(x)\ng_2 = exp(g_1)\nf(x) = g_2");
        let st = StepState::new(StepCurvature::Invalid, StepRange::Pos);
        let p = render_agentic(&[(&subs[0], st)], &subs[1]);
        assert!(p.contains("g_1 = exp(x); curvature: neither; range: pos\nTarget: g_2 = exp(g_1)"));
        assert!(render_agentic(&[], &subs[0]).contains("(none)"));
        assert_eq!(estimate_tokens(9), 3);
    }
}
