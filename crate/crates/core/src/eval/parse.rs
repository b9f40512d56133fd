//! Extraction of solver answers from free-form completions.

use std::sync::OnceLock;

use regex::Regex;
use serde_json::{Map, Value};

use super::{Conclusion, StepCurvature, StepRange, StepState, Verdict};

/// Removes Markdown code-fence lines, keeping their contents.
fn strip_fences(text: &str) -> String {
    text.lines().filter(|l| !l.trim_start().starts_with("```")).collect::<Vec<_>>().join("\n")
}

/// Spans of balanced `{...}` blocks, string-aware, outermost only.
fn object_spans(text: &str) -> Vec<(usize, usize)> {
    let bytes = text.as_bytes();
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    let mut in_str = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate() {
        if in_str {
            match (escaped, b) {
                (true, _) => escaped = false,
                (false, b'\\') => escaped = true,
                (false, b'"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' if depth > 0 => in_str = true,
            b'{' => {
                if depth == 0 {
                    start = i;
                }
                depth += 1;
            }
            b'}' if depth > 0 => {
                depth -= 1;
                if depth == 0 {
                    spans.push((start, i + 1));
                }
            }
            _ => {}
        }
    }
    spans
}

/// The last JSON object in `text` that has key `key`.
fn last_object_with(text: &str, key: &str) -> Option<Map<String, Value>> {
    let text = strip_fences(text);
    object_spans(&text).into_iter().rev().find_map(|(a, b)| match serde_json::from_str(&text[a..b]) {
        Ok(Value::Object(m)) if m.contains_key(key) => Some(m),
        _ => None,
    })
}

fn conclusion_phrase() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)\bconclusion\b[^.\n{}]{0,40}?\b(convex|concave|neither)\b").expect("static regex")
    })
}

/// Last JSON object with a valid `conclusion`; failing that, the last
/// sentence of the form "conclusion ... <class>". Otherwise invalid.
pub fn parse_verdict(text: &str) -> Verdict {
    let raw = text.to_string();
    if let Some(obj) = last_object_with(text, "conclusion") {
        let conclusion =
            obj.get("conclusion").and_then(Value::as_str).and_then(Conclusion::parse).unwrap_or(Conclusion::Invalid);
        let analysis_text = obj.get("analysis").and_then(Value::as_str).unwrap_or_default().to_string();
        return Verdict { conclusion, analysis_text, raw };
    }
    let conclusion = conclusion_phrase()
        .captures_iter(text)
        .last()
        .and_then(|c| Conclusion::parse(&c[1]))
        .unwrap_or(Conclusion::Invalid);
    Verdict { conclusion, analysis_text: String::new(), raw }
}

/// Last JSON object carrying `curvature`; each field validated on its own.
pub fn parse_step(text: &str) -> StepState {
    let Some(obj) = last_object_with(text, "curvature") else {
        return StepState::INVALID;
    };
    let field = |k: &str| obj.get(k).and_then(Value::as_str);
    StepState {
        curvature: field("curvature").and_then(StepCurvature::parse).unwrap_or(StepCurvature::Invalid),
        range: field("range").and_then(StepRange::parse).unwrap_or(StepRange::Invalid),
    }
}
