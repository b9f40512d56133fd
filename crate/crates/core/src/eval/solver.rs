//! The solver interface and its scripted and remote implementations.

use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::oracle::RuleOracle;
use super::prompt::estimate_tokens;

/// One completion request. Everything but `prompt` is bookkeeping that
/// scripted solvers key on and remote solvers use for seeding.
#[derive(Clone, Debug)]
pub struct Request<'a> {
    pub prompt: &'a str,
    pub instance: &'a str,
    /// 1-based agentic step, `None` for one-shot prompts.
    pub step: Option<usize>,
    pub vote: usize,
    /// 0 for the first try, then one per JSON retry.
    pub attempt: usize,
    pub seed: u64,
    pub temperature: f64,
    pub max_output_tokens: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub tokens_in: u64,
    pub tokens_out: u64,
}

impl Completion {
    /// Completion whose token counts are estimated from character counts.
    pub fn estimated(prompt: &str, text: String) -> Self {
        Completion { tokens_in: estimate_tokens(prompt.len()), tokens_out: estimate_tokens(text.len()), text }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("prompt needs about {tokens} tokens but the solver accepts {limit}")]
    PromptTooLong { tokens: u64, limit: u64 },
    #[error("solver configuration: {0}")]
    Config(String),
}

pub trait Solver: Send + Sync {
    fn name(&self) -> String;

    fn generate(&self, req: &Request<'_>) -> Result<Completion, SolverError>;

    /// Maximum prompt size in tokens, if bounded.
    fn context_limit(&self) -> Option<u64> {
        None
    }

    /// Whether repeated samples can differ, so voting is meaningful.
    fn supports_votes(&self) -> bool {
        true
    }
}

/// A canned reply, used when every given key matches the request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<usize>,
    pub text: String,
}

impl ScriptedResponse {
    pub fn text(text: impl Into<String>) -> Self {
        ScriptedResponse { instance: None, step: None, vote: None, attempt: None, text: text.into() }
    }

    pub fn at_step(step: usize, text: impl Into<String>) -> Self {
        ScriptedResponse { step: Some(step), ..Self::text(text) }
    }

    fn matches(&self, r: &Request<'_>) -> bool {
        self.instance.as_deref().is_none_or(|i| i == r.instance)
            && self.step.is_none_or(|s| Some(s) == r.step)
            && self.vote.is_none_or(|v| v == r.vote)
            && self.attempt.is_none_or(|a| a == r.attempt)
    }
}

/// What a scripted solver does when no response matches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Answer like [`RuleOracle`].
    Oracle,
    Text(String),
    /// Transport error, to exercise failure paths.
    Fail,
}

/// Replays fixtures: the first matching response wins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScriptedSolver {
    pub responses: Vec<ScriptedResponse>,
    pub fallback: Fallback,
}

impl ScriptedSolver {
    pub fn new(responses: Vec<ScriptedResponse>, fallback: Fallback) -> Self {
        ScriptedSolver { responses, fallback }
    }

    /// Oracle answers everywhere except at the given steps.
    pub fn inject(errors: impl IntoIterator<Item = (usize, String)>) -> Self {
        let responses = errors.into_iter().map(|(s, t)| ScriptedResponse::at_step(s, t)).collect();
        ScriptedSolver { responses, fallback: Fallback::Oracle }
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }
}

impl Solver for ScriptedSolver {
    fn name(&self) -> String {
        "scripted".into()
    }

    fn generate(&self, req: &Request<'_>) -> Result<Completion, SolverError> {
        if let Some(r) = self.responses.iter().find(|r| r.matches(req)) {
            return Ok(Completion::estimated(req.prompt, r.text.clone()));
        }
        match &self.fallback {
            Fallback::Oracle => RuleOracle.generate(req),
            Fallback::Text(t) => Ok(Completion::estimated(req.prompt, t.clone())),
            Fallback::Fail => Err(SolverError::Transport("scripted failure".into())),
        }
    }
}

/// Shared rate limiter: `rate` permits per second, bursts up to `capacity`.
#[derive(Debug)]
pub struct TokenBucket {
    rate: f64,
    capacity: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(rate: f64, capacity: f64) -> Self {
        let capacity = capacity.max(1.0);
        TokenBucket { rate, capacity, state: Mutex::new((capacity, Instant::now())) }
    }

    /// Blocks until a permit is available. A non-positive rate never blocks.
    pub fn acquire(&self) {
        if self.rate <= 0.0 {
            return;
        }
        loop {
            let wait = {
                let mut st = self.state.lock().unwrap_or_else(|e| e.into_inner());
                let now = Instant::now();
                st.0 = (st.0 + now.duration_since(st.1).as_secs_f64() * self.rate).min(self.capacity);
                st.1 = now;
                if st.0 >= 1.0 {
                    st.0 -= 1.0;
                    return;
                }
                (1.0 - st.0) / self.rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HttpChatConfig {
    /// Base URL (e.g. `http://host/v1`) or a full `.../chat/completions` URL.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer key; unset means no header.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Transport retries after the first try.
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
    pub requests_per_second: f64,
    pub burst: f64,
    pub context_limit_tokens: Option<u64>,
}

impl HttpChatConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        HttpChatConfig {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 600,
            max_retries: 3,
            backoff_base_ms: 500,
            backoff_cap_ms: 8000,
            requests_per_second: 4.0,
            burst: 8.0,
            context_limit_tokens: None,
        }
    }

    pub fn url(&self) -> String {
        let base = self.endpoint.trim_end_matches('/');
        if base.ends_with("/chat/completions") {
            base.to_string()
        } else {
            format!("{base}/chat/completions")
        }
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let ms = self.backoff_base_ms.saturating_mul(1u64 << attempt.min(20));
        Duration::from_millis(ms.min(self.backoff_cap_ms))
    }
}

/// OpenAI-compatible chat-completions client.
pub struct HttpChat {
    cfg: HttpChatConfig,
    agent: ureq::Agent,
    bucket: TokenBucket,
    api_key: Option<String>,
}

enum Attempt {
    Done(Completion),
    Retry(String),
    Fatal(String),
}

impl HttpChat {
    pub fn new(cfg: HttpChatConfig) -> Result<Self, SolverError> {
        if cfg.endpoint.trim().is_empty() {
            return Err(SolverError::Config("http_chat needs an endpoint".into()));
        }
        if cfg.model.trim().is_empty() {
            return Err(SolverError::Config("http_chat needs a model name".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .into();
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        let bucket = TokenBucket::new(cfg.requests_per_second, cfg.burst);
        Ok(HttpChat { cfg, agent, bucket, api_key })
    }

    pub fn config(&self) -> &HttpChatConfig {
        &self.cfg
    }

    fn body(&self, req: &Request<'_>) -> Value {
        json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": req.prompt}],
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
            "n": 1,
            "seed": req.seed,
        })
    }

    fn attempt(&self, url: &str, body: &Value, req: &Request<'_>) -> Attempt {
        self.bucket.acquire();
        let mut call = self.agent.post(url).header("Content-Type", "application/json");
        if let Some(k) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {k}"));
        }
        let mut resp = match call.send(body.to_string()) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(e.to_string()),
        };
        let status = resp.status().as_u16();
        let text = match resp.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        if status == 429 || status >= 500 {
            return Attempt::Retry(format!("HTTP {status}: {}", snippet(&text)));
        }
        if status >= 400 {
            return Attempt::Fatal(format!("HTTP {status}: {}", snippet(&text)));
        }
        match parse_chat_response(&text, req.prompt) {
            Ok(c) => Attempt::Done(c),
            Err(e) => Attempt::Fatal(e),
        }
    }
}

fn snippet(s: &str) -> String {
    s.chars().take(300).collect()
}

/// First choice's content plus usage; usage falls back to estimates.
pub(crate) fn parse_chat_response(text: &str, prompt: &str) -> Result<Completion, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| format!("malformed response JSON: {e}"))?;
    let content = v
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| format!("response lacks choices[0].message.content: {}", snippet(text)))?
        .to_string();
    let est = Completion::estimated(prompt, content);
    let usage = |k: &str| v.pointer(&format!("/usage/{k}")).and_then(Value::as_u64);
    Ok(Completion {
        tokens_in: usage("prompt_tokens").unwrap_or(est.tokens_in),
        tokens_out: usage("completion_tokens").unwrap_or(est.tokens_out),
        text: est.text,
    })
}

impl Solver for HttpChat {
    fn name(&self) -> String {
        format!("http_chat:{}", self.cfg.model)
    }

    fn generate(&self, req: &Request<'_>) -> Result<Completion, SolverError> {
        let url = self.cfg.url();
        let body = self.body(req);
        let mut last = String::new();
        for k in 0..=self.cfg.max_retries {
            if k > 0 {
                thread::sleep(self.cfg.backoff(k - 1));
            }
            match self.attempt(&url, &body, req) {
                Attempt::Done(c) => return Ok(c),
                Attempt::Fatal(e) => return Err(SolverError::Transport(format!("{url}: {e}"))),
                Attempt::Retry(e) => last = e,
            }
        }
        Err(SolverError::Transport(format!("{url}: gave up after {} retries: {last}", self.cfg.max_retries)))
    }

    fn context_limit(&self) -> Option<u64> {
        self.cfg.context_limit_tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req<'a>(prompt: &'a str, step: Option<usize>, vote: usize) -> Request<'a> {
        Request { prompt, instance: "a", step, vote, attempt: 0, seed: 0, temperature: 0.1, max_output_tokens: 256 }
    }

    #[test]
    fn scripted_first_match() {
        let s = ScriptedSolver::new(
            vec![
                ScriptedResponse { vote: Some(1), ..ScriptedResponse::at_step(2, "B") },
                ScriptedResponse::at_step(2, "A"),
            ],
            Fallback::Text("Z".into()),
        );
        assert_eq!(s.generate(&req("p", Some(2), 0)).unwrap().text, "A");
        assert_eq!(s.generate(&req("p", Some(2), 1)).unwrap().text, "B");
        assert_eq!(s.generate(&req("p", None, 0)).unwrap().text, "Z");
        let f = ScriptedSolver::new(vec![], Fallback::Fail);
        assert!(matches!(f.generate(&req("p", None, 0)), Err(SolverError::Transport(_))));
    }

    #[test]
    fn scripted_json_round_trip() {
        let s = ScriptedSolver::inject([(3, "{}".to_string())]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(ScriptedSolver::from_json(&j).unwrap(), s);
    }

    #[test]
    fn chat_response_parsing() {
        let t = r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}],"usage":{"prompt_tokens":7,"completion_tokens":2}}"#;
        assert_eq!(parse_chat_response(t, "p").unwrap(), Completion { text: "hi".into(), tokens_in: 7, tokens_out: 2 });
        let t = r#"{"choices":[{"message":{"content":"abcdefgh"}}]}"#;
        assert_eq!(parse_chat_response(t, "pppp").unwrap().tokens_out, 2);
        assert!(parse_chat_response("{}", "p").is_err());
        assert!(parse_chat_response("nope", "p").is_err());
    }

    #[test]
    fn url_and_backoff() {
        let mut c = HttpChatConfig::new("http://h/v1/", "m");
        assert_eq!(c.url(), "http://h/v1/chat/completions");
        c.endpoint = "http://h/x/chat/completions".into();
        assert_eq!(c.url(), "http://h/x/chat/completions");
        assert_eq!(c.backoff(0), Duration::from_millis(500));
        assert_eq!(c.backoff(10), Duration::from_millis(8000));
        assert!(HttpChat::new(HttpChatConfig::new("", "m")).is_err());
    }

    #[test]
    fn bucket_limits_rate() {
        let b = TokenBucket::new(50.0, 1.0);
        let t = Instant::now();
        for _ in 0..6 {
            b.acquire();
        }
        assert!(t.elapsed() >= Duration::from_millis(80));
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let mut c = HttpChatConfig::new("http://127.0.0.1:9/v1", "m");
        c.max_retries = 1;
        c.backoff_base_ms = 1;
        c.timeout_secs = 2;
        let h = HttpChat::new(c).unwrap();
        assert!(matches!(h.generate(&req("p", None, 0)), Err(SolverError::Transport(_))));
    }
}
