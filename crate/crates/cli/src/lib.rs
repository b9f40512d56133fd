//! Command implementations behind the `deepcvx` binary.
//!
//! Every command returns a [`CliError`] whose [`CliError::exit_code`] is the
//! process status: 1 usage or I/O, 2 validation failure, 3 transport failure.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use deepcvx::dcp::{analyze, certified_label, node_table, CertifiedLabel};
use deepcvx::decompose::{decompose, recompose};
use deepcvx::eval::{
    compute_metrics, run_instance, EvalConfig, EvalRecord, Fallback, HttpChat, HttpChatConfig, Paradigm, RuleOracle,
    ScriptedSolver, Solver,
};
use deepcvx::expr::{evaluate, parse, Expr};
use deepcvx::io::{build_report, read_jsonl, write_jsonl, JsonlWriter, KvConfig};
use deepcvx::jensen::{jensen_scan, reverify, Direction, JensenConfig};
use deepcvx::synth::{generate, BenchmarkInstance, DatasetSpec, Label, DEFAULT_GRANULARITIES};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Transport(_) => 3,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "deepcvx",
    version,
    about = "Deep compositions with certified convexity: synthesis, checks and solver evaluation"
)]
pub struct Cli {
    /// Key-value file (`key = value` lines) supplying defaults for flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate labeled instances as JSONL.
    Synthesize(SynthesizeArgs),
    /// Curvature state of one expression.
    Check(CheckArgs),
    /// Re-verify the labels of an instance file.
    Validate(ValidateArgs),
    /// Sub-functions of an expression or of every instance in a file.
    Decompose(DecomposeArgs),
    /// Run a solver over instances and write records as JSONL.
    Evaluate(EvaluateArgs),
    /// Per-depth, per-paradigm metrics table.
    Report(ReportArgs),
    /// The atom registry as JSON.
    Atoms,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    /// convex, concave, neither or all.
    #[arg(long)]
    pub label: Option<String>,
    /// Comma-separated depths.
    #[arg(long)]
    pub depth: Option<String>,
    /// Instances per (label, depth).
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exclude atoms outside the strict table.
    #[arg(long)]
    pub strict_atoms: bool,
    #[arg(long)]
    pub sibling_max_depth: Option<usize>,
    /// Comma-separated decomposition lengths stored with each instance.
    #[arg(long)]
    pub granularities: Option<String>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    pub expression: String,
    /// Also print the state of every sub-expression.
    #[arg(long)]
    pub table: bool,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Per-instance JSONL report.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Expression to decompose (or use --in).
    pub expression: Option<String>,
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// oneshot, oneshot_decomp, agentic_full, agentic_focused, or a comma list.
    #[arg(long)]
    pub paradigm: Option<String>,
    /// rule_oracle, scripted or http_chat.
    #[arg(long)]
    pub solver: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, env = "DEEPCVX_ENDPOINT")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    /// Fixture JSON for the scripted solver.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub granularity: Option<usize>,
    #[arg(long)]
    pub n_votes: Option<usize>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_output_tokens: Option<u64>,
    /// Prompt size limit in tokens; larger prompts fail the record.
    #[arg(long)]
    pub context_limit: Option<u64>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluate only the first N instances.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Zero `wall_ms` so identical runs give identical files.
    #[arg(long)]
    pub no_timing: bool,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long)]
    pub instances: PathBuf,
    /// Also write the report as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Flag value, else config-file value, else default; records the choice.
struct Resolver<'a> {
    file: &'a KvConfig,
    resolved: KvConfig,
}

impl<'a> Resolver<'a> {
    fn new(file: &'a KvConfig) -> Self {
        Resolver { file, resolved: KvConfig::default() }
    }

    fn get<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => v,
            None => match self.file.get(key) {
                Some(s) => s.parse().map_err(|e| usage(format!("config key {key}: {e}")))?,
                None => default,
            },
        };
        self.resolved.set(key, v.to_string());
        Ok(v)
    }

    fn opt<T: FromStr + ToString>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(s) => Some(s.parse().map_err(|e| usage(format!("config key {key}: {e}")))?),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.resolved.set(key, v.to_string());
        }
        Ok(v)
    }

    fn flag(&mut self, key: &str, flag: bool) -> Result<bool, CliError> {
        let v = flag || self.file.get(key).is_some_and(|s| matches!(s, "true" | "1" | "yes"));
        self.resolved.set(key, v);
        Ok(v)
    }
}

fn config_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

fn write_config(out: &Path, cfg: &KvConfig) -> Result<(), CliError> {
    std::fs::write(config_path(out), cfg.render()).map_err(|e| usage(format!("{}: {e}", out.display())))
}

fn list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|e| usage(format!("bad {what} {p:?}: {e}"))))
        .collect()
}

fn labels(s: &str) -> Result<Vec<Label>, CliError> {
    if s.trim() == "all" {
        Ok(Label::ALL.to_vec())
    } else {
        list(s, "label")
    }
}

fn emit(v: &impl Serialize) -> Result<(), CliError> {
    let s = serde_json::to_string_pretty(v).map_err(usage)?;
    print_out(&format!("{s}\n"));
    Ok(())
}

/// Stdout write that tolerates a closed pipe.
fn print_out(s: &str) {
    let _ = std::io::stdout().lock().write_all(s.as_bytes());
}

pub fn cmd_synthesize(a: SynthesizeArgs, file: &KvConfig) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    r.resolved.set("command", "synthesize");
    let label_s = r.get("label", a.label, "all".to_string())?;
    let depth_s = r.get("depth", a.depth, "2,5,10,20,40,60,80,100".to_string())?;
    let count = r.get("count", a.count, 100)?;
    let seed = r.get("seed", a.seed, 0)?;
    let out: PathBuf = r.get("out", a.out.map(|p| p.display().to_string()), String::new())?.into();
    let strict = r.flag("strict_atoms", a.strict_atoms)?;
    let sib = r.get("sibling_max_depth", a.sibling_max_depth, 2)?;
    let gran_s = r.get("granularities", a.granularities, DEFAULT_GRANULARITIES.map(|g| g.to_string()).join(","))?;
    if out.as_os_str().is_empty() {
        return Err(usage("synthesize needs --out"));
    }
    let mut spec = DatasetSpec::new(labels(&label_s)?, list(&depth_s, "depth")?, count, seed);
    spec.template.strict_atoms = strict;
    spec.template.sibling_max_depth = sib;
    spec.granularities = list(&gran_s, "granularity")?;
    if spec.granularities.iter().any(|&g| g < 8) {
        return Err(usage("granularities must be at least 8"));
    }
    if spec.depths.contains(&0) {
        return Err(usage("depths must be at least 1"));
    }
    eprintln!("synthesizing {} instances", spec.labels.len() * spec.depths.len() * count);
    let results = generate(&spec);
    let mut w = JsonlWriter::create(&out).map_err(usage)?;
    let mut failures = Vec::new();
    for res in results {
        match res {
            Ok(inst) => w.write(&inst).map_err(usage)?,
            Err(e) => failures.push(e.to_string()),
        }
    }
    write_config(&out, &r.resolved)?;
    if !failures.is_empty() {
        return Err(CliError::Validation(format!("{} instances failed: {}", failures.len(), failures[0])));
    }
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn parse_expr(s: &str) -> Result<Expr, CliError> {
    parse(s).map_err(|e| usage(format!("cannot parse expression: {e}")))
}

pub fn cmd_check(a: CheckArgs) -> Result<(), CliError> {
    let e = parse_expr(&a.expression)?;
    let s = analyze(&e).map_err(|e| CliError::Validation(e.to_string()))?;
    let cert = certified_label(&e).map_err(|e| CliError::Validation(e.to_string()))?;
    let mut v = json!({
        "expression": e.to_string(),
        "depth": e.structural_depth(),
        "curvature": s.curvature.as_str(),
        "monotonicity": s.monotonicity.as_str(),
        "range": s.range,
        "coarse_range": s.coarse_range,
        "certified": cert.label,
        "affine": cert.affine,
    });
    if a.table {
        v["nodes"] =
            serde_json::to_value(node_table(&e).map_err(|e| CliError::Validation(e.to_string()))?).map_err(usage)?;
    }
    emit(&v)
}

#[derive(Serialize)]
struct ValidationRow {
    id: String,
    label: Label,
    depth: usize,
    ok: bool,
    problems: Vec<String>,
    valid_samples: usize,
    violations: usize,
}

fn finite_fraction(e: &Expr) -> f64 {
    let ok = (0..=60).filter(|k| evaluate(e, -3.0 + 0.1 * *k as f64).is_some()).count();
    ok as f64 / 61.0
}

/// All label and structure checks for one instance.
pub fn validate_instance(inst: &BenchmarkInstance, jensen: &JensenConfig) -> (bool, Vec<String>, usize, usize) {
    let e = &inst.expression;
    let mut problems = Vec::new();
    if e.structural_depth() != inst.depth {
        problems.push(format!("depth {} but expression has {}", inst.depth, e.structural_depth()));
    }
    if finite_fraction(e) < 0.9 {
        problems.push("finite on less than 90% of the grid".into());
    }
    if parse(&e.to_string()).ok().as_ref() != Some(e) {
        problems.push("print/parse round trip differs".into());
    }
    for (g, subs) in &inst.decompositions {
        if recompose(subs).ok().as_ref() != Some(e) {
            problems.push(format!("decomposition {g} does not recompose"));
        }
    }
    let cfg = JensenConfig { seed: inst.seed, ..jensen.clone() };
    let (mut valid, mut violations) = (0, 0);
    match inst.label {
        Label::Convex | Label::Concave => {
            let want = if inst.label == Label::Convex { CertifiedLabel::Convex } else { CertifiedLabel::Concave };
            match certified_label(e) {
                Ok(c) if c.label == want && !c.affine => {}
                Ok(c) => problems.push(format!("certified as {:?}", c.label)),
                Err(err) => problems.push(err.to_string()),
            }
            match jensen_scan(e, &cfg) {
                Ok(rep) => {
                    valid = rep.valid_samples;
                    violations = if inst.label == Label::Convex {
                        rep.convex_violation_count
                    } else {
                        rep.concave_violation_count
                    };
                    if violations > 0 {
                        problems.push(format!("{violations} Jensen violations"));
                    }
                }
                Err(err) => problems.push(err.to_string()),
            }
        }
        Label::Neither => match &inst.counterexamples {
            Some(cx) => {
                if !reverify(e, &cx.convexity, Direction::Convexity, cfg.violation_margin) {
                    problems.push("convexity counterexample does not re-verify".into());
                }
                if !reverify(e, &cx.concavity, Direction::Concavity, cfg.violation_margin) {
                    problems.push("concavity counterexample does not re-verify".into());
                }
            }
            None => problems.push("missing counterexamples".into()),
        },
    }
    (problems.is_empty(), problems, valid, violations)
}

pub fn cmd_validate(a: ValidateArgs, file: &KvConfig) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let samples = r.get("samples", a.samples, JensenConfig::default().sample_count)?;
    let jensen = JensenConfig { sample_count: samples, ..JensenConfig::default() };
    let insts: Vec<BenchmarkInstance> = read_jsonl(&a.input).map_err(usage)?;
    let rows: Vec<ValidationRow> = insts
        .par_iter()
        .map(|inst| {
            let (ok, problems, valid_samples, violations) = validate_instance(inst, &jensen);
            ValidationRow {
                id: inst.id.clone(),
                label: inst.label,
                depth: inst.depth,
                ok,
                problems,
                valid_samples,
                violations,
            }
        })
        .collect();
    if let Some(out) = &a.out {
        write_jsonl(out, &rows).map_err(usage)?;
    }
    let failed: Vec<&ValidationRow> = rows.iter().filter(|r| !r.ok).collect();
    for f in &failed {
        eprintln!("FAIL {}: {}", f.id, f.problems.join("; "));
    }
    let summary = json!({"instances": rows.len(), "passed": rows.len() - failed.len(), "failed": failed.len()});
    emit(&summary)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("{} of {} instances failed", failed.len(), rows.len())))
    }
}

fn decomposition_json(e: &Expr, max_len: usize) -> serde_json::Value {
    let (subs, graph) = decompose(e, max_len);
    let items: Vec<_> =
        subs.iter().map(|s| json!({"name": s.name, "expr": s.printed_form(), "parents": s.parents})).collect();
    json!({"subfunctions": items, "order": graph.order().iter().map(|i| format!("g_{i}")).collect::<Vec<_>>()})
}

pub fn cmd_decompose(a: DecomposeArgs, file: &KvConfig) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    let max_len = r.get("max_len", a.max_len, 50)?;
    if max_len < 8 {
        return Err(usage("--max-len must be at least 8"));
    }
    match (a.expression, a.input) {
        (Some(s), None) => emit(&decomposition_json(&parse_expr(&s)?, max_len)),
        (None, Some(p)) => {
            let insts: Vec<BenchmarkInstance> = read_jsonl(&p).map_err(usage)?;
            for inst in insts {
                let mut v = decomposition_json(&inst.expression, max_len);
                v["id"] = json!(inst.id);
                print_out(&format!("{v}\n"));
            }
            Ok(())
        }
        _ => Err(usage("decompose needs exactly one of EXPRESSION or --in")),
    }
}

fn paradigms(s: &str) -> Result<Vec<Paradigm>, CliError> {
    if s.trim() == "all" {
        Ok(Paradigm::ALL.to_vec())
    } else {
        list(s, "paradigm")
    }
}

pub fn cmd_evaluate(a: EvaluateArgs, file: &KvConfig) -> Result<(), CliError> {
    let mut r = Resolver::new(file);
    r.resolved.set("command", "evaluate");
    let paradigm_s = r.get("paradigm", a.paradigm, "agentic_focused".to_string())?;
    let solver_s = r.get("solver", a.solver, "rule_oracle".to_string())?;
    let defaults = EvalConfig::default();
    let cfg = EvalConfig {
        temperature: r.get("temperature", a.temperature, defaults.temperature)?,
        n_votes: r.opt("n_votes", a.n_votes)?,
        max_output_tokens: r.get("max_output_tokens", a.max_output_tokens, defaults.max_output_tokens)?,
        seed: r.get("seed", a.seed, defaults.seed)?,
        granularity: r.get("granularity", a.granularity, defaults.granularity)?,
        record_timing: !r.flag("no_timing", a.no_timing)?,
        ..defaults
    };
    cfg.validate().map_err(usage)?;
    let parallelism = r.get("parallelism", a.parallelism, rayon::current_num_threads())?.max(1);
    let limit = r.opt("limit", a.limit)?;
    r.resolved.set("in", a.input.display());
    r.resolved.set("out", a.out.display());
    let solver: Box<dyn Solver> = match solver_s.as_str() {
        "rule_oracle" => Box::new(RuleOracle),
        "scripted" => {
            let path = r.opt("script", a.script.map(|p| p.display().to_string()))?;
            match path {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| usage(format!("{p}: {e}")))?;
                    Box::new(ScriptedSolver::from_json(&text).map_err(|e| usage(format!("{p}: {e}")))?)
                }
                None => Box::new(ScriptedSolver::new(vec![], Fallback::Oracle)),
            }
        }
        "http_chat" => {
            let endpoint = r.opt("endpoint", a.endpoint)?.ok_or_else(|| usage("http_chat needs --endpoint"))?;
            let model = r.opt("model", a.model)?.ok_or_else(|| usage("http_chat needs --model"))?;
            let mut hc = HttpChatConfig::new(endpoint, model);
            hc.api_key_env = r.get("api_key_env", a.api_key_env, hc.api_key_env.clone())?;
            hc.context_limit_tokens = r.opt("context_limit", a.context_limit)?;
            Box::new(HttpChat::new(hc).map_err(usage)?)
        }
        other => return Err(usage(format!("unknown solver {other:?} (rule_oracle, scripted, http_chat)"))),
    };
    let paradigms = paradigms(&paradigm_s)?;
    let mut insts: Vec<BenchmarkInstance> = read_jsonl(&a.input).map_err(usage)?;
    if let Some(n) = limit {
        insts.truncate(n);
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(parallelism).build().map_err(usage)?;
    let jobs: Vec<(usize, Paradigm)> = paradigms.iter().flat_map(|&p| (0..insts.len()).map(move |i| (i, p))).collect();
    eprintln!("evaluating {} runs with {}", jobs.len(), solver.name());
    let solver_ref: &dyn Solver = solver.as_ref();
    let records: Vec<EvalRecord> =
        pool.install(|| jobs.par_iter().map(|&(i, p)| run_instance(&insts[i], p, solver_ref, &cfg)).collect());
    write_jsonl(&a.out, &records).map_err(usage)?;
    write_config(&a.out, &r.resolved)?;
    let mut summary = BTreeMap::new();
    for p in &paradigms {
        let recs: Vec<EvalRecord> = records.iter().filter(|r| r.paradigm == *p).cloned().collect();
        let v = match compute_metrics(&recs) {
            Ok(m) => {
                json!({"macro_f1": m.macro_f1, "recall": m.classes.iter().map(|c| (c.label.as_str(), c.recall)).collect::<BTreeMap<_, _>>()})
            }
            Err(e) => {
                json!({"error": e.to_string(), "accuracy": recs.iter().filter(|r| r.is_correct()).count() as f64 / recs.len().max(1) as f64})
            }
        };
        summary.insert(p.as_str(), v);
    }
    emit(&summary)?;
    let failed: Vec<&EvalRecord> = records.iter().filter(|r| r.error.is_some()).collect();
    if let Some(f) = failed.first() {
        return Err(CliError::Transport(format!(
            "{} of {} runs failed; first ({}): {}",
            failed.len(),
            records.len(),
            f.id,
            f.error.as_deref().unwrap_or_default()
        )));
    }
    Ok(())
}

pub fn cmd_report(a: ReportArgs) -> Result<(), CliError> {
    let recs: Vec<EvalRecord> = read_jsonl(&a.records).map_err(usage)?;
    let insts: Vec<BenchmarkInstance> = read_jsonl(&a.instances).map_err(usage)?;
    let rep = build_report(&recs, &insts).map_err(|e| CliError::Validation(e.to_string()))?;
    if let Some(p) = &a.json {
        let s = serde_json::to_string_pretty(&rep).map_err(usage)?;
        std::fs::write(p, s).map_err(|e| usage(format!("{}: {e}", p.display())))?;
    }
    print_out(&rep.render_text());
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(p) => KvConfig::load(p).map_err(usage)?,
        None => KvConfig::default(),
    };
    match cli.command {
        Command::Synthesize(a) => cmd_synthesize(a, &file),
        Command::Check(a) => cmd_check(a),
        Command::Validate(a) => cmd_validate(a, &file),
        Command::Decompose(a) => cmd_decompose(a, &file),
        Command::Evaluate(a) => cmd_evaluate(a, &file),
        Command::Report(a) => cmd_report(a),
        Command::Atoms => emit(&deepcvx::atoms::manifest_json()),
    }
}

/// Parses `args` and runs; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
