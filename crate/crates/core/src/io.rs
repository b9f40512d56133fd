//! JSONL persistence, key-value config files and report tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decompose::decompose;
use crate::eval::{EvalRecord, GroupMetrics, Paradigm};
use crate::synth::{BenchmarkInstance, Label};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
}

fn file_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::File { path: path.display().to_string(), source }
}

/// One value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, IoError> {
    let f = File::open(path).map_err(|e| file_err(path, e))?;
    parse_jsonl(BufReader::new(f), &path.display().to_string())
}

pub fn parse_jsonl<T: DeserializeOwned>(r: impl BufRead, name: &str) -> Result<Vec<T>, IoError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| IoError::File { path: name.to_string(), source: e })?;
        if line.trim().is_empty() {
            continue;
        }
        let v = serde_json::from_str(&line).map_err(|e| IoError::Parse {
            path: name.to_string(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Single-writer JSONL sink; each value is flushed as one line.
pub struct JsonlWriter {
    out: BufWriter<File>,
    path: String,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self, IoError> {
        let f = File::create(path).map_err(|e| file_err(path, e))?;
        Ok(JsonlWriter { out: BufWriter::new(f), path: path.display().to_string() })
    }

    pub fn append(path: &Path) -> Result<Self, IoError> {
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(|e| file_err(path, e))?;
        Ok(JsonlWriter { out: BufWriter::new(f), path: path.display().to_string() })
    }

    pub fn write<T: Serialize>(&mut self, v: &T) -> Result<(), IoError> {
        let line = serde_json::to_string(v).map_err(|e| IoError::Parse {
            path: self.path.clone(),
            line: 0,
            msg: e.to_string(),
        })?;
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|e| IoError::File { path: self.path.clone(), source: e })
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), IoError> {
    let mut w = JsonlWriter::create(path)?;
    for it in items {
        w.write(it)?;
    }
    Ok(())
}

/// `key = value` lines; `#` starts a comment line. Later keys override.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KvConfig {
    pub entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(format!("line {}: empty key", i + 1));
            }
            entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(KvConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReportError {
    #[error("records reference unknown instance ids: {0:?}")]
    IdMismatch(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub paradigm: Paradigm,
    pub depth: usize,
    pub n: usize,
    pub macro_f1: f64,
    pub recall_convex: f64,
    pub recall_concave: f64,
    pub recall_neither: f64,
    pub mean_tokens_in: f64,
    pub mean_tokens_out: f64,
    /// Mean sub-function count at the records' granularity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_subfunctions: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_error_hist: Option<[usize; 11]>,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    /// Per paradigm over all depths.
    pub totals: Vec<ReportRow>,
}

fn row(
    paradigm: Paradigm,
    depth: usize,
    recs: &[&EvalRecord],
    by_id: &BTreeMap<&str, &BenchmarkInstance>,
) -> ReportRow {
    let g = GroupMetrics::of(recs);
    let sizes: Vec<f64> = recs
        .iter()
        .filter_map(|r| {
            if r.paradigm.is_agentic() && !r.steps.is_empty() {
                return Some(r.steps.len() as f64);
            }
            let gran = r.granularity?;
            let inst = by_id.get(r.id.as_str())?;
            Some(inst.decomposition(gran).map_or_else(|| decompose(&inst.expression, gran).0.len(), <[_]>::len) as f64)
        })
        .collect();
    ReportRow {
        paradigm,
        depth,
        n: g.n,
        macro_f1: g.macro_f1,
        recall_convex: g.recall(Label::Convex),
        recall_concave: g.recall(Label::Concave),
        recall_neither: g.recall(Label::Neither),
        mean_tokens_in: g.mean_tokens_in,
        mean_tokens_out: g.mean_tokens_out,
        mean_subfunctions: (!sizes.is_empty()).then(|| sizes.iter().sum::<f64>() / sizes.len() as f64),
        first_error_hist: g.first_error_hist,
        failed: g.failed,
    }
}

/// Per (paradigm, depth) table; `depth` 0 in `totals` means all depths.
pub fn build_report(records: &[EvalRecord], instances: &[BenchmarkInstance]) -> Result<Report, ReportError> {
    let by_id: BTreeMap<&str, &BenchmarkInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let missing: BTreeSet<String> =
        records.iter().filter(|r| !by_id.contains_key(r.id.as_str())).map(|r| r.id.clone()).collect();
    if !missing.is_empty() {
        return Err(ReportError::IdMismatch(missing.into_iter().collect()));
    }
    let mut groups: BTreeMap<(Paradigm, usize), Vec<&EvalRecord>> = BTreeMap::new();
    let mut totals: BTreeMap<Paradigm, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.paradigm, r.depth)).or_default().push(r);
        totals.entry(r.paradigm).or_default().push(r);
    }
    Ok(Report {
        rows: groups.iter().map(|(&(p, d), rs)| row(p, d, rs, &by_id)).collect(),
        totals: totals.iter().map(|(&p, rs)| row(p, 0, rs, &by_id)).collect(),
    })
}

impl Report {
    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let header = [
            "paradigm", "depth", "n", "macro_f1", "rec_cvx", "rec_ccv", "rec_nei", "tok_in", "tok_out", "mean_G",
            "failed",
        ];
        let fmt_row = |r: &ReportRow| -> Vec<String> {
            vec![
                r.paradigm.to_string(),
                if r.depth == 0 { "all".into() } else { r.depth.to_string() },
                r.n.to_string(),
                format!("{:.4}", r.macro_f1),
                format!("{:.3}", r.recall_convex),
                format!("{:.3}", r.recall_concave),
                format!("{:.3}", r.recall_neither),
                format!("{:.0}", r.mean_tokens_in),
                format!("{:.0}", r.mean_tokens_out),
                r.mean_subfunctions.map_or("-".into(), |g| format!("{g:.1}")),
                r.failed.to_string(),
            ]
        };
        let mut cells: Vec<Vec<String>> = vec![header.iter().map(|s| s.to_string()).collect()];
        cells.extend(self.rows.iter().map(fmt_row));
        cells.extend(self.totals.iter().map(fmt_row));
        let widths: Vec<usize> =
            (0..header.len()).map(|c| cells.iter().map(|r| r[c].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for r in &cells {
            let line: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        let hist: Vec<&ReportRow> = self.rows.iter().filter(|r| r.first_error_hist.is_some()).collect();
        if !hist.is_empty() {
            let _ = writeln!(out, "\nfirst-error position (tenths of k; last column: no error)");
            for r in hist {
                let h = r.first_error_hist.expect("filtered");
                let cols: Vec<String> = h.iter().map(|c| format!("{c:>4}")).collect();
                let _ = writeln!(out, "{:>16} {:>5} {}", r.paradigm.as_str(), r.depth, cols.join(""));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{run_instance, EvalConfig, RuleOracle};
    use crate::synth::{generate, DatasetSpec};

    #[test]
    fn kv_config() {
        let c = KvConfig::parse("# comment\nseed = 7\n label=convex \n\nseed = 8\n").unwrap();
        assert_eq!(c.get("seed"), Some("8"));
        assert_eq!(c.get("label"), Some("convex"));
        assert_eq!(KvConfig::parse(&c.render()).unwrap(), c);
        assert!(KvConfig::parse("novalue").is_err());
        assert!(KvConfig::parse("= 3").is_err());
    }

    #[test]
    fn jsonl_keeps_unknown_fields() {
        let spec = DatasetSpec::new(vec![Label::Convex], vec![3], 2, 0);
        let mut insts: Vec<BenchmarkInstance> = generate(&spec).into_iter().map(Result::unwrap).collect();
        insts[0].extra.insert("note".into(), serde_json::json!({"k": [1, 2]}));
        let dir = std::env::temp_dir().join(format!("deepcvx-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("i.jsonl");
        write_jsonl(&p, &insts).unwrap();
        let back: Vec<BenchmarkInstance> = read_jsonl(&p).unwrap();
        assert_eq!(back, insts);
        std::fs::write(&p, "{\"id\": 3}\n").unwrap();
        assert!(matches!(read_jsonl::<BenchmarkInstance>(&p), Err(IoError::Parse { line: 1, .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn report_rows_and_mismatch() {
        let spec = DatasetSpec::new(Label::ALL.to_vec(), vec![2, 5], 2, 3);
        let insts: Vec<BenchmarkInstance> = generate(&spec).into_iter().map(Result::unwrap).collect();
        let cfg = EvalConfig { record_timing: false, ..EvalConfig::default() };
        let recs: Vec<EvalRecord> = insts
            .iter()
            .flat_map(|i| [Paradigm::Oneshot, Paradigm::AgenticFocused].map(|p| run_instance(i, p, &RuleOracle, &cfg)))
            .collect();
        let rep = build_report(&recs, &insts).unwrap();
        assert_eq!(rep.rows.len(), 4);
        assert!(rep.rows.iter().all(|r| r.macro_f1 == 1.0));
        assert!(rep.render_text().contains("agentic_focused"));
        assert!(matches!(build_report(&recs, &insts[1..]), Err(ReportError::IdMismatch(_))));
    }
}
