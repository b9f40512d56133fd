//! Randomized and gridded Jensen-inequality scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{evaluate, Expr};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JensenConfig {
    pub sample_count: usize,
    pub window: (f64, f64),
    /// Points of the fixed grid that half of the pairs are anchored on.
    pub grid_points: usize,
    pub lambdas: Vec<f64>,
    /// Also draw uniform λ for half of the triples.
    pub random_lambdas: bool,
    /// Relative margin: a violation needs `|lhs - rhs| > margin * (1 + |rhs|)`.
    pub violation_margin: f64,
    pub min_valid_samples: usize,
    /// Violations kept per direction (all are counted).
    pub max_recorded: usize,
    pub seed: u64,
}

impl Default for JensenConfig {
    fn default() -> Self {
        JensenConfig {
            sample_count: 5000,
            window: (-3.0, 3.0),
            grid_points: 61,
            lambdas: (1..=9).map(|k| k as f64 / 10.0).collect(),
            random_lambdas: true,
            violation_margin: 1e-9,
            min_valid_samples: 2000,
            max_recorded: 32,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `f(λx+(1-λ)y) > λf(x)+(1-λ)f(y)`: not convex.
    Convexity,
    /// `f(λx+(1-λ)y) < λf(x)+(1-λ)f(y)`: not concave.
    Concavity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub x: f64,
    pub y: f64,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl Violation {
    /// Signed gap in the direction's sense, relative to `1 + |rhs|`.
    pub fn relative_gap(&self, dir: Direction) -> f64 {
        let g = match dir {
            Direction::Convexity => self.lhs - self.rhs,
            Direction::Concavity => self.rhs - self.lhs,
        };
        g / (1.0 + self.rhs.abs())
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct JensenReport {
    pub convex_violations: Vec<Violation>,
    pub concave_violations: Vec<Violation>,
    pub convex_violation_count: usize,
    pub concave_violation_count: usize,
    pub valid_samples: usize,
    pub skipped_nonfinite: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum JensenError {
    #[error("only {valid} finite samples, {required} required")]
    InsufficientSamples { valid: usize, required: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericClass {
    Convex,
    Concave,
    Affine,
    Neither,
    Inconclusive,
}

/// Evaluates one triple; `None` if any of the three values is non-finite.
pub fn triple(e: &Expr, x: f64, y: f64, lambda: f64) -> Option<Violation> {
    let fx = evaluate(e, x)?;
    let fy = evaluate(e, y)?;
    let lhs = evaluate(e, lambda * x + (1.0 - lambda) * y)?;
    let rhs = lambda * fx + (1.0 - lambda) * fy;
    rhs.is_finite().then_some(Violation { x, y, lambda, lhs, rhs })
}

/// Re-evaluates a stored triple and checks it still violates with the margin.
pub fn reverify(e: &Expr, v: &Violation, dir: Direction, margin: f64) -> bool {
    triple(e, v.x, v.y, v.lambda).is_some_and(|t| t.relative_gap(dir) > margin)
}

fn sample_triples(cfg: &JensenConfig) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.window;
    let grid: Vec<f64> =
        (0..cfg.grid_points.max(2)).map(|k| lo + (hi - lo) * k as f64 / (cfg.grid_points.max(2) - 1) as f64).collect();
    const LOCAL: [f64; 6] = [0.05, 0.1, 0.25, 0.5, 1.0, 2.0];
    (0..cfg.sample_count)
        .map(|k| {
            let lambda = if cfg.random_lambdas && k % 4 >= 2 {
                rng.gen_range(0.01..0.99)
            } else {
                cfg.lambdas[rng.gen_range(0..cfg.lambdas.len())]
            };
            if k % 2 == 0 {
                (rng.gen_range(lo..hi), rng.gen_range(lo..hi), lambda)
            } else {
                let x = grid[rng.gen_range(0..grid.len())];
                let d = LOCAL[rng.gen_range(0..LOCAL.len())];
                let y = if rng.gen_bool(0.5) { x + d } else { x - d };
                (x, y.clamp(lo, hi), lambda)
            }
        })
        .collect()
}

fn record(list: &mut Vec<Violation>, count: &mut usize, v: Violation, cap: usize) {
    *count += 1;
    if list.len() < cap {
        list.push(v);
    }
}

pub fn jensen_scan(e: &Expr, cfg: &JensenConfig) -> Result<JensenReport, JensenError> {
    let mut rep = JensenReport::default();
    for (x, y, lambda) in sample_triples(cfg) {
        let Some(t) = triple(e, x, y, lambda) else {
            rep.skipped_nonfinite += 1;
            continue;
        };
        rep.valid_samples += 1;
        if t.relative_gap(Direction::Convexity) > cfg.violation_margin {
            record(&mut rep.convex_violations, &mut rep.convex_violation_count, t, cfg.max_recorded);
        } else if t.relative_gap(Direction::Concavity) > cfg.violation_margin {
            record(&mut rep.concave_violations, &mut rep.concave_violation_count, t, cfg.max_recorded);
        }
    }
    if rep.valid_samples < cfg.min_valid_samples {
        return Err(JensenError::InsufficientSamples { valid: rep.valid_samples, required: cfg.min_valid_samples });
    }
    Ok(rep)
}

/// Golden-section search over λ for the largest gap with `x`, `y` fixed.
fn refine_lambda(e: &Expr, v: Violation, dir: Direction) -> Violation {
    let gap = |l: f64| triple(e, v.x, v.y, l).map(|t| (t.relative_gap(dir), t));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (1e-3, 1.0 - 1e-3);
    let mut best = v;
    let mut best_gap = v.relative_gap(dir);
    let mut consider = |l: f64| -> f64 {
        match gap(l) {
            Some((g, t)) => {
                if g > best_gap {
                    best_gap = g;
                    best = t;
                }
                g
            }
            None => f64::NEG_INFINITY,
        }
    };
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut gc = consider(c);
    let mut gd = consider(d);
    for _ in 0..40 {
        if gc > gd {
            b = d;
            d = c;
            gd = gc;
            c = b - phi * (b - a);
            gc = consider(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + phi * (b - a);
            gd = consider(d);
        }
    }
    best
}

/// The most violating scanned triple in `dir`, with λ refined; `None` if the
/// scan finds nothing.
pub fn find_counterexample(e: &Expr, dir: Direction, cfg: &JensenConfig) -> Option<Violation> {
    let mut best: Option<Violation> = None;
    for (x, y, lambda) in sample_triples(cfg) {
        if let Some(t) = triple(e, x, y, lambda) {
            let g = t.relative_gap(dir);
            if g > cfg.violation_margin && best.is_none_or(|b| g > b.relative_gap(dir)) {
                best = Some(t);
            }
        }
    }
    best.map(|v| refine_lambda(e, v, dir)).filter(|v| reverify(e, v, dir, cfg.violation_margin))
}

/// Dense all-pairs grid classification for shallow expressions.
pub fn numeric_classify(e: &Expr, cfg: &JensenConfig) -> NumericClass {
    let (lo, hi) = cfg.window;
    let n = cfg.grid_points.max(3);
    let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
    let (mut total, mut valid, mut convex_v, mut concave_v) = (0usize, 0usize, false, false);
    for i in 0..n {
        for j in (i + 1)..n {
            for lambda in [0.25, 0.5, 0.75] {
                total += 1;
                let Some(t) = triple(e, grid[i], grid[j], lambda) else { continue };
                valid += 1;
                convex_v |= t.relative_gap(Direction::Convexity) > cfg.violation_margin;
                concave_v |= t.relative_gap(Direction::Concavity) > cfg.violation_margin;
            }
        }
    }
    if 2 * valid < total {
        return NumericClass::Inconclusive;
    }
    match (convex_v, concave_v) {
        (false, false) => NumericClass::Affine,
        (true, false) => NumericClass::Concave,
        (false, true) => NumericClass::Convex,
        (true, true) => NumericClass::Neither,
    }
}
