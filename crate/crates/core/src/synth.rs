//! Label-directed sampling of deep compositions.
//!
//! A chain starts from a base affine `a*x + b` (depth 0) and gains one layer
//! at a time. For `convex`/`concave` targets every layer must keep the chain
//! certifiable and the last layer must land exactly on the target curvature.
//! The `neither` sampler relaxes the rules and keeps only chains for which
//! Jensen counterexamples exist in both directions.
//!
//! Certification uses [`RangeMode::Coarse`], so labels survive any
//! decomposition whose intermediate ranges are reported as pos/neg/any.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{AtomId, Curvature, Monotonicity};
use crate::dcp::{self, combine, compose, CurvatureState, RangeMode, RefStates};
use crate::decompose::{decompose, SubFunction};
use crate::expr::{evaluate, round_sig3, Expr};
use crate::interval::Interval;
use crate::jensen::{find_counterexample, Direction, JensenConfig, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Convex,
    Concave,
    Neither,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Convex, Label::Concave, Label::Neither];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Convex => "convex",
            Label::Concave => "concave",
            Label::Neither => "neither",
        }
    }

    pub fn curvature(self) -> Option<Curvature> {
        match self {
            Label::Convex => Some(Curvature::Convex),
            Label::Concave => Some(Curvature::Concave),
            Label::Neither => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "convex" => Ok(Label::Convex),
            "concave" => Ok(Label::Concave),
            "neither" => Ok(Label::Neither),
            other => Err(format!("unknown label {other:?} (convex, concave, neither)")),
        }
    }
}

/// Relative frequencies of layer kinds and sibling shapes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerWeights {
    pub rewrap: f64,
    pub sum: f64,
    pub unary: f64,
    pub max: f64,
    pub log_sum_exp: f64,
    /// Probability that a sibling is a bare affine function.
    pub affine_sibling: f64,
    /// Probability that an affine sibling of a sum is merged into its terms.
    pub flatten_affine: f64,
    /// Probability of a second sibling.
    pub second_sibling: f64,
    /// Probability that a sum weight is exactly 1.
    pub unit_weight: f64,
    /// Per-layer probability that the `neither` sampler still obeys the rules.
    pub neither_rule_layer: f64,
}

impl Default for LayerWeights {
    fn default() -> Self {
        LayerWeights {
            rewrap: 3.0,
            sum: 2.5,
            unary: 4.0,
            max: 0.5,
            log_sum_exp: 0.5,
            affine_sibling: 0.35,
            flatten_affine: 0.5,
            second_sibling: 0.2,
            unit_weight: 0.5,
            neither_rule_layer: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SynthesisTarget {
    pub label: Label,
    pub depth: usize,
    pub seed: u64,
    /// Magnitude range of slopes; the sign is drawn separately.
    pub coeff_slope_range: (f64, f64),
    pub coeff_offset_range: (f64, f64),
    pub sibling_max_depth: usize,
    /// Dead ends (each pops one layer) before giving up.
    pub max_resample_attempts: usize,
    /// Exclude atoms outside the strict table.
    pub strict_atoms: bool,
    pub weights: LayerWeights,
    pub jensen: JensenConfig,
    /// Fraction of the evaluation grid on which the function must be finite.
    pub min_finite_fraction: f64,
}

impl SynthesisTarget {
    pub fn new(label: Label, depth: usize, seed: u64) -> Self {
        SynthesisTarget {
            label,
            depth,
            seed,
            coeff_slope_range: (0.1, 3.0),
            coeff_offset_range: (-3.0, 3.0),
            sibling_max_depth: 2,
            max_resample_attempts: 5000,
            strict_atoms: false,
            weights: LayerWeights::default(),
            jensen: JensenConfig::default(),
            min_finite_fraction: 0.9,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidTarget(m.to_string()));
        if self.depth == 0 {
            return bad("depth must be at least 1");
        }
        let (lo, hi) = self.coeff_slope_range;
        if !(lo > 0.0 && lo <= hi) {
            return bad("slope range must be a positive interval");
        }
        if self.coeff_offset_range.0 > self.coeff_offset_range.1 {
            return bad("offset range is inverted");
        }
        Ok(())
    }

    /// Sibling depth limit; at most `depth - 1` so siblings never outgrow
    /// the main chain.
    pub fn effective_sibling_depth(&self) -> usize {
        self.sibling_max_depth.min(self.depth.saturating_sub(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexamples {
    pub convexity: Violation,
    pub concavity: Violation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    pub id: String,
    pub label: Label,
    pub depth: usize,
    pub expression: Expr,
    pub atom_trace: Vec<AtomId>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexamples: Option<Counterexamples>,
    /// Keyed by the maximum sub-function length, as a decimal string.
    #[serde(default)]
    pub decompositions: BTreeMap<String, Vec<SubFunction>>,
    /// Fields this version does not know, kept for round trips.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl BenchmarkInstance {
    pub fn attach_decompositions(&mut self, granularities: &[usize]) {
        for &g in granularities {
            let (subs, _) = decompose(&self.expression, g);
            self.decompositions.insert(g.to_string(), subs);
        }
    }

    pub fn decomposition(&self, granularity: usize) -> Option<&[SubFunction]> {
        self.decompositions.get(&granularity.to_string()).map(Vec::as_slice)
    }
}

pub const DEFAULT_GRANULARITIES: [usize; 3] = [10, 50, 100];

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthesis target: {0}")]
    InvalidTarget(String),
    #[error("no compatible layer found after {attempts} attempts (label {label}, depth {depth})")]
    Exhausted { label: Label, depth: usize, attempts: usize },
}

/// `(slope, offset)`: slope is `±U(range)`, never zero; both rounded to 3
/// significant figures.
pub fn sample_affine_coeffs(rng: &mut impl Rng, t: &SynthesisTarget) -> (f64, f64) {
    let (lo, hi) = t.coeff_slope_range;
    let mag = if lo < hi { rng.gen_range(lo..=hi) } else { lo };
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let (olo, ohi) = t.coeff_offset_range;
    let offset = if olo < ohi { rng.gen_range(olo..=ohi) } else { olo };
    (sign * round_sig3(mag), round_sig3(offset))
}

const UNARY: [AtomId; 19] = [
    AtomId::Exp,
    AtomId::ExpNeg,
    AtomId::Softplus,
    AtomId::Hinge,
    AtomId::Max0,
    AtomId::NegSqrt,
    AtomId::Norm1,
    AtomId::Norm2,
    AtomId::NormInf,
    AtomId::SqNorm2,
    AtomId::Log,
    AtomId::Sqrt,
    AtomId::NegExp,
    AtomId::NegSoftplus,
    AtomId::NegMax0,
    AtomId::NegNorm1,
    AtomId::NegNorm2,
    AtomId::NegNormInf,
    AtomId::Max0,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// Every layer certified.
    Rules,
    /// Only domains enforced.
    Relaxed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Rewrap,
    Sum,
    Unary,
    Max,
    Lse,
}

#[derive(Clone, Debug)]
struct Layer {
    expr: Expr,
    /// Coarse-mode state of `expr`.
    state: CurvatureState,
    atom: AtomId,
}

struct Sampler<'a> {
    t: &'a SynthesisTarget,
    rng: ChaCha8Rng,
    grid: Vec<f64>,
}

fn var_state() -> CurvatureState {
    CurvatureState::new(Curvature::Affine, Monotonicity::Nondecreasing, Interval::real_line())
}

impl<'a> Sampler<'a> {
    fn new(t: &'a SynthesisTarget) -> Self {
        let (lo, hi) = t.jensen.window;
        let grid = (0..61).map(|k| lo + (hi - lo) * k as f64 / 60.0).collect();
        Sampler { t, rng: ChaCha8Rng::seed_from_u64(t.seed), grid }
    }

    fn unary_pool(&self) -> Vec<AtomId> {
        let mut pool: Vec<AtomId> = UNARY[..18].to_vec();
        if self.t.strict_atoms {
            pool.retain(|a| !a.spec().extended);
        }
        pool
    }

    fn base(&mut self) -> Layer {
        let (a, b) = sample_affine_coeffs(&mut self.rng, self.t);
        let expr = Expr::affine(a, b);
        let state = dcp::analyze(&expr).expect("affine always analyzes");
        Layer { expr, state, atom: AtomId::Affine }
    }

    fn finite_enough(&self, e: &Expr) -> bool {
        let ok = self.grid.iter().filter(|&&x| evaluate(e, x).is_some()).count();
        ok as f64 >= self.t.min_finite_fraction * self.grid.len() as f64
    }

    fn weight(&mut self) -> f64 {
        if self.rng.gen_bool(self.t.weights.unit_weight) {
            1.0
        } else {
            round_sig3(self.rng.gen_range(0.05..1.0))
        }
    }

    fn accepts(mode: Mode, prev: &CurvatureState, next: &CurvatureState, need: Option<Curvature>) -> bool {
        match mode {
            Mode::Rules => {
                (next.curvature != Curvature::Unknown || prev.curvature == Curvature::Unknown)
                    && need.is_none_or(|c| next.curvature == c)
            }
            Mode::Relaxed => true,
        }
    }

    /// Curvature a sibling must have for a rule-abiding combination with a
    /// main chain of curvature `main`.
    fn sibling_need(&mut self, mode: Mode, main: Curvature, need: Option<Curvature>) -> Option<Curvature> {
        if mode == Mode::Relaxed {
            return None;
        }
        match main {
            Curvature::Convex | Curvature::Concave => Some(main),
            Curvature::Affine => {
                Some(need.unwrap_or_else(
                    || {
                        if self.rng.gen_bool(0.5) {
                            Curvature::Convex
                        } else {
                            Curvature::Concave
                        }
                    },
                ))
            }
            Curvature::Unknown => None,
        }
    }

    /// A short chain (no siblings of its own) of depth at most `max_depth`
    /// whose curvature is `need` or affine.
    fn sibling(&mut self, need: Option<Curvature>, max_depth: usize) -> Layer {
        let w = &self.t.weights;
        if max_depth == 0 || self.rng.gen_bool(w.affine_sibling) {
            return self.base();
        }
        let depth = if max_depth >= 2 && self.rng.gen_bool(0.2) { self.rng.gen_range(2..=max_depth) } else { 1 };
        for _ in 0..20 {
            if let Some(l) = self.chain(depth, need, false, Mode::Rules) {
                return l;
            }
        }
        self.base()
    }

    /// A chain of exactly `depth` layers; `None` on a dead end.
    fn chain(&mut self, depth: usize, need: Option<Curvature>, siblings: bool, mode: Mode) -> Option<Layer> {
        let mut stack = vec![self.base()];
        let mut dead_ends = 0;
        while stack.len() <= depth {
            let d = stack.len();
            let last = if d == depth { need } else { None };
            match self.layer(stack.last().expect("base"), d, last, siblings, mode) {
                Some(l) => stack.push(l),
                None => {
                    dead_ends += 1;
                    if dead_ends > 8 * depth + 8 {
                        return None;
                    }
                    if stack.len() > 1 {
                        stack.pop();
                    }
                }
            }
        }
        stack.pop()
    }

    fn pick_kind(&mut self, siblings: bool) -> Kind {
        let w = &self.t.weights;
        let mut kinds = vec![(Kind::Rewrap, w.rewrap), (Kind::Unary, w.unary)];
        if siblings {
            kinds.extend([(Kind::Sum, w.sum), (Kind::Max, w.max), (Kind::Lse, w.log_sum_exp)]);
        }
        kinds.choose_weighted(&mut self.rng, |k| k.1).map(|k| k.0).unwrap_or(Kind::Rewrap)
    }

    /// One new layer over `cur` at depth `d`, passing all guards.
    fn layer(&mut self, cur: &Layer, d: usize, need: Option<Curvature>, siblings: bool, mode: Mode) -> Option<Layer> {
        for _ in 0..24 {
            let kind = self.pick_kind(siblings);
            let Some(cand) = self.propose(kind, cur, d, need, mode) else { continue };
            if !Self::accepts(mode, &cur.state, &cand.state, need) {
                continue;
            }
            if cand.expr.structural_depth() != d || !self.finite_enough(&cand.expr) {
                continue;
            }
            return Some(cand);
        }
        None
    }

    fn propose(&mut self, kind: Kind, cur: &Layer, d: usize, need: Option<Curvature>, mode: Mode) -> Option<Layer> {
        let inner = cur.state.widened();
        match kind {
            Kind::Rewrap => {
                let (a, b) = sample_affine_coeffs(&mut self.rng, self.t);
                let expr = Expr::lin(vec![(a, cur.expr.clone())], b);
                let state = combine(&[(a, inner)], b);
                Some(Layer { expr, state, atom: AtomId::Affine })
            }
            Kind::Unary => {
                let options: Vec<(AtomId, CurvatureState)> = self
                    .unary_pool()
                    .into_iter()
                    .filter_map(|a| compose(a, &[inner]).ok().map(|s| (a, s)))
                    .filter(|(_, s)| Self::accepts(mode, &cur.state, s, need))
                    .collect();
                let (atom, state) = *options.choose(&mut self.rng)?;
                Some(Layer { expr: Expr::call(atom, cur.expr.clone()), state, atom })
            }
            Kind::Sum => {
                let sib_need = self.sibling_need(mode, cur.state.curvature, need);
                let max_sib = self.t.effective_sibling_depth().min(d - 1);
                let n = if self.rng.gen_bool(self.t.weights.second_sibling) { 2 } else { 1 };
                let w0 = self.weight();
                let mut terms = vec![(w0, cur.expr.clone())];
                let mut states = vec![(w0, inner)];
                let mut xs: Vec<(f64, Expr)> = Vec::new();
                let mut offset = 0.0;
                for _ in 0..n {
                    let s = self.sibling(sib_need, max_sib);
                    let w = self.weight();
                    let flat = s.expr.is_affine_in_x() && self.rng.gen_bool(self.t.weights.flatten_affine);
                    match (&s.expr, flat) {
                        (Expr::Lin(l), true) => {
                            for (c, t) in &l.terms {
                                xs.push((round_sig3(w * c), t.clone()));
                            }
                            offset = round_sig3(offset + w * l.offset);
                        }
                        _ => {
                            terms.push((w, s.expr.clone()));
                            states.push((w, s.state.widened()));
                        }
                    }
                }
                for (c, t) in &xs {
                    if *c != 0.0 {
                        states.push((*c, dcp::analyze(t).unwrap_or_else(|_| var_state())));
                    }
                }
                terms.extend(xs);
                let expr = Expr::lin(terms, offset);
                let state = combine(&states, offset);
                Some(Layer { expr, state, atom: AtomId::Sum })
            }
            Kind::Max | Kind::Lse => {
                let atom = if kind == Kind::Max { AtomId::Max } else { AtomId::LogSumExp };
                let sib_need = match mode {
                    Mode::Rules => Some(Curvature::Convex),
                    Mode::Relaxed => None,
                };
                let max_sib = self.t.effective_sibling_depth().min(d - 1);
                let n = if self.rng.gen_bool(self.t.weights.second_sibling) { 2 } else { 1 };
                let mut args = vec![cur.expr.clone()];
                let mut states = vec![inner];
                for _ in 0..n {
                    let s = self.sibling(sib_need, max_sib);
                    args.push(s.expr);
                    states.push(s.state.widened());
                }
                let state = compose(atom, &states).ok()?;
                let expr = Expr::apply(atom, args).ok()?;
                Some(Layer { expr, state, atom })
            }
        }
    }
}

fn instance_id(label: Label, depth: usize, seed: u64) -> String {
    format!("{label}-d{depth}-s{seed}")
}

fn finish(t: &SynthesisTarget, layers: Vec<Layer>, counterexamples: Option<Counterexamples>) -> BenchmarkInstance {
    let atom_trace = layers.iter().skip(1).map(|l| l.atom).collect();
    let expression = layers.last().expect("nonempty").expr.clone();
    BenchmarkInstance {
        id: instance_id(t.label, t.depth, t.seed),
        label: t.label,
        depth: t.depth,
        expression,
        atom_trace,
        seed: t.seed,
        counterexamples,
        decompositions: BTreeMap::new(),
        extra: serde_json::Map::new(),
    }
}

/// Grows a full chain with backtracking. `mode_for` picks each layer's mode.
fn grow(
    s: &mut Sampler<'_>,
    need: Option<Curvature>,
    attempts: &mut usize,
    mut mode_for: impl FnMut(&mut ChaCha8Rng) -> Mode,
) -> Result<Vec<Layer>, SynthError> {
    let t = s.t;
    let mut stack = vec![s.base()];
    while stack.len() <= t.depth {
        let d = stack.len();
        let last = if d == t.depth { need } else { None };
        let mode = mode_for(&mut s.rng);
        match s.layer(stack.last().expect("base"), d, last, true, mode) {
            Some(l) => stack.push(l),
            None => {
                *attempts += 1;
                if *attempts > t.max_resample_attempts {
                    return Err(SynthError::Exhausted { label: t.label, depth: t.depth, attempts: *attempts });
                }
                if stack.len() > 1 {
                    stack.pop();
                }
            }
        }
    }
    Ok(stack)
}

/// Certified `convex`/`concave` instance.
pub fn sample_chain(t: &SynthesisTarget) -> Result<BenchmarkInstance, SynthError> {
    t.validate()?;
    let Some(need) = t.label.curvature() else {
        return Err(SynthError::InvalidTarget("sample_chain needs a convex or concave label".into()));
    };
    let mut s = Sampler::new(t);
    let mut attempts = 0;
    loop {
        let layers = grow(&mut s, Some(need), &mut attempts, |_| Mode::Rules)?;
        let e = &layers.last().expect("nonempty").expr;
        let coarse = dcp::analyze_with(e, &RefStates::new(), RangeMode::Coarse).map(|s| s.curvature);
        let precise = dcp::analyze(e).map(|s| s.curvature);
        if coarse == Ok(need) && precise == Ok(need) {
            return Ok(finish(t, layers, None));
        }
        attempts += 1;
        if attempts > t.max_resample_attempts {
            return Err(SynthError::Exhausted { label: t.label, depth: t.depth, attempts });
        }
    }
}

/// `neither` instance carrying a counterexample in each direction.
pub fn sample_neither(t: &SynthesisTarget) -> Result<BenchmarkInstance, SynthError> {
    t.validate()?;
    if t.label != Label::Neither {
        return Err(SynthError::InvalidTarget("sample_neither needs the neither label".into()));
    }
    let mut s = Sampler::new(t);
    let mut attempts = 0;
    let p = t.weights.neither_rule_layer;
    let jensen = JensenConfig { seed: t.seed, ..t.jensen.clone() };
    loop {
        let layers =
            grow(&mut s, None, &mut attempts, |rng| if rng.gen_bool(p) { Mode::Rules } else { Mode::Relaxed })?;
        let e = &layers.last().expect("nonempty").expr;
        // Lazy: the second search is skipped when the first fails.
        #[allow(clippy::manual_option_zip)]
        let found = find_counterexample(e, Direction::Convexity, &jensen)
            .and_then(|a| find_counterexample(e, Direction::Concavity, &jensen).map(|b| (a, b)));
        if let Some((convexity, concavity)) = found {
            return Ok(finish(t, layers, Some(Counterexamples { convexity, concavity })));
        }
        attempts += 1;
        if attempts > t.max_resample_attempts {
            return Err(SynthError::Exhausted { label: t.label, depth: t.depth, attempts });
        }
    }
}

pub fn synthesize(t: &SynthesisTarget) -> Result<BenchmarkInstance, SynthError> {
    match t.label {
        Label::Neither => sample_neither(t),
        _ => sample_chain(t),
    }
}

/// A grid of instances: every label × depth, `count` each.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub labels: Vec<Label>,
    pub depths: Vec<usize>,
    pub count: usize,
    pub seed: u64,
    /// Template for per-instance targets (label, depth and seed overridden).
    pub template: SynthesisTarget,
    pub granularities: Vec<usize>,
}

impl DatasetSpec {
    pub fn new(labels: Vec<Label>, depths: Vec<usize>, count: usize, seed: u64) -> Self {
        DatasetSpec {
            labels,
            depths,
            count,
            seed,
            template: SynthesisTarget::new(Label::Convex, 1, 0),
            granularities: DEFAULT_GRANULARITIES.to_vec(),
        }
    }

    /// Per-instance targets in output order. Instance `i` of a (label, depth)
    /// cell uses seed `seed + i` mixed with the cell.
    pub fn targets(&self) -> Vec<SynthesisTarget> {
        let mut out = Vec::new();
        for &label in &self.labels {
            for &depth in &self.depths {
                for i in 0..self.count {
                    let cell = (label as u64) << 56 | (depth as u64) << 40;
                    let seed = self.seed.wrapping_add(i as u64) ^ cell;
                    out.push(SynthesisTarget { label, depth, seed, ..self.template.clone() });
                }
            }
        }
        out
    }
}

/// Generates the grid in parallel; results keep [`DatasetSpec::targets`] order.
pub fn generate(spec: &DatasetSpec) -> Vec<Result<BenchmarkInstance, SynthError>> {
    spec.targets()
        .par_iter()
        .map(|t| {
            let mut inst = synthesize(t)?;
            inst.attach_decompositions(&spec.granularities);
            Ok(inst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcp::{certified_label, CertifiedLabel};
    use crate::jensen::reverify;

    #[test]
    fn depth_one_convex() {
        let inst = sample_chain(&SynthesisTarget::new(Label::Convex, 1, 3)).unwrap();
        assert_eq!(inst.expression.structural_depth(), 1);
        assert_eq!(certified_label(&inst.expression).unwrap().label, CertifiedLabel::Convex);
        assert_eq!(inst.atom_trace.len(), 1);
    }

    #[test]
    fn depth_two_concave() {
        let inst = sample_chain(&SynthesisTarget::new(Label::Concave, 2, 0)).unwrap();
        assert_eq!(inst.expression.structural_depth(), 2);
        let c = certified_label(&inst.expression).unwrap();
        assert_eq!((c.label, c.affine), (CertifiedLabel::Concave, false));
    }

    #[test]
    fn deep_chains_hit_depth_and_label() {
        for (label, want) in [(Label::Convex, CertifiedLabel::Convex), (Label::Concave, CertifiedLabel::Concave)] {
            for seed in 0..3 {
                let inst = sample_chain(&SynthesisTarget::new(label, 40, seed)).unwrap();
                assert_eq!(inst.expression.structural_depth(), 40);
                assert_eq!(certified_label(&inst.expression).unwrap().label, want);
                assert_eq!(inst.atom_trace.len(), 40);
            }
        }
    }

    #[test]
    fn reproducible() {
        let t = SynthesisTarget::new(Label::Convex, 20, 11);
        assert_eq!(sample_chain(&t).unwrap(), sample_chain(&t).unwrap());
        let n = SynthesisTarget::new(Label::Neither, 5, 11);
        assert_eq!(sample_neither(&n).unwrap(), sample_neither(&n).unwrap());
    }

    #[test]
    fn neither_carries_reverifiable_counterexamples() {
        for depth in [2, 10] {
            let inst = sample_neither(&SynthesisTarget::new(Label::Neither, depth, 5)).unwrap();
            let cx = inst.counterexamples.as_ref().unwrap();
            assert!(reverify(&inst.expression, &cx.convexity, Direction::Convexity, 1e-9));
            assert!(reverify(&inst.expression, &cx.concavity, Direction::Concavity, 1e-9));
            assert_eq!(inst.expression.structural_depth(), depth);
        }
    }

    #[test]
    fn wrong_sampler_is_rejected() {
        assert!(sample_chain(&SynthesisTarget::new(Label::Neither, 2, 0)).is_err());
        assert!(sample_neither(&SynthesisTarget::new(Label::Convex, 2, 0)).is_err());
        assert!(synthesize(&SynthesisTarget::new(Label::Convex, 0, 0)).is_err());
    }

    #[test]
    fn affine_coefficients() {
        let t = SynthesisTarget::new(Label::Convex, 1, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (a, b) = sample_affine_coeffs(&mut rng, &t);
            assert!(a != 0.0 && (0.1..=3.0).contains(&a.abs()));
            assert!((-3.0..=3.0).contains(&b));
            assert_eq!(round_sig3(a), a);
        }
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(sample_affine_coeffs(&mut r1, &t), sample_affine_coeffs(&mut r2, &t));
    }

    #[test]
    fn strict_atoms_exclude_extension() {
        let mut t = SynthesisTarget::new(Label::Convex, 30, 2);
        t.strict_atoms = true;
        for seed in 0..5 {
            t.seed = seed;
            let inst = sample_chain(&t).unwrap();
            assert!(!crate::expr::print(&inst.expression).contains("^2"));
        }
    }

    #[test]
    fn dataset_order_and_decompositions() {
        let spec = DatasetSpec::new(vec![Label::Convex, Label::Neither], vec![2, 3], 2, 1);
        let out = generate(&spec);
        assert_eq!(out.len(), 8);
        let first = out[0].as_ref().unwrap();
        assert_eq!((first.label, first.depth), (Label::Convex, 2));
        assert_eq!(first.decompositions.len(), 3);
        let last = out[7].as_ref().unwrap();
        assert_eq!((last.label, last.depth), (Label::Neither, 3));
    }
}
