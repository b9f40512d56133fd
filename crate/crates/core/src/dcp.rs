//! Bottom-up curvature, monotonicity and range propagation under the DCP
//! composition rules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atoms::{output_range, AtomError, AtomId, Curvature, Monotonicity};
use crate::expr::{print, Expr};
use crate::interval::{CoarseRange, Interval};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureState {
    pub curvature: Curvature,
    pub monotonicity: Monotonicity,
    pub range: Interval,
    pub coarse_range: CoarseRange,
}

impl CurvatureState {
    pub fn new(curvature: Curvature, monotonicity: Monotonicity, range: Interval) -> Self {
        CurvatureState { curvature, monotonicity, range, coarse_range: range.coarse() }
    }

    /// What a caller knows about a sub-function from its reported
    /// (curvature, coarse range) pair alone.
    pub fn from_summary(curvature: Curvature, coarse: CoarseRange) -> Self {
        CurvatureState { curvature, monotonicity: Monotonicity::Unknown, range: coarse.widen(), coarse_range: coarse }
    }

    /// Same state with the range relaxed to its sign summary.
    pub fn widened(&self) -> Self {
        CurvatureState { range: self.coarse_range.widen(), ..*self }
    }
}

/// How child ranges feed their parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RangeMode {
    Precise,
    /// Every child range is relaxed to its sign summary first. A tree
    /// certified this way stays certified however it is cut into
    /// sub-functions whose ranges are reported only as pos/neg/any.
    Coarse,
}

#[derive(Debug, Error, PartialEq)]
pub enum DcpError {
    #[error("domain violation at node {path:?} `{expr}`: {source}")]
    Domain {
        /// Child indices from the root.
        path: Vec<usize>,
        expr: String,
        source: AtomError,
    },
    #[error("no state for sub-function g_{0}")]
    UnresolvedRef(usize),
}

/// Whether composing an atom of curvature `outer` with an argument of
/// curvature `inner` is certified, given the atom's monotonicity in that
/// argument over the argument's range.
pub fn rule_fires(outer: Curvature, mono: Monotonicity, inner: Curvature) -> bool {
    if inner == Curvature::Affine {
        return true;
    }
    match outer {
        Curvature::Affine => inner != Curvature::Unknown,
        Curvature::Convex => {
            (mono.is_nondecreasing() && inner == Curvature::Convex)
                || (mono.is_nonincreasing() && inner == Curvature::Concave)
        }
        Curvature::Concave => {
            (mono.is_nondecreasing() && inner == Curvature::Concave)
                || (mono.is_nonincreasing() && inner == Curvature::Convex)
        }
        Curvature::Unknown => false,
    }
}

/// State of `atom(args...)`.
pub fn compose(atom: AtomId, args: &[CurvatureState]) -> Result<CurvatureState, AtomError> {
    let ranges: Vec<Interval> = args.iter().map(|a| a.range).collect();
    let range = output_range(atom, &ranges)?;
    let spec = atom.spec();
    if args.iter().all(|a| a.monotonicity == Monotonicity::Constant) {
        return Ok(CurvatureState::new(Curvature::Affine, Monotonicity::Constant, range));
    }
    let mut certified = true;
    let mut mono = Monotonicity::Constant;
    for (i, a) in args.iter().enumerate() {
        let m = atom.monotonicity_on(i, &a.range);
        certified &= rule_fires(spec.curvature, m, a.curvature);
        mono = mono.join(Monotonicity::chain(m, a.monotonicity));
    }
    let curvature = if certified { spec.curvature } else { Curvature::Unknown };
    Ok(CurvatureState::new(curvature, mono, range))
}

/// State of `sum_k c_k * u_k + offset`.
pub fn combine(terms: &[(f64, CurvatureState)], offset: f64) -> CurvatureState {
    let mut curvature = Curvature::Affine;
    let mut mono = Monotonicity::Constant;
    let mut range = Interval::point(offset);
    for (c, s) in terms {
        let (cv, m) =
            if *c < 0.0 { (s.curvature.flip(), s.monotonicity.reverse()) } else { (s.curvature, s.monotonicity) };
        curvature = curvature.join_sum(cv);
        mono = mono.join(m);
        range = range.add(&s.range.scale(*c));
    }
    CurvatureState::new(curvature, mono, range)
}

pub type RefStates = BTreeMap<usize, CurvatureState>;

/// Precise analysis of a reference-free tree.
pub fn analyze(e: &Expr) -> Result<CurvatureState, DcpError> {
    analyze_with(e, &RefStates::new(), RangeMode::Precise)
}

pub fn analyze_with(e: &Expr, refs: &RefStates, mode: RangeMode) -> Result<CurvatureState, DcpError> {
    let mut path = Vec::new();
    walk(e, refs, mode, &mut path, &mut |_, _, _| {})
}

/// One row of the per-node state table.
#[derive(Clone, Debug, Serialize)]
pub struct NodeRow {
    pub path: Vec<usize>,
    pub expr: String,
    #[serde(flatten)]
    pub state: CurvatureState,
}

/// Post-order table of every sub-expression's state.
pub fn node_table(e: &Expr) -> Result<Vec<NodeRow>, DcpError> {
    let mut rows = Vec::new();
    let mut path = Vec::new();
    walk(e, &RefStates::new(), RangeMode::Precise, &mut path, &mut |p, node, s| {
        rows.push(NodeRow { path: p.to_vec(), expr: print(node), state: *s });
    })?;
    Ok(rows)
}

fn walk(
    e: &Expr,
    refs: &RefStates,
    mode: RangeMode,
    path: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize], &Expr, &CurvatureState),
) -> Result<CurvatureState, DcpError> {
    let mut child = |k: usize, c: &Expr, path: &mut Vec<usize>| -> Result<CurvatureState, DcpError> {
        path.push(k);
        let s = walk(c, refs, mode, path, visit);
        path.pop();
        let s = s?;
        Ok(match mode {
            RangeMode::Precise => s,
            RangeMode::Coarse => s.widened(),
        })
    };
    let state = match e {
        Expr::Var => CurvatureState::new(Curvature::Affine, Monotonicity::Nondecreasing, Interval::real_line()),
        Expr::Const(v) => CurvatureState::new(Curvature::Affine, Monotonicity::Constant, Interval::point(*v)),
        Expr::Ref(i) => *refs.get(i).ok_or(DcpError::UnresolvedRef(*i))?,
        Expr::Lin(l) => {
            let mut terms = Vec::with_capacity(l.terms.len());
            for (k, (c, t)) in l.terms.iter().enumerate() {
                terms.push((*c, child(k, t, path)?));
            }
            combine(&terms, l.offset)
        }
        Expr::Apply(atom, args) => {
            let mut states = Vec::with_capacity(args.len());
            for (k, a) in args.iter().enumerate() {
                states.push(child(k, a, path)?);
            }
            compose(*atom, &states).map_err(|source| DcpError::Domain { path: path.clone(), expr: print(e), source })?
        }
    };
    visit(path, e, &state);
    Ok(state)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifiedLabel {
    Convex,
    Concave,
    Uncertified,
}

/// Rule-certified label; affine functions report `convex` with `affine` set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Certification {
    pub label: CertifiedLabel,
    pub affine: bool,
}

pub fn certified_label(e: &Expr) -> Result<Certification, DcpError> {
    Ok(certify_state(&analyze(e)?))
}

pub fn certify_state(s: &CurvatureState) -> Certification {
    let (label, affine) = match s.curvature {
        Curvature::Affine => (CertifiedLabel::Convex, true),
        Curvature::Convex => (CertifiedLabel::Convex, false),
        Curvature::Concave => (CertifiedLabel::Concave, false),
        Curvature::Unknown => (CertifiedLabel::Uncertified, false),
    };
    Certification { label, affine }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn st(s: &str) -> CurvatureState {
        analyze(&parse(s).unwrap()).unwrap()
    }

    #[test]
    fn identity() {
        let s = st("x");
        assert_eq!(s.curvature, Curvature::Affine);
        assert_eq!(s.monotonicity, Monotonicity::Nondecreasing);
        assert_eq!(s.range, Interval::real_line());
        assert_eq!(s.coarse_range, CoarseRange::Any);
    }

    #[test]
    fn exp_of_decreasing_affine() {
        let s = st("exp(0.656(-0.342x+1.24)+0.76)");
        assert_eq!(s.curvature, Curvature::Convex);
        assert_eq!(s.monotonicity, Monotonicity::Nonincreasing);
        assert_eq!(s.coarse_range, CoarseRange::Pos);
    }

    #[test]
    fn exp_of_concave_is_uncertified() {
        assert_eq!(st("exp(-max(0,x))").curvature, Curvature::Unknown);
        let c = certified_label(&parse("exp(-max(0,x))").unwrap()).unwrap();
        assert_eq!(c.label, CertifiedLabel::Uncertified);
    }

    #[test]
    fn labels() {
        let c = certified_label(&parse("2x+1").unwrap()).unwrap();
        assert_eq!(c, Certification { label: CertifiedLabel::Convex, affine: true });
        let c = certified_label(&parse("-log(1+exp(x))").unwrap()).unwrap();
        assert_eq!(c.label, CertifiedLabel::Concave);
        let c = certified_label(&parse("exp(-(0.5x+1))").unwrap()).unwrap();
        assert_eq!(c.label, CertifiedLabel::Convex);
    }

    #[test]
    fn sums_and_negation() {
        assert_eq!(st("exp(x)+||x||_1").curvature, Curvature::Convex);
        assert_eq!(st("-(exp(x)+||x||_1)").curvature, Curvature::Concave);
        assert_eq!(st("exp(x)-||x||_1").curvature, Curvature::Unknown);
        assert_eq!(st("-exp(x)-||x||_1").curvature, Curvature::Concave);
    }

    #[test]
    fn range_refined_norm_monotonicity() {
        // ||u|| with u >= 0 is nondecreasing, so the composition with convex u is convex
        assert_eq!(st("||exp(x)||_2").curvature, Curvature::Convex);
        assert_eq!(st("||-exp(x)||_2").curvature, Curvature::Convex);
        assert_eq!(st("||exp(x)-1||_2").curvature, Curvature::Unknown);
        assert_eq!(st("-||exp(x)||_1").curvature, Curvature::Concave);
    }

    #[test]
    fn variadic_rules() {
        assert_eq!(st("max(exp(x),x)").curvature, Curvature::Convex);
        assert_eq!(st("max(exp(x),-exp(x))").curvature, Curvature::Unknown);
        assert_eq!(st("log(exp(exp(x))+exp(x))").curvature, Curvature::Convex);
        assert_eq!(st("min(-exp(x),-||x||_2)").curvature, Curvature::Concave);
    }

    #[test]
    fn domain_errors_have_paths() {
        let err = analyze(&parse("exp(log(exp(x))+sqrt(-exp(x)))").unwrap()).unwrap_err();
        let DcpError::Domain { path, expr, .. } = err else { panic!() };
        assert_eq!(path, vec![0, 1]);
        assert_eq!(expr, "sqrt(-exp(x))");
    }

    #[test]
    fn coarse_mode_widens_children() {
        // sqrt needs u >= 0; max(0,.) is nonnegative but only "any" in summary
        let e = parse("sqrt(max(0,x))").unwrap();
        assert!(analyze(&e).is_ok());
        assert!(analyze_with(&e, &RefStates::new(), RangeMode::Coarse).is_err());
    }

    #[test]
    fn refs_use_supplied_states() {
        let mut refs = RefStates::new();
        refs.insert(3, CurvatureState::from_summary(Curvature::Concave, CoarseRange::Neg));
        let e = parse("exp(-(g_3))").unwrap();
        let s = analyze_with(&e, &refs, RangeMode::Precise).unwrap();
        assert_eq!(s.curvature, Curvature::Convex);
        assert_eq!(s.coarse_range, CoarseRange::Pos);
        assert!(matches!(
            analyze_with(&parse("g_4").unwrap(), &refs, RangeMode::Precise),
            Err(DcpError::UnresolvedRef(4))
        ));
    }

    #[test]
    fn node_table_is_post_order() {
        let rows = node_table(&parse("exp(-(0.5x+1))").unwrap()).unwrap();
        assert_eq!(rows.last().unwrap().expr, "exp(-(0.5x+1))");
        assert_eq!(rows[0].expr, "x");
    }
}
