//! Cutting an expression into named sub-functions `g_1..g_k` with a
//! dependency graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{print, Expr, LinComb};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubFunction {
    /// 1-based.
    pub index: usize,
    pub name: String,
    /// Over `x` and references to strictly earlier sub-functions.
    #[serde(rename = "expr")]
    pub body: Expr,
    pub parents: Vec<usize>,
    /// Affine remainder of a sum: inlined by splicing its terms back into
    /// the referencing sum rather than as a nested term.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub splice: bool,
}

impl SubFunction {
    fn new(index: usize, body: Expr, splice: bool) -> Self {
        let parents = body.refs();
        SubFunction { index, name: format!("g_{index}"), body, parents, splice }
    }

    pub fn printed_form(&self) -> String {
        print(&self.body)
    }

    /// `g_i = <body>`
    pub fn definition(&self) -> String {
        format!("{} = {}", self.name, self.printed_form())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DependencyGraph {
    pub parents: BTreeMap<usize, BTreeSet<usize>>,
}

impl DependencyGraph {
    pub fn of(subs: &[SubFunction]) -> Self {
        DependencyGraph { parents: subs.iter().map(|s| (s.index, s.parents.iter().copied().collect())).collect() }
    }

    pub fn pa(&self, i: usize) -> Vec<usize> {
        self.parents.get(&i).map(|s| s.iter().copied().collect()).unwrap_or_default()
    }

    /// Indices in dependency order (identical to index order by construction).
    pub fn order(&self) -> Vec<usize> {
        self.parents.keys().copied().collect()
    }

    /// Sub-functions nothing else references.
    pub fn sinks(&self) -> Vec<usize> {
        let used: BTreeSet<usize> = self.parents.values().flatten().copied().collect();
        self.parents.keys().copied().filter(|i| !used.contains(i)).collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DecompError {
    #[error("g_{from} references g_{to}, which is not defined before it")]
    DanglingRef { from: usize, to: usize },
    #[error("empty decomposition")]
    Empty,
    #[error("no state for g_{0}")]
    MissingState(usize),
    #[error("no sub-function g_{0}")]
    NoSuchIndex(usize),
}

struct Cutter {
    max_len: usize,
    subs: Vec<SubFunction>,
}

fn len(e: &Expr) -> usize {
    print(e).chars().filter(|c| !c.is_whitespace()).count()
}

impl Cutter {
    fn cut(&mut self, body: Expr, splice: bool) -> Expr {
        let index = self.subs.len() + 1;
        self.subs.push(SubFunction::new(index, body, splice));
        Expr::Ref(index)
    }

    /// Returns `e` with over-long parts replaced by references.
    fn visit(&mut self, e: &Expr) -> Expr {
        match e {
            Expr::Var | Expr::Const(_) | Expr::Ref(_) => e.clone(),
            Expr::Lin(l) => {
                let mut terms: Vec<(f64, Expr)> = l.terms.iter().map(|(c, t)| (*c, self.visit(t))).collect();
                let mut offset = l.offset;
                let current = |terms: &[(f64, Expr)], offset: f64| Expr::Lin(LinComb { terms: terms.to_vec(), offset });
                for k in 0..terms.len() {
                    if len(&current(&terms, offset)) <= self.max_len {
                        break;
                    }
                    if matches!(terms[k].1, Expr::Apply(..) | Expr::Lin(_)) {
                        let body = std::mem::replace(&mut terms[k].1, Expr::Var);
                        terms[k].1 = self.cut(body, false);
                    }
                }
                if len(&current(&terms, offset)) > self.max_len {
                    self.extract_remainder(&mut terms, &mut offset);
                }
                current(&terms, offset)
            }
            Expr::Apply(atom, args) => {
                let mut args: Vec<Expr> = args.iter().map(|a| self.visit(a)).collect();
                for k in 0..args.len() {
                    if len(&Expr::Apply(*atom, args.clone())) <= self.max_len {
                        break;
                    }
                    let cuttable = match &args[k] {
                        Expr::Apply(..) => true,
                        Expr::Lin(_) => !args[k].is_affine_in_x(),
                        _ => false,
                    };
                    if cuttable {
                        let body = std::mem::replace(&mut args[k], Expr::Var);
                        args[k] = self.cut(body, false);
                    }
                }
                Expr::Apply(*atom, args)
            }
        }
    }

    /// In a sum that already references sub-functions, moves a contiguous
    /// run of `c*x` terms plus the offset into their own sub-function.
    fn extract_remainder(&mut self, terms: &mut Vec<(f64, Expr)>, offset: &mut f64) {
        if !terms.iter().any(|(_, t)| matches!(t, Expr::Ref(_))) {
            return;
        }
        let xs: Vec<usize> = (0..terms.len()).filter(|&k| terms[k].1.is_var()).collect();
        let Some(&first) = xs.first() else { return };
        if xs.len() != xs[xs.len() - 1] - first + 1 {
            return;
        }
        let run: Vec<(f64, Expr)> = terms[first..first + xs.len()].to_vec();
        let body = Expr::Lin(LinComb { terms: run, offset: *offset });
        if xs.len() == 1 && *offset == 0.0 {
            return;
        }
        let r = self.cut(body, true);
        terms.splice(first..first + xs.len(), [(1.0, r)]);
        *offset = 0.0;
    }
}

/// Greedy bottom-up cut: every node whose printed form exceeds `max_len`
/// non-whitespace characters has its children cut (left to right) until it
/// fits. Affine arguments of atoms are never cut, so an atom applied to an
/// inline affine argument is the smallest unit. The root is always the last
/// sub-function.
pub fn decompose(e: &Expr, max_len: usize) -> (Vec<SubFunction>, DependencyGraph) {
    let mut c = Cutter { max_len, subs: Vec::new() };
    let root = c.visit(e);
    c.cut(root, false);
    let graph = DependencyGraph::of(&c.subs);
    (c.subs, graph)
}

/// Inlines all references; the inverse of [`decompose`].
pub fn recompose(subs: &[SubFunction]) -> Result<Expr, DecompError> {
    if subs.is_empty() {
        return Err(DecompError::Empty);
    }
    let mut done: Vec<Expr> = Vec::with_capacity(subs.len());
    for (pos, s) in subs.iter().enumerate() {
        if s.index != pos + 1 {
            return Err(DecompError::NoSuchIndex(pos + 1));
        }
        let e = inline(&s.body, s.index, subs, &done)?;
        done.push(e);
    }
    Ok(done.pop().expect("nonempty"))
}

fn inline(e: &Expr, from: usize, subs: &[SubFunction], done: &[Expr]) -> Result<Expr, DecompError> {
    let lookup = |j: usize| -> Result<&Expr, DecompError> {
        if j == 0 || j > done.len() {
            Err(DecompError::DanglingRef { from, to: j })
        } else {
            Ok(&done[j - 1])
        }
    };
    Ok(match e {
        Expr::Var | Expr::Const(_) => e.clone(),
        Expr::Ref(j) => lookup(*j)?.clone(),
        Expr::Apply(atom, args) => {
            Expr::Apply(*atom, args.iter().map(|a| inline(a, from, subs, done)).collect::<Result<_, _>>()?)
        }
        Expr::Lin(l) => {
            let mut terms = Vec::with_capacity(l.terms.len());
            let mut offset = l.offset;
            for (c, t) in &l.terms {
                match t {
                    Expr::Ref(j) if *c == 1.0 && subs.get(j - 1).is_some_and(|s| s.splice) => match lookup(*j)? {
                        Expr::Lin(r) => {
                            terms.extend(r.terms.iter().cloned());
                            offset += r.offset;
                        }
                        other => terms.push((1.0, other.clone())),
                    },
                    _ => terms.push((*c, inline(t, from, subs, done)?)),
                }
            }
            Expr::Lin(LinComb { terms, offset })
        }
    })
}

/// `(g_j, σ_j)` for the direct dependencies of `g_i`, in index order.
pub fn focused_context<'a, S: Clone>(
    i: usize,
    subs: &'a [SubFunction],
    graph: &DependencyGraph,
    states: &BTreeMap<usize, S>,
) -> Result<Vec<(&'a SubFunction, S)>, DecompError> {
    graph
        .pa(i)
        .into_iter()
        .map(|j| {
            let s = subs.get(j.wrapping_sub(1)).ok_or(DecompError::NoSuchIndex(j))?;
            let st = states.get(&j).ok_or(DecompError::MissingState(j))?;
            Ok((s, st.clone()))
        })
        .collect()
}

/// `(g_j, σ_j)` for every `j < i`, in index order.
pub fn full_context<'a, S: Clone>(
    i: usize,
    subs: &'a [SubFunction],
    states: &BTreeMap<usize, S>,
) -> Result<Vec<(&'a SubFunction, S)>, DecompError> {
    subs.iter()
        .take_while(|s| s.index < i)
        .map(|s| {
            let st = states.get(&s.index).ok_or(DecompError::MissingState(s.index))?;
            Ok((s, st.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    const AST_FIXTURE: &str =
        "exp(exp(-(0.534(-exp(0.656(-0.342x+1.24)+0.76))+0.238(-||1.37x+0.0336||_1)-0.263x-1.33)))";

    fn forms(subs: &[SubFunction]) -> Vec<String> {
        subs.iter().map(|s| s.printed_form()).collect()
    }

    #[test]
    fn single_affine() {
        let (subs, g) = decompose(&parse("-0.342x+1.24").unwrap(), 50);
        assert_eq!(forms(&subs), vec!["-0.342x+1.24"]);
        assert_eq!(g.pa(1), Vec::<usize>::new());
    }

    #[test]
    fn fine_cut_of_fixture() {
        let e = parse(AST_FIXTURE).unwrap();
        let (subs, g) = decompose(&e, 10);
        assert_eq!(
            forms(&subs),
            vec![
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
        assert_eq!(g.pa(6), vec![3, 4, 5]);
        assert_eq!(g.sinks(), vec![8]);
        assert_eq!(recompose(&subs).unwrap(), e);
    }

    #[test]
    fn coarser_cuts_fewer() {
        let e = parse(AST_FIXTURE).unwrap();
        let n: Vec<usize> = [10, 50, 100].iter().map(|&l| decompose(&e, l).0.len()).collect();
        assert!(n[0] > n[1] && n[1] >= n[2], "{n:?}");
        assert_eq!(n[2], 1);
    }

    #[test]
    fn contexts() {
        let e = parse(AST_FIXTURE).unwrap();
        let (subs, g) = decompose(&e, 10);
        let states: BTreeMap<usize, u8> = (1..=8).map(|i| (i, i as u8)).collect();
        let f = focused_context(6, &subs, &g, &states).unwrap();
        assert_eq!(f.iter().map(|(s, _)| s.index).collect::<Vec<_>>(), vec![3, 4, 5]);
        assert!(focused_context(1, &subs, &g, &states).unwrap().is_empty());
        assert_eq!(full_context(6, &subs, &states).unwrap().len(), 5);
        let partial: BTreeMap<usize, u8> = BTreeMap::from([(3, 0), (4, 0)]);
        assert_eq!(focused_context(6, &subs, &g, &partial).unwrap_err(), DecompError::MissingState(5));
    }

    #[test]
    fn dangling_reference() {
        let subs = vec![SubFunction::new(1, parse("exp(g_2)").unwrap(), false)];
        assert_eq!(recompose(&subs).unwrap_err(), DecompError::DanglingRef { from: 1, to: 2 });
    }

    #[test]
    fn serde_shape() {
        let (subs, _) = decompose(&parse(AST_FIXTURE).unwrap(), 10);
        let v = serde_json::to_value(&subs[5]).unwrap();
        assert_eq!(v["name"], "g_6");
        assert_eq!(v["expr"], "0.534g_3+0.238g_4+g_5");
        assert_eq!(v["parents"], serde_json::json!([3, 4, 5]));
        assert!(v.get("splice").is_none());
        let back: Vec<SubFunction> = serde_json::from_value(serde_json::to_value(&subs).unwrap()).unwrap();
        assert_eq!(back, subs);
    }
}
