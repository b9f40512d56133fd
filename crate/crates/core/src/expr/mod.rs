//! Symbolic scalar expressions in one variable `x`.
//!
//! Trees are immutable values. The normalizing constructors keep every tree
//! in the unique form the printer emits, so `parse(print(e)) == e` holds for
//! any tree built through them with 3-significant-figure coefficients.

mod eval;
mod num;
mod parse;
mod print;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::atoms::AtomId;

pub use eval::evaluate;
pub use num::{fmt_num, round_sig3};
pub use parse::{parse, ParseError};
pub use print::print;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var,
    Const(f64),
    /// Opaque reference to sub-function `g_i` (1-based); only appears in
    /// decomposition bodies.
    Ref(usize),
    Lin(LinComb),
    Apply(AtomId, Vec<Expr>),
}

/// `sum_k c_k * child_k + offset`, at least one term, no zero coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct LinComb {
    pub terms: Vec<(f64, Expr)>,
    pub offset: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("{atom} takes {expected} arguments, got {got}")]
    Arity { atom: AtomId, expected: String, got: usize },
    #[error("{0} is realized by a linear combination, not an application")]
    NotApplicable(AtomId),
}

impl Expr {
    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn constant(v: f64) -> Expr {
        Expr::Const(v)
    }

    /// `c*x + b`
    pub fn affine(c: f64, b: f64) -> Expr {
        Expr::lin(vec![(c, Expr::Var)], b)
    }

    /// Linear combination node. Zero coefficients are dropped; an empty sum
    /// is a constant and `1*c + 0` is `c` itself.
    pub fn lin(terms: Vec<(f64, Expr)>, offset: f64) -> Expr {
        let terms: Vec<(f64, Expr)> = terms.into_iter().filter(|(c, _)| *c != 0.0).collect();
        if terms.is_empty() {
            return Expr::Const(offset);
        }
        if terms.len() == 1 && terms[0].0 == 1.0 && offset == 0.0 {
            return terms.into_iter().next().expect("one term").1;
        }
        Expr::Lin(LinComb { terms, offset })
    }

    /// `-u`
    #[allow(clippy::should_implement_trait)]
    pub fn neg(u: Expr) -> Expr {
        Expr::lin(vec![(-1.0, u)], 0.0)
    }

    /// Atom application, normalized so that each printed form has exactly
    /// one tree.
    pub fn apply(atom: AtomId, args: Vec<Expr>) -> Result<Expr, ExprError> {
        if !atom.is_applied() {
            return Err(ExprError::NotApplicable(atom));
        }
        let arity = atom.spec().arity;
        if !arity.accepts(args.len()) {
            return Err(ExprError::Arity { atom, expected: format!("{arity:?}"), got: args.len() });
        }
        Ok(match atom {
            AtomId::Exp => match negated_operand(&args[0]) {
                Some(u) => Expr::Apply(AtomId::ExpNeg, vec![u.clone()]),
                None => Expr::Apply(atom, args),
            },
            // -exp(-u) prints like -(exp(-u)); keep the latter.
            AtomId::NegExp => match negated_operand(&args[0]) {
                Some(u) => Expr::neg(Expr::Apply(AtomId::ExpNeg, vec![u.clone()])),
                None => Expr::Apply(atom, args),
            },
            AtomId::Log => match lse_operands(&args[0]) {
                Some(ops) => Expr::Apply(AtomId::LogSumExp, ops),
                None => Expr::Apply(atom, args),
            },
            AtomId::Max if args.len() == 2 && args[0] == Expr::Const(0.0) => {
                let mut args = args;
                Expr::Apply(AtomId::Max0, vec![args.pop().expect("two args")])
            }
            _ => Expr::Apply(atom, args),
        })
    }

    /// Single-argument application; panics on atoms that are not unary.
    pub fn call(atom: AtomId, arg: Expr) -> Expr {
        Expr::apply(atom, vec![arg]).expect("unary atom")
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Expr::Var)
    }

    /// Affine in `x` without any atom application or reference.
    pub fn is_affine_in_x(&self) -> bool {
        match self {
            Expr::Var | Expr::Const(_) => true,
            Expr::Ref(_) | Expr::Apply(..) => false,
            Expr::Lin(l) => l.terms.iter().all(|(_, c)| c.is_affine_in_x()),
        }
    }

    /// Layers on the longest chain from the root to a leaf. An application
    /// adds one layer; a linear combination adds one only when it wraps
    /// something other than bare `x`/constants, so `c*x + b` is the base.
    pub fn structural_depth(&self) -> usize {
        match self {
            Expr::Var | Expr::Const(_) | Expr::Ref(_) => 0,
            Expr::Apply(_, args) => 1 + args.iter().map(Expr::structural_depth).max().unwrap_or(0),
            Expr::Lin(l) => {
                let wraps = l.terms.iter().any(|(_, c)| !matches!(c, Expr::Var | Expr::Const(_)));
                let inner = l.terms.iter().map(|(_, c)| c.structural_depth()).max().unwrap_or(0);
                inner + usize::from(wraps)
            }
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Var | Expr::Const(_) | Expr::Ref(_) => Vec::new(),
            Expr::Lin(l) => l.terms.iter().map(|(_, c)| c).collect(),
            Expr::Apply(_, args) => args.iter().collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        1 + self.children().into_iter().map(Expr::node_count).sum::<usize>()
    }

    /// Indices of the sub-function references in this tree, deduplicated
    /// and sorted.
    pub fn refs(&self) -> Vec<usize> {
        fn walk(e: &Expr, out: &mut Vec<usize>) {
            if let Expr::Ref(i) = e {
                out.push(*i);
            }
            for c in e.children() {
                walk(c, out);
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Non-whitespace characters of the printed form.
    pub fn printed_len(&self) -> usize {
        print(self).chars().filter(|c| !c.is_whitespace()).count()
    }
}

/// `u` when `e` is exactly `-u`.
fn negated_operand(e: &Expr) -> Option<&Expr> {
    match e {
        Expr::Lin(l) if l.offset == 0.0 && l.terms.len() == 1 && l.terms[0].0 == -1.0 => Some(&l.terms[0].1),
        _ => None,
    }
}

/// Operands `u_i` when `e` is `exp(u_1) + exp(u_2) + ...` (two or more unit
/// terms, no offset). `exp(-(b))` contributes `-b`.
fn lse_operands(e: &Expr) -> Option<Vec<Expr>> {
    let Expr::Lin(l) = e else { return None };
    if l.offset != 0.0 || l.terms.len() < 2 {
        return None;
    }
    l.terms
        .iter()
        .map(|(c, child)| match child {
            _ if *c != 1.0 => None,
            Expr::Apply(AtomId::Exp, a) => Some(a[0].clone()),
            Expr::Apply(AtomId::ExpNeg, a) => Some(Expr::neg(a[0].clone())),
            _ => None,
        })
        .collect()
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Expressions serialize as their canonical text.
impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&print(self))
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lin_normalization() {
        assert_eq!(Expr::lin(vec![(1.0, Expr::Var)], 0.0), Expr::Var);
        assert_eq!(Expr::lin(vec![(0.0, Expr::Var)], 2.0), Expr::Const(2.0));
        let l = Expr::lin(vec![(0.0, Expr::Var), (2.0, Expr::Var)], 0.0);
        assert_eq!(l, Expr::Lin(LinComb { terms: vec![(2.0, Expr::Var)], offset: 0.0 }));
    }

    #[test]
    fn exp_of_negation_is_exp_neg() {
        let e = Expr::call(AtomId::Exp, Expr::neg(Expr::affine(0.5, 1.0)));
        assert!(matches!(e, Expr::Apply(AtomId::ExpNeg, _)));
    }

    #[test]
    fn log_of_exp_sum_is_lse() {
        let s = Expr::lin(
            vec![(1.0, Expr::call(AtomId::Exp, Expr::Var)), (1.0, Expr::call(AtomId::ExpNeg, Expr::Var))],
            0.0,
        );
        let e = Expr::call(AtomId::Log, s);
        let Expr::Apply(AtomId::LogSumExp, args) = e else { panic!("not lse") };
        assert_eq!(args[1], Expr::neg(Expr::Var));
    }

    #[test]
    fn arity_is_checked() {
        assert!(Expr::apply(AtomId::Max, vec![Expr::Var]).is_err());
        assert!(Expr::apply(AtomId::Exp, vec![Expr::Var, Expr::Var]).is_err());
        assert!(Expr::apply(AtomId::Sum, vec![Expr::Var, Expr::Var]).is_err());
    }

    #[test]
    fn depth_examples() {
        assert_eq!(Expr::Var.structural_depth(), 0);
        assert_eq!(Expr::call(AtomId::Exp, Expr::Var).structural_depth(), 1);
        let e = parse("exp(0.656(-0.342x+1.24)+0.76)").unwrap();
        assert_eq!(e.structural_depth(), 2);
        assert_eq!(parse("-0.342x+1.24").unwrap().structural_depth(), 0);
    }

    #[test]
    fn refs_are_sorted_unique() {
        let e = parse("0.534g_3+0.238g_4+g_5+g_3").unwrap();
        assert_eq!(e.refs(), vec![3, 4, 5]);
    }

    #[test]
    fn serde_uses_text() {
        let e = parse("exp(-(0.5x+1))").unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, "\"exp(-(0.5x+1))\"");
        let back: Expr = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
