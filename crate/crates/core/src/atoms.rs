//! The atom library: elementary functions with known curvature,
//! per-argument monotonicity, domain and range.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomId {
    /// `a*u + b`; realized in trees as a linear combination node.
    Affine,
    /// Variadic nonnegative sum; realized as a linear combination node.
    Sum,
    Exp,
    /// `exp(-u)`
    ExpNeg,
    /// `log(1+exp(u))`
    Softplus,
    /// `max(0, u-1)`
    Hinge,
    /// `max(0, u)`
    Max0,
    Max,
    LogSumExp,
    NegSqrt,
    Norm1,
    Norm2,
    NormInf,
    /// `||u||_2^2`; not part of the strict atom table.
    SqNorm2,
    Log,
    Sqrt,
    NegExp,
    NegSoftplus,
    NegMax0,
    NegNorm1,
    NegNorm2,
    NegNormInf,
    /// Variadic minimum. Registered for the rule table, never synthesized.
    Min,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Affine,
    Convex,
    Concave,
    /// Not certifiable by the rule set. Never a proof of "neither".
    Unknown,
}

impl Curvature {
    pub fn as_str(self) -> &'static str {
        match self {
            Curvature::Affine => "affine",
            Curvature::Convex => "convex",
            Curvature::Concave => "concave",
            Curvature::Unknown => "unknown",
        }
    }

    pub fn is_convex(self) -> bool {
        matches!(self, Curvature::Affine | Curvature::Convex)
    }

    pub fn is_concave(self) -> bool {
        matches!(self, Curvature::Affine | Curvature::Concave)
    }

    /// Curvature of `-f`.
    pub fn flip(self) -> Curvature {
        match self {
            Curvature::Convex => Curvature::Concave,
            Curvature::Concave => Curvature::Convex,
            other => other,
        }
    }

    /// Curvature of a sum of two functions with the given curvatures.
    pub fn join_sum(self, other: Curvature) -> Curvature {
        use Curvature::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Affine, c) | (c, Affine) => c,
            (Convex, Convex) => Convex,
            (Concave, Concave) => Concave,
            _ => Unknown,
        }
    }
}

impl fmt::Display for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotonicity {
    /// Both nondecreasing and nonincreasing.
    Constant,
    Nondecreasing,
    Nonincreasing,
    Nonmonotonic,
    Unknown,
}

impl Monotonicity {
    pub fn as_str(self) -> &'static str {
        match self {
            Monotonicity::Constant => "constant",
            Monotonicity::Nondecreasing => "nondecreasing",
            Monotonicity::Nonincreasing => "nonincreasing",
            Monotonicity::Nonmonotonic => "nonmonotonic",
            Monotonicity::Unknown => "unknown",
        }
    }

    pub fn is_nondecreasing(self) -> bool {
        matches!(self, Monotonicity::Constant | Monotonicity::Nondecreasing)
    }

    pub fn is_nonincreasing(self) -> bool {
        matches!(self, Monotonicity::Constant | Monotonicity::Nonincreasing)
    }

    pub fn reverse(self) -> Monotonicity {
        match self {
            Monotonicity::Nondecreasing => Monotonicity::Nonincreasing,
            Monotonicity::Nonincreasing => Monotonicity::Nondecreasing,
            other => other,
        }
    }

    /// Monotonicity of `outer(inner(x))` from the two links.
    pub fn chain(outer: Monotonicity, inner: Monotonicity) -> Monotonicity {
        use Monotonicity::*;
        match (outer, inner) {
            (Constant, _) | (_, Constant) => Constant,
            (Unknown, _) | (_, Unknown) => Unknown,
            (Nonmonotonic, _) | (_, Nonmonotonic) => Nonmonotonic,
            (Nondecreasing, m) => m,
            (Nonincreasing, m) => m.reverse(),
        }
    }

    /// Monotonicity of a function that is monotone like `self` in one
    /// argument and like `other` in another.
    pub fn join(self, other: Monotonicity) -> Monotonicity {
        use Monotonicity::*;
        match (self, other) {
            (Constant, m) | (m, Constant) => m,
            (Unknown, _) | (_, Unknown) => Unknown,
            (Nondecreasing, Nondecreasing) => Nondecreasing,
            (Nonincreasing, Nonincreasing) => Nonincreasing,
            _ => Nonmonotonic,
        }
    }
}

impl fmt::Display for Monotonicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "n")]
pub enum Arity {
    Fixed(usize),
    /// At least `n` arguments.
    Variadic(usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Fixed(k) => n == k,
            Arity::Variadic(min) => n >= min,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AtomError {
    #[error("unknown atom {0:?}")]
    Unknown(String),
    #[error("{atom} expects {expected:?} arguments, got {got}")]
    Arity { atom: AtomId, expected: Arity, got: usize },
    #[error("argument {index} of {atom} has range {range}, outside the domain {domain}")]
    Domain { atom: AtomId, index: usize, range: Interval, domain: Interval },
    #[error("{0} has no standalone range map (it needs coefficients)")]
    NeedsCoefficients(AtomId),
}

/// The property tuple of one atom.
#[derive(Clone, Debug, Serialize)]
pub struct AtomSpec {
    pub id: AtomId,
    pub arity: Arity,
    pub curvature: Curvature,
    /// Declared monotonicity, identical in every argument.
    pub monotonicity: Monotonicity,
    /// Domain of each argument.
    pub domain: Interval,
    /// Image of the domain.
    pub range: Interval,
    pub template: &'static str,
    /// Outside the strict atom table.
    pub extended: bool,
    /// Offered by the synthesizer.
    pub synthesizable: bool,
}

impl AtomId {
    pub const ALL: [AtomId; 23] = [
        AtomId::Affine,
        AtomId::Sum,
        AtomId::Exp,
        AtomId::ExpNeg,
        AtomId::Softplus,
        AtomId::Hinge,
        AtomId::Max0,
        AtomId::Max,
        AtomId::LogSumExp,
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
        AtomId::Min,
    ];

    pub fn name(self) -> &'static str {
        use AtomId::*;
        match self {
            Affine => "affine",
            Sum => "sum",
            Exp => "exp",
            ExpNeg => "exp_neg",
            Softplus => "softplus",
            Hinge => "hinge",
            Max0 => "max0",
            Max => "max",
            LogSumExp => "log_sum_exp",
            NegSqrt => "neg_sqrt",
            Norm1 => "norm1",
            Norm2 => "norm2",
            NormInf => "norm_inf",
            SqNorm2 => "sq_norm2",
            Log => "log",
            Sqrt => "sqrt",
            NegExp => "neg_exp",
            NegSoftplus => "neg_softplus",
            NegMax0 => "neg_max0",
            NegNorm1 => "neg_norm1",
            NegNorm2 => "neg_norm2",
            NegNormInf => "neg_norm_inf",
            Min => "min",
        }
    }

    pub fn spec(self) -> AtomSpec {
        use AtomId::*;
        use Curvature::{Affine as Aff, Concave, Convex};
        use Monotonicity::{Nondecreasing as Nd, Nonincreasing as Ni, Nonmonotonic as Nm};
        let real = Interval::real_line();
        let (arity, curvature, monotonicity, domain, range, template) = match self {
            Affine => (Arity::Fixed(1), Aff, Nm, real, real, "a*u+b"),
            Sum => (Arity::Variadic(2), Aff, Nd, real, real, "u1+u2+..."),
            Exp => (Arity::Fixed(1), Convex, Nd, real, Interval::positive(), "exp(u)"),
            ExpNeg => (Arity::Fixed(1), Convex, Ni, real, Interval::positive(), "exp(-(u))"),
            Softplus => (Arity::Fixed(1), Convex, Nd, real, Interval::positive(), "log(1+exp(u))"),
            Hinge => (Arity::Fixed(1), Convex, Nd, real, Interval::nonnegative(), "hinge(u)"),
            Max0 => (Arity::Fixed(1), Convex, Nd, real, Interval::nonnegative(), "max(0,u)"),
            Max => (Arity::Variadic(2), Convex, Nd, real, real, "max(u1,u2,...)"),
            LogSumExp => (Arity::Variadic(2), Convex, Nd, real, real, "log(exp(u1)+exp(u2)+...)"),
            NegSqrt => (Arity::Fixed(1), Convex, Ni, Interval::nonnegative(), Interval::nonpositive(), "-sqrt(u)"),
            Norm1 => (Arity::Fixed(1), Convex, Nm, real, Interval::nonnegative(), "||u||_1"),
            Norm2 => (Arity::Fixed(1), Convex, Nm, real, Interval::nonnegative(), "||u||_2"),
            NormInf => (Arity::Fixed(1), Convex, Nm, real, Interval::nonnegative(), "||u||_inf"),
            SqNorm2 => (Arity::Fixed(1), Convex, Nm, real, Interval::nonnegative(), "||u||_2^2"),
            Log => (Arity::Fixed(1), Concave, Nd, Interval::positive(), real, "log(u)"),
            Sqrt => (Arity::Fixed(1), Concave, Nd, Interval::nonnegative(), Interval::nonnegative(), "sqrt(u)"),
            NegExp => (Arity::Fixed(1), Concave, Ni, real, Interval::negative(), "-exp(u)"),
            NegSoftplus => (Arity::Fixed(1), Concave, Ni, real, Interval::negative(), "-log(1+exp(u))"),
            NegMax0 => (Arity::Fixed(1), Concave, Ni, real, Interval::nonpositive(), "-max(0,u)"),
            NegNorm1 => (Arity::Fixed(1), Concave, Nm, real, Interval::nonpositive(), "-||u||_1"),
            NegNorm2 => (Arity::Fixed(1), Concave, Nm, real, Interval::nonpositive(), "-||u||_2"),
            NegNormInf => (Arity::Fixed(1), Concave, Nm, real, Interval::nonpositive(), "-||u||_inf"),
            Min => (Arity::Variadic(2), Concave, Nd, real, real, "min(u1,u2,...)"),
        };
        AtomSpec {
            id: self,
            arity,
            curvature,
            monotonicity,
            domain,
            range,
            template,
            extended: matches!(self, SqNorm2 | Min),
            synthesizable: !matches!(self, Min),
        }
    }

    /// Atoms that are applied as tree nodes (everything except the two
    /// realized by linear combinations).
    pub fn is_applied(self) -> bool {
        !matches!(self, AtomId::Affine | AtomId::Sum)
    }

    /// For negated atoms, the atom they negate; printed as `-<base>`.
    pub fn negated_base(self) -> Option<AtomId> {
        use AtomId::*;
        match self {
            NegSqrt => Some(Sqrt),
            NegExp => Some(Exp),
            NegSoftplus => Some(Softplus),
            NegMax0 => Some(Max0),
            NegNorm1 => Some(Norm1),
            NegNorm2 => Some(Norm2),
            NegNormInf => Some(NormInf),
            _ => None,
        }
    }

    /// Inverse of [`AtomId::negated_base`].
    pub fn negated(self) -> Option<AtomId> {
        AtomId::ALL.iter().copied().find(|a| a.negated_base() == Some(self))
    }

    /// The semantic map. Returns NaN outside the domain.
    pub fn apply(self, args: &[f64]) -> f64 {
        use AtomId::*;
        match self {
            Affine => args[0],
            Sum => args.iter().sum(),
            Exp => args[0].exp(),
            ExpNeg => (-args[0]).exp(),
            Softplus => softplus(args[0]),
            Hinge => (args[0] - 1.0).max(0.0),
            Max0 => args[0].max(0.0),
            Max => args.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Min => args.iter().copied().fold(f64::INFINITY, f64::min),
            LogSumExp => log_sum_exp(args),
            NegSqrt => -checked_sqrt(args[0]),
            Sqrt => checked_sqrt(args[0]),
            Norm1 | Norm2 | NormInf => args[0].abs(),
            SqNorm2 => args[0] * args[0],
            Log => {
                if args[0] > 0.0 {
                    args[0].ln()
                } else {
                    f64::NAN
                }
            }
            NegExp => -args[0].exp(),
            NegSoftplus => -softplus(args[0]),
            NegMax0 => -args[0].max(0.0),
            NegNorm1 | NegNorm2 | NegNormInf => -args[0].abs(),
        }
    }

    /// Monotonicity in argument `index` restricted to `range`.
    ///
    /// Norm-like atoms are monotone on either half-line; everything else keeps
    /// its declared monotonicity.
    pub fn monotonicity_on(self, _index: usize, range: &Interval) -> Monotonicity {
        use AtomId::*;
        let declared = self.spec().monotonicity;
        match self {
            Norm1 | Norm2 | NormInf | SqNorm2 => {
                if range.is_nonnegative() {
                    Monotonicity::Nondecreasing
                } else if range.is_nonpositive() {
                    Monotonicity::Nonincreasing
                } else {
                    Monotonicity::Nonmonotonic
                }
            }
            NegNorm1 | NegNorm2 | NegNormInf => {
                if range.is_nonnegative() {
                    Monotonicity::Nonincreasing
                } else if range.is_nonpositive() {
                    Monotonicity::Nondecreasing
                } else {
                    Monotonicity::Nonmonotonic
                }
            }
            _ => declared,
        }
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AtomId {
    type Err = AtomError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AtomId::ALL.iter().copied().find(|a| a.name() == s).ok_or_else(|| AtomError::Unknown(s.to_string()))
    }
}

pub fn lookup(id: &str) -> Result<AtomSpec, AtomError> {
    Ok(id.parse::<AtomId>()?.spec())
}

/// Every registered atom.
pub fn registry() -> Vec<AtomSpec> {
    AtomId::ALL.iter().map(|a| a.spec()).collect()
}

/// JSON manifest of the registry, for documentation and conformance checks.
pub fn manifest_json() -> serde_json::Value {
    serde_json::to_value(registry()).expect("atom specs serialize")
}

pub(crate) fn softplus(t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

pub(crate) fn log_sum_exp(args: &[f64]) -> f64 {
    let m = args.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_nan() || args.iter().any(|a| a.is_nan()) {
        return f64::NAN;
    }
    if m.is_infinite() {
        return m;
    }
    m + args.iter().map(|a| (a - m).exp()).sum::<f64>().ln()
}

fn checked_sqrt(v: f64) -> f64 {
    if v >= 0.0 {
        v.sqrt()
    } else {
        f64::NAN
    }
}

/// Image of an interval under a nondecreasing map. `strict_right(t)` says
/// whether the map is strictly increasing just right of `t`, `strict_left(t)`
/// just left of it; together they decide whether open endpoints stay open.
fn image_nondecreasing(
    iv: &Interval,
    f: impl Fn(f64) -> f64,
    strict_right: impl Fn(f64) -> bool,
    strict_left: impl Fn(f64) -> bool,
) -> Interval {
    Interval::new(f(iv.lo), f(iv.hi), iv.lo_open && strict_right(iv.lo), iv.hi_open && strict_left(iv.hi))
}

fn image_abs(iv: &Interval) -> Interval {
    if iv.lo >= 0.0 {
        *iv
    } else if iv.hi <= 0.0 {
        iv.negate()
    } else {
        let (top, open) = match (-iv.lo).partial_cmp(&iv.hi) {
            Some(std::cmp::Ordering::Greater) => (-iv.lo, iv.lo_open),
            Some(std::cmp::Ordering::Less) => (iv.hi, iv.hi_open),
            _ => (iv.hi, iv.lo_open && iv.hi_open),
        };
        Interval::new(0.0, top, false, open)
    }
}

fn image_square(iv: &Interval) -> Interval {
    let a = image_abs(iv);
    Interval::new(a.lo * a.lo, a.hi * a.hi, a.lo_open, a.hi_open)
}

fn always(_: f64) -> bool {
    true
}

/// Sound image of a box of argument ranges (exact for monotone atoms).
pub fn output_range(id: AtomId, args: &[Interval]) -> Result<Interval, AtomError> {
    use AtomId::*;
    let spec = id.spec();
    if !spec.arity.accepts(args.len()) {
        return Err(AtomError::Arity { atom: id, expected: spec.arity, got: args.len() });
    }
    for (index, r) in args.iter().enumerate() {
        if !r.is_subset_of(&spec.domain) {
            return Err(AtomError::Domain { atom: id, index, range: *r, domain: spec.domain });
        }
    }
    let a = args[0];
    let out = match id {
        Affine => return Err(AtomError::NeedsCoefficients(id)),
        Sum => args[1..].iter().fold(a, |acc, r| acc.add(r)),
        Exp => image_nondecreasing(&a, f64::exp, always, always),
        ExpNeg => image_nondecreasing(&a.negate(), f64::exp, always, always),
        Softplus => image_nondecreasing(&a, softplus, always, always),
        Hinge => image_nondecreasing(&a, |t| (t - 1.0).max(0.0), |t| t >= 1.0, |t| t > 1.0),
        Max0 => image_nondecreasing(&a, |t| t.max(0.0), |t| t >= 0.0, |t| t > 0.0),
        Log => image_nondecreasing(&a, f64::ln, always, always),
        Sqrt => image_nondecreasing(&a, f64::sqrt, always, always),
        Norm1 | Norm2 | NormInf => image_abs(&a),
        SqNorm2 => image_square(&a),
        Max | Min => {
            let pick = |v: f64, w: f64| if id == Max { v.max(w) } else { v.min(w) };
            let lo = args.iter().map(|r| r.lo).fold(args[0].lo, pick);
            let hi = args.iter().map(|r| r.hi).fold(args[0].hi, pick);
            let lo_hits = args.iter().filter(|r| r.lo == lo);
            let hi_hits = args.iter().filter(|r| r.hi == hi);
            // max: the lower bound is attained only if every argument can sit
            // at or below it; the upper bound if any argument attains it.
            let (lo_open, hi_open) = if id == Max {
                (lo_hits.clone().any(|r| r.lo_open), hi_hits.clone().all(|r| r.hi_open))
            } else {
                (lo_hits.clone().all(|r| r.lo_open), hi_hits.clone().any(|r| r.hi_open))
            };
            Interval::new(lo, hi, lo_open, hi_open)
        }
        LogSumExp => {
            let lows: Vec<f64> = args.iter().map(|r| r.lo).collect();
            let highs: Vec<f64> = args.iter().map(|r| r.hi).collect();
            Interval::new(
                lse_ext(&lows),
                lse_ext(&highs),
                args.iter().any(|r| r.lo_open),
                args.iter().any(|r| r.hi_open),
            )
        }
        NegSqrt | NegExp | NegSoftplus | NegMax0 | NegNorm1 | NegNorm2 | NegNormInf => {
            let base = id.negated_base().expect("negated atom");
            output_range(base, args)?.negate()
        }
    };
    Ok(out)
}

/// log-sum-exp over extended reals (`-inf` terms vanish).
fn lse_ext(vals: &[f64]) -> f64 {
    if vals.contains(&f64::INFINITY) {
        return f64::INFINITY;
    }
    let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        f64::NEG_INFINITY
    } else {
        log_sum_exp(&finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_matches_atom_table() {
        let exp = lookup("exp").unwrap();
        assert_eq!(exp.curvature, Curvature::Convex);
        assert_eq!(exp.monotonicity, Monotonicity::Nondecreasing);
        assert_eq!(exp.domain, Interval::real_line());
        assert_eq!(exp.range, Interval::positive());

        let log = lookup("log").unwrap();
        assert_eq!(log.curvature, Curvature::Concave);
        assert_eq!(log.monotonicity, Monotonicity::Nondecreasing);
        assert_eq!(log.domain, Interval::positive());
        assert_eq!(log.range, Interval::real_line());

        let ns = lookup("neg_sqrt").unwrap();
        assert_eq!(ns.curvature, Curvature::Convex);
        assert_eq!(ns.monotonicity, Monotonicity::Nonincreasing);
        assert_eq!(ns.domain, Interval::nonnegative());
        assert_eq!(ns.range, Interval::nonpositive());
    }

    #[test]
    fn unknown_atom_is_an_error() {
        assert_eq!(lookup("tanh").unwrap_err(), AtomError::Unknown("tanh".into()));
    }

    #[test]
    fn output_range_examples() {
        let r = output_range(AtomId::Exp, &[Interval::closed(0.0, 1.0)]).unwrap();
        assert_eq!(r, Interval::closed(1.0, std::f64::consts::E));

        let r = output_range(AtomId::Max0, &[Interval::closed(-2.0, 3.0)]).unwrap();
        assert_eq!(r, Interval::closed(0.0, 3.0));

        let unit = Interval::closed(0.0, 1.0);
        let r = output_range(AtomId::LogSumExp, &[unit, unit]).unwrap();
        assert!((r.lo - 2f64.ln()).abs() < 1e-15);
        assert!((r.hi - (2.0 * std::f64::consts::E).ln()).abs() < 1e-15);
    }

    #[test]
    fn output_range_rejects_domain_exit() {
        let err = output_range(AtomId::Log, &[Interval::nonnegative()]).unwrap_err();
        assert!(matches!(err, AtomError::Domain { atom: AtomId::Log, .. }));
        let err = output_range(AtomId::Sqrt, &[Interval::closed(-1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, AtomError::Domain { .. }));
    }

    #[test]
    fn range_map_of_domain_is_declared_range() {
        for spec in registry() {
            if spec.id == AtomId::Affine {
                continue;
            }
            let n = match spec.arity {
                Arity::Fixed(n) | Arity::Variadic(n) => n,
            };
            let args = vec![spec.domain; n];
            let r = output_range(spec.id, &args).unwrap();
            assert_eq!(r, spec.range, "{}", spec.id);
        }
    }

    #[test]
    fn open_endpoints_of_exp_image() {
        let r = output_range(AtomId::Exp, &[Interval::real_line()]).unwrap();
        assert!(r.lo_open && r.lo == 0.0);
        let r = output_range(AtomId::Max0, &[Interval::positive()]).unwrap();
        assert!(r.lo_open);
        let r = output_range(AtomId::Max0, &[Interval::real_line()]).unwrap();
        assert!(!r.lo_open);
    }

    #[test]
    fn hinge_is_shifted_relu() {
        assert_eq!(AtomId::Hinge.apply(&[0.5]), 0.0);
        assert_eq!(AtomId::Hinge.apply(&[3.0]), 2.0);
    }

    #[test]
    fn refined_norm_monotonicity() {
        assert_eq!(AtomId::Norm2.monotonicity_on(0, &Interval::nonnegative()), Monotonicity::Nondecreasing);
        assert_eq!(AtomId::NegNorm1.monotonicity_on(0, &Interval::negative()), Monotonicity::Nondecreasing);
        assert_eq!(AtomId::Norm1.monotonicity_on(0, &Interval::real_line()), Monotonicity::Nonmonotonic);
    }

    #[test]
    fn negation_twins_are_consistent() {
        for a in AtomId::ALL {
            if let Some(base) = a.negated_base() {
                assert_eq!(base.negated(), Some(a));
                assert_eq!(a.spec().curvature, base.spec().curvature.flip());
                assert_eq!(a.apply(&[0.7]), -base.apply(&[0.7]));
            }
        }
    }

    #[test]
    fn manifest_lists_every_atom() {
        let m = manifest_json();
        assert_eq!(m.as_array().unwrap().len(), AtomId::ALL.len());
        assert_eq!(m[2]["id"], "exp");
    }
}
