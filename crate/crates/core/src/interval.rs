//! Extended-real intervals with open/closed endpoints.
//!
//! Used both for atom domains and for the ranges propagated by the curvature
//! engine. Infinite endpoints are always stored as open.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    #[serde(with = "ext_real")]
    pub lo: f64,
    #[serde(with = "ext_real")]
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

/// Three-way sign summary of a range, as exchanged with solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseRange {
    Pos,
    Neg,
    Any,
}

impl CoarseRange {
    pub fn as_str(self) -> &'static str {
        match self {
            CoarseRange::Pos => "pos",
            CoarseRange::Neg => "neg",
            CoarseRange::Any => "any",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pos" => Some(CoarseRange::Pos),
            "neg" => Some(CoarseRange::Neg),
            "any" => Some(CoarseRange::Any),
            _ => None,
        }
    }

    /// The widest interval with this sign summary.
    pub fn widen(self) -> Interval {
        match self {
            CoarseRange::Pos => Interval::positive(),
            CoarseRange::Neg => Interval::negative(),
            CoarseRange::Any => Interval::real_line(),
        }
    }
}

impl fmt::Display for CoarseRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Interval {
    /// Builds an interval, normalizing infinite endpoints to open and rejecting
    /// empty or inverted bounds.
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Self {
        assert!(!lo.is_nan() && !hi.is_nan(), "interval endpoint is NaN");
        // Overflowed finite bounds: keep them representable and sound.
        let lo = if lo == f64::INFINITY { f64::MAX } else { lo };
        let hi = if hi == f64::NEG_INFINITY { f64::MIN } else { hi };
        assert!(lo <= hi, "inverted interval [{lo}, {hi}]");
        let mut iv = Interval { lo, hi, lo_open: lo_open || lo.is_infinite(), hi_open: hi_open || hi.is_infinite() };
        if iv.lo == iv.hi {
            iv.lo_open = false;
            iv.hi_open = false;
        }
        iv
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }

    pub fn point(v: f64) -> Self {
        Self::closed(v, v)
    }

    pub fn real_line() -> Self {
        Self::new(f64::NEG_INFINITY, f64::INFINITY, true, true)
    }

    /// `(0, inf)`
    pub fn positive() -> Self {
        Self::new(0.0, f64::INFINITY, true, true)
    }

    /// `(-inf, 0)`
    pub fn negative() -> Self {
        Self::new(f64::NEG_INFINITY, 0.0, true, true)
    }

    /// `[0, inf)`
    pub fn nonnegative() -> Self {
        Self::new(0.0, f64::INFINITY, false, true)
    }

    /// `(-inf, 0]`
    pub fn nonpositive() -> Self {
        Self::new(f64::NEG_INFINITY, 0.0, true, false)
    }

    pub fn contains(&self, v: f64) -> bool {
        if v.is_nan() {
            return false;
        }
        let above = if self.lo_open { v > self.lo } else { v >= self.lo };
        let below = if self.hi_open { v < self.hi } else { v <= self.hi };
        above && below
    }

    /// Containment with a relative slack, for checking float evaluations
    /// against bounds computed in float arithmetic.
    pub fn contains_approx(&self, v: f64, rel: f64) -> bool {
        if self.contains(v) {
            return true;
        }
        let slack = rel * (1.0 + v.abs());
        v.is_finite() && v >= self.lo - slack && v <= self.hi + slack
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        let lo_ok = other.lo < self.lo || (other.lo == self.lo && (!other.lo_open || self.lo_open));
        let hi_ok = self.hi < other.hi || (other.hi == self.hi && (!other.hi_open || self.hi_open));
        lo_ok && hi_ok
    }

    pub fn coarse(&self) -> CoarseRange {
        if self.lo > 0.0 || (self.lo == 0.0 && self.lo_open) {
            CoarseRange::Pos
        } else if self.hi < 0.0 || (self.hi == 0.0 && self.hi_open) {
            CoarseRange::Neg
        } else {
            CoarseRange::Any
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0.0
    }

    pub fn is_nonpositive(&self) -> bool {
        self.hi <= 0.0
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::new(
            self.lo + other.lo,
            self.hi + other.hi,
            self.lo_open || other.lo_open,
            self.hi_open || other.hi_open,
        )
    }

    pub fn shift(&self, by: f64) -> Interval {
        Interval::new(self.lo + by, self.hi + by, self.lo_open, self.hi_open)
    }

    pub fn scale(&self, c: f64) -> Interval {
        if c == 0.0 {
            Interval::point(0.0)
        } else if c > 0.0 {
            Interval::new(c * self.lo, c * self.hi, self.lo_open, self.hi_open)
        } else {
            Interval::new(c * self.hi, c * self.lo, self.hi_open, self.lo_open)
        }
    }

    pub fn negate(&self) -> Interval {
        self.scale(-1.0)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lo_open { '(' } else { '[' };
        let close = if self.hi_open { ')' } else { ']' };
        write!(f, "{open}{}, {}{close}", self.lo, self.hi)
    }
}

/// JSON has no infinities; encode them as the strings "inf" / "-inf".
mod ext_real {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(de::Error::custom(format!("bad extended real {other:?}"))),
            },
        }
    }
}
