//! The extended real line.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A point of `[-inf, +inf]`.
///
/// Infinities are explicit variants and the finite payload is never NaN, so
/// the order is total. `sup` of an empty family is `NegInf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);
    pub const ONE: ExtReal = ExtReal::Finite(1.0);

    /// Maps `f64` infinities onto the infinite variants; NaN is rejected.
    pub fn new(x: f64) -> Result<Self> {
        if x.is_nan() {
            Err(Error::InvalidParameter("NaN is not an extended real".into()))
        } else {
            Ok(Self::from_f64(x))
        }
    }

    /// Like [`ExtReal::new`] but panics on NaN.
    pub fn from_f64(x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an extended real");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    /// `a * self` for a finite positive factor; infinities are preserved.
    pub fn scale(self, a: f64) -> Self {
        debug_assert!(a > 0.0 && a.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(a * x),
            other => other,
        }
    }

    /// `self + b` for a finite shift; infinities are preserved.
    pub fn shift(self, b: f64) -> Self {
        debug_assert!(b.is_finite());
        match self {
            ExtReal::Finite(x) => ExtReal::from_f64(x + b),
            other => other,
        }
    }

    /// `|self - other|` with `inf - inf = 0` for equal infinities.
    pub fn distance(self, other: Self) -> f64 {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => (a - b).abs(),
            (a, b) if a == b => 0.0,
            _ => f64::INFINITY,
        }
    }
}

impl Eq for ExtReal {}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtReal {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.total_cmp(b),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::PosInf => f.write_str("+inf"),
            // `{:?}` prints the shortest representation that round-trips.
            ExtReal::Finite(x) => write!(f, "{x:?}"),
        }
    }
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+inf" | "inf" | "+Inf" | "Inf" => Ok(ExtReal::PosInf),
            "-inf" | "-Inf" => Ok(ExtReal::NegInf),
            t => {
                let x: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("not an extended real: `{t}`")))?;
                if !x.is_finite() {
                    return Err(Error::Parse(format!("not a decimal literal: `{t}`")));
                }
                Ok(ExtReal::Finite(x))
            }
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::PosInf => serializer.serialize_str("+inf"),
            ExtReal::NegInf => serializer.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct ExtVisitor;

        impl Visitor<'_> for ExtVisitor {
            type Value = ExtReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"+inf\", \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtReal, E> {
                ExtReal::new(v).map_err(E::custom)
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtReal, E> {
                Ok(ExtReal::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtReal, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExtVisitor)
    }
}
