use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Nonempty open real interval with extended-real endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval(
    #[serde(with = "ext_real")] f64,
    #[serde(with = "ext_real")] f64,
);

impl TryFrom<RawInterval> for Interval {
    type Error = Error;

    fn try_from(raw: RawInterval) -> Result<Self> {
        Interval::new(raw.0, raw.1)
    }
}

impl From<Interval> for RawInterval {
    fn from(i: Interval) -> Self {
        RawInterval(i.lo, i.hi)
    }
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidSpec("interval endpoint is NaN".into()));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidSpec(format!("interval ({lo}, {hi}) is empty")));
        }
        if !(lo < hi) {
            return Err(Error::InvalidSpec(format!("interval requires lo < hi, got ({lo}, {hi})")));
        }
        Ok(Interval { lo, hi })
    }

    /// The positive half-line `(0, ∞)`.
    pub fn positive() -> Self {
        Interval { lo: 0.0, hi: f64::INFINITY }
    }

    pub fn real_line() -> Self {
        Interval { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Strict membership.
    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t < self.hi
    }

    /// `other ⊆ self`, both read as open intervals.
    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo >= 0.0
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// The quotient set `{a / b : a, b ∈ self}` of a positive interval, which
    /// is the open interval `(lo/hi, hi/lo)` in extended arithmetic.
    pub fn ratio_set(&self) -> Result<Interval> {
        if !self.is_positive() {
            return Err(Error::Domain(format!("ratio set needs a positive interval, got {self}")));
        }
        let lo = if self.hi.is_infinite() { 0.0 } else { self.lo / self.hi };
        let hi = if self.lo == 0.0 { f64::INFINITY } else { self.hi / self.lo };
        Interval::new(lo, hi)
    }

    /// Finite working range `[a, b]` with unbounded ends capped at `±cap`
    /// and, on positive intervals, a zero lower end raised to `1/cap`.
    pub fn capped(&self, cap: f64) -> (f64, f64) {
        let hi = if self.hi.is_finite() {
            self.hi
        } else if self.lo.is_finite() {
            cap.max(self.lo.abs() * 2.0)
        } else {
            cap
        };
        let lo = if self.lo == 0.0 {
            (1.0 / cap).min(hi / 2.0)
        } else if self.lo.is_finite() {
            self.lo
        } else {
            (-cap).min(hi - 1.0)
        };
        (lo, hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Serde adapter for extended reals: finite values are plain numbers and the
/// infinities are the strings `"inf"` and `"-inf"`.
pub mod ext_real {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else if *v < 0.0 {
            s.serialize_str("-inf")
        } else {
            s.serialize_str("nan")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct ExtVisitor;
        impl Visitor<'_> for ExtVisitor {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                    "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                    _ => Err(E::custom(format!("invalid extended real {v:?}"))),
                }
            }
        }
        d.deserialize_any(ExtVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_is_strict() {
        let i = Interval::new(1.0, 2.0).unwrap();
        assert!(!i.contains(1.0));
        assert!(!i.contains(2.0));
        assert!(i.contains(1.5));
        assert!(Interval::positive().contains(1e300));
        assert!(!Interval::positive().contains(0.0));
    }

    #[test]
    fn rejects_empty() {
        assert!(Interval::new(2.0, 2.0).is_err());
        assert!(Interval::new(3.0, 2.0).is_err());
        assert!(Interval::new(f64::INFINITY, f64::INFINITY).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn ratio_sets() {
        let i = Interval::new(2.0, 8.0).unwrap();
        let r = i.ratio_set().unwrap();
        assert_eq!((r.lo(), r.hi()), (0.25, 4.0));
        let p = Interval::positive().ratio_set().unwrap();
        assert_eq!((p.lo(), p.hi()), (0.0, f64::INFINITY));
        assert!(Interval::real_line().ratio_set().is_err());
    }

    #[test]
    fn caps() {
        assert_eq!(Interval::positive().capped(1e6), (1e-6, 1e6));
        assert_eq!(Interval::new(1.0, 3.0).unwrap().capped(1e6), (1.0, 3.0));
        assert_eq!(Interval::real_line().capped(10.0), (-10.0, 10.0));
    }
}
