//! Exact rational scalars and their wire format.
//!
//! Every quantity that feeds an exact set operation (λ, scale factors,
//! pitches, translations, box bounds) is a rational and is serialized as the
//! string `"k/m"` (or `"k"` for integers). Decimal literals are rejected so
//! the exactness boundary stays visible in spec files.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::Error;

/// Exact rational scalar used throughout the crate.
pub type Rat = Ratio<i64>;

/// Parse `"k/m"` or `"k"` into an exact rational. Decimals and floats fail.
pub fn parse_rat(s: &str) -> crate::Result<Rat> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (s, "1"),
    };
    let n: i64 = num
        .parse()
        .map_err(|_| Error::parse(format!("`{s}` is not a rational (expected `k` or `k/m`)")))?;
    let d: i64 = den
        .parse()
        .map_err(|_| Error::parse(format!("`{s}` is not a rational (expected `k` or `k/m`)")))?;
    if d == 0 {
        return Err(Error::parse(format!("`{s}` has a zero denominator")));
    }
    Ok(Ratio::new(n, d))
}

/// Format a rational back to its wire form.
pub fn format_rat(r: Rat) -> String {
    if r.denom() == &1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// A rational that (de)serializes as the string `"k/m"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RatStr(pub Rat);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rat(self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        parse_rat(&s).map(RatStr).map_err(D::Error::custom)
    }
}

impl From<Rat> for RatStr {
    fn from(r: Rat) -> Self {
        RatStr(r)
    }
}

/// Convenience constructor for tests and internal literals.
pub fn rat(n: i64, d: i64) -> Rat {
    Ratio::new(n, d)
}

/// True when `r` is an integer multiple of `step`.
pub fn is_multiple_of(r: Rat, step: Rat) -> bool {
    let q = r / step;
    q.denom() == &1
}

/// Positive part check used by validators.
pub fn require_positive(r: Rat, what: &str) -> crate::Result<Rat> {
    if r.is_positive() {
        Ok(r)
    } else {
        Err(Error::invalid(format!("{what} must be > 0, got {}", format_rat(r))))
    }
}

/// Nonnegative check used by validators.
pub fn require_non_negative(r: Rat, what: &str) -> crate::Result<Rat> {
    if r.is_negative() {
        Err(Error::invalid(format!("{what} must be >= 0, got {}", format_rat(r))))
    } else {
        Ok(r)
    }
}

/// Floor of a rational as an integer.
pub fn rat_floor(r: Rat) -> i64 {
    r.floor().to_integer()
}

/// Ceiling of a rational as an integer.
pub fn rat_ceil(r: Rat) -> i64 {
    r.ceil().to_integer()
}

pub fn rat_is_zero(r: Rat) -> bool {
    r.is_zero()
}
