//! Extended-real p-th means, weighted (p,q) means, and the exponent
//! arithmetic behind the functional inequalities.
//!
//! Two variants of the two-point power mean coexist on purpose:
//!
//! * [`p_mean`] zeroes the result whenever `a·b = 0`, for every exponent
//!   (including `±∞`). This is the mean used by the plain inequality checks.
//! * [`raw_power_combination`] evaluates `((1-λ)aᵖ + λbᵖ)^{1/p}` with no
//!   zeroing, which is what the *general* (barred) inequality variant needs:
//!   for `a = 0` and `p > 0` it returns `λ^{1/p}·b`.
//!
//! Both accept `+∞` arguments for `p ≠ 0` and take the continuity value:
//! `∞` for `p > 0`, the finite-companion weighted limit for `p < 0`.

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{format_rat, rat_to_f64, Rat};
use crate::Error;

/// A non-negative extended real. `+∞` is a tag, never a sentinel float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Wraps a finite non-negative value. Panics on NaN/negative/infinite
    /// input; those are programming errors, not data.
    pub fn finite(x: f64) -> ExtReal {
        assert!(x.is_finite() && x >= 0.0, "ExtReal::finite expects a finite value >= 0, got {x}");
        ExtReal::Finite(x)
    }

    pub fn is_zero(self) -> bool {
        matches!(self, ExtReal::Finite(x) if x == 0.0)
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    /// Collapses to `f64`, mapping the infinity tag to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    fn min(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Infinity, o) => o,
            (s, ExtReal::Infinity) => s,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.min(b)),
        }
    }

    fn max(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Infinity, _) | (_, ExtReal::Infinity) => ExtReal::Infinity,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.max(b)),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

/// Mean exponent: finite rational, zero, or a signed infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PParam {
    NegInf,
    /// Nonzero finite rational; `PParam::finite` normalizes 0 to `Zero`.
    Finite(Rat),
    Zero,
    PosInf,
}

impl PParam {
    pub fn finite(p: Rat) -> PParam {
        if p.is_zero() {
            PParam::Zero
        } else {
            PParam::Finite(p)
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            PParam::NegInf => f64::NEG_INFINITY,
            PParam::Finite(p) => rat_to_f64(p),
            PParam::Zero => 0.0,
            PParam::PosInf => f64::INFINITY,
        }
    }

    pub fn describe(self) -> String {
        match self {
            PParam::NegInf => "-inf".to_string(),
            PParam::Finite(p) => format_rat(p),
            PParam::Zero => "0".to_string(),
            PParam::PosInf => "inf".to_string(),
        }
    }

    /// Parses `"inf"`, `"-inf"`, or a rational string.
    pub fn parse(s: &str) -> crate::Result<PParam> {
        match s.trim() {
            "inf" | "+inf" => Ok(PParam::PosInf),
            "-inf" => Ok(PParam::NegInf),
            other => Ok(PParam::finite(crate::rational::parse_rat(other)?)),
        }
    }
}

impl Serialize for PParam {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&self.describe())
    }
}

impl<'de> Deserialize<'de> for PParam {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        PParam::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Exact convex-combination weight `λ = k/m` with `0 < λ < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lambda(Rat);

impl Serialize for Lambda {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rat(self.0))
    }
}

impl<'de> Deserialize<'de> for Lambda {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        Lambda::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Lambda {
    pub fn new(r: Rat) -> crate::Result<Lambda> {
        if r <= Ratio::zero() || r >= Ratio::new(1, 1) {
            return Err(Error::invalid(format!(
                "lambda must satisfy 0 < lambda < 1, got {}",
                format_rat(r)
            )));
        }
        Ok(Lambda(r))
    }

    pub fn parse(s: &str) -> crate::Result<Lambda> {
        Lambda::new(crate::rational::parse_rat(s)?)
    }

    pub fn rat(self) -> Rat {
        self.0
    }

    /// Numerator k of λ = k/m in lowest terms.
    pub fn k(self) -> i64 {
        *self.0.numer()
    }

    /// Denominator m of λ = k/m in lowest terms.
    pub fn m(self) -> i64 {
        *self.0.denom()
    }

    pub fn value(self) -> f64 {
        rat_to_f64(self.0)
    }

    /// Exact 1 − λ, evaluated once in rational arithmetic.
    pub fn complement(self) -> f64 {
        rat_to_f64(Ratio::new(1, 1) - self.0)
    }
}

/// Weighted raw power combination `(w1·aᵖ + w2·bᵖ)^{1/p}` for finite p ≠ 0
/// and positive finite `a, b`. Factoring by the dominant term keeps huge |p|
/// from overflowing; an expm1/ln_1p path keeps tiny |p| from cancelling.
fn power_combination_positive(a: f64, b: f64, w1: f64, w2: f64, p: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0 && p != 0.0 && p.is_finite());

    // p -> 0 limit stability (only meaningful when the weights sum to 1).
    if p.abs() < 1e-3 && (w1 + w2 - 1.0).abs() < 1e-15 {
        let u = w1 * f64::exp_m1(p * a.ln()) + w2 * f64::exp_m1(p * b.ln());
        return f64::exp(f64::ln_1p(u) / p);
    }

    let pivot = if p > 0.0 { a.max(b) } else { a.min(b) };
    let s = w1 * (a / pivot).powf(p) + w2 * (b / pivot).powf(p);
    pivot * s.powf(1.0 / p)
}

/// Geometric combination `a^{1-λ} b^{λ}` for positive finite values,
/// factored so that `a = b` is exact.
fn geometric_positive(a: f64, b: f64, lam: Lambda) -> f64 {
    let pivot = a.max(b);
    pivot * (a / pivot).powf(lam.complement()) * (b / pivot).powf(lam.value())
}

/// The p-th mean `M_p(a, b, λ)` with the `a·b = 0 → 0` convention.
pub fn p_mean(a: ExtReal, b: ExtReal, lam: Lambda, p: PParam) -> ExtReal {
    if a.is_zero() || b.is_zero() {
        return ExtReal::ZERO;
    }
    match p {
        PParam::NegInf => a.min(b),
        PParam::PosInf => a.max(b),
        PParam::Zero => match (a, b) {
            (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::Finite(geometric_positive(x, y, lam)),
            _ => ExtReal::Infinity,
        },
        PParam::Finite(pr) => {
            let p = rat_to_f64(pr);
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => {
                    ExtReal::Finite(power_combination_positive(x, y, lam.complement(), lam.value(), p))
                }
                (ExtReal::Infinity, ExtReal::Infinity) => ExtReal::Infinity,
                (ExtReal::Infinity, ExtReal::Finite(y)) => {
                    if p > 0.0 {
                        ExtReal::Infinity
                    } else {
                        // lim_{a->inf} M_p = λ^{1/p} · b for p < 0.
                        ExtReal::Finite(lam.value().powf(1.0 / p) * y)
                    }
                }
                (ExtReal::Finite(x), ExtReal::Infinity) => {
                    if p > 0.0 {
                        ExtReal::Infinity
                    } else {
                        ExtReal::Finite(lam.complement().powf(1.0 / p) * x)
                    }
                }
            }
        }
    }
}

/// `((1-λ)aᵖ + λbᵖ)^{1/p}` with *no* `a·b = 0` zeroing, as required by the
/// general inequality variant. Continuity values at `p = 0, ±∞`.
pub fn raw_power_combination(a: ExtReal, b: ExtReal, lam: Lambda, p: PParam) -> ExtReal {
    match p {
        PParam::NegInf => a.min(b),
        PParam::PosInf => a.max(b),
        PParam::Zero => {
            if a.is_zero() || b.is_zero() {
                return ExtReal::ZERO;
            }
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => ExtReal::Finite(geometric_positive(x, y, lam)),
                _ => ExtReal::Infinity,
            }
        }
        PParam::Finite(pr) => {
            let p = rat_to_f64(pr);
            if p < 0.0 && (a.is_zero() || b.is_zero()) {
                // A zero argument sends the p < 0 combination to zero.
                return ExtReal::ZERO;
            }
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => {
                    if x == 0.0 && y == 0.0 {
                        ExtReal::ZERO
                    } else if x == 0.0 {
                        ExtReal::Finite(lam.value().powf(1.0 / p) * y)
                    } else if y == 0.0 {
                        ExtReal::Finite(lam.complement().powf(1.0 / p) * x)
                    } else {
                        ExtReal::Finite(power_combination_positive(x, y, lam.complement(), lam.value(), p))
                    }
                }
                (ExtReal::Infinity, ExtReal::Infinity) => ExtReal::Infinity,
                (ExtReal::Infinity, ExtReal::Finite(y)) => {
                    if p > 0.0 {
                        ExtReal::Infinity
                    } else {
                        ExtReal::Finite(lam.value().powf(1.0 / p) * y)
                    }
                }
                (ExtReal::Finite(x), ExtReal::Infinity) => {
                    if p > 0.0 {
                        ExtReal::Infinity
                    } else {
                        ExtReal::Finite(lam.complement().powf(1.0 / p) * x)
                    }
                }
            }
        }
    }
}

/// Weighted mean `((1-λ)^q aᵖ + λ^q bᵖ)^{1/p}` with the `a·b = 0 → 0`
/// convention. `p = 0` is rejected (the weights no longer sum to one, so the
/// geometric limit does not exist); `q ≥ 1`.
pub fn p_mean_weighted(a: ExtReal, b: ExtReal, lam: Lambda, p: PParam, q: f64) -> crate::Result<ExtReal> {
    if q < 1.0 || !q.is_finite() {
        return Err(Error::invalid(format!("weight exponent q must satisfy q >= 1, got {q}")));
    }
    if matches!(p, PParam::Zero) {
        return Err(Error::invalid("the weighted mean is undefined for p = 0"));
    }
    if a.is_zero() || b.is_zero() {
        return Ok(ExtReal::ZERO);
    }
    let w1 = lam.complement().powf(q);
    let w2 = lam.value().powf(q);
    Ok(match p {
        PParam::NegInf => a.min(b),
        PParam::PosInf => a.max(b),
        PParam::Zero => unreachable!(),
        PParam::Finite(pr) => {
            let p = rat_to_f64(pr);
            match (a, b) {
                (ExtReal::Finite(x), ExtReal::Finite(y)) => {
                    ExtReal::Finite(power_combination_positive(x, y, w1, w2, p))
                }
                (ExtReal::Infinity, ExtReal::Infinity) => ExtReal::Infinity,
                (ExtReal::Infinity, ExtReal::Finite(y)) => {
                    if p > 0.0 {
                        ExtReal::Infinity
                    } else {
                        // Same continuity convention as the unweighted mean.
                        ExtReal::Finite(w2.powf(1.0 / p) * y)
                    }
                }
                (ExtReal::Finite(x), ExtReal::Infinity) => {
                    if p > 0.0 {
                        ExtReal::Infinity
                    } else {
                        ExtReal::Finite(w1.powf(1.0 / p) * x)
                    }
                }
            }
        }
    })
}

/// Conclusion exponent `q(p, m) = p / (mp + 1)` of the functional
/// inequality, exact in rational arithmetic. Requires `p ≥ -1/m`; the
/// boundary `p = -1/m` maps to `-∞` and `p = +∞` maps to `1/m`.
pub fn bbl_exponent(p: PParam, m: Rat) -> crate::Result<PParam> {
    if !m.is_positive() {
        return Err(Error::invalid(format!("m must be > 0, got {}", format_rat(m))));
    }
    match p {
        PParam::Zero => Ok(PParam::Zero),
        PParam::PosInf => Ok(PParam::Finite(m.recip())),
        PParam::NegInf => Err(Error::invalid("p = -inf is below -1/m")),
        PParam::Finite(pr) => {
            let neg_inv_m = -m.recip();
            if pr < neg_inv_m {
                return Err(Error::invalid(format!(
                    "p = {} is below -1/m = {}",
                    format_rat(pr),
                    format_rat(neg_inv_m)
                )));
            }
            let denom = m * pr + Ratio::new(1, 1);
            if denom.is_zero() {
                Ok(PParam::NegInf)
            } else {
                Ok(PParam::finite(pr / denom))
            }
        }
    }
}
