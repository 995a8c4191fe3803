//! Numeric plumbing: exact rationals, floats, and extended reals.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Number types a process can carry. Rationals are exact; `f64` is used
/// where logarithms and exponentials are unavoidable.
pub trait Scalar:
    Num + Signed + PartialOrd + Clone + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact conversion of a finite float (dyadic rational for exact types).
    fn from_f64_exact(v: f64) -> Self;
    /// `None` for exact types: an approximation must not pose as exact.
    fn from_f64_approx(v: f64) -> Option<Self>;
    fn close_to(&self, other: &Self, tol: f64) -> bool;
    fn render(&self) -> String;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(v)))
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_f64_exact(v: f64) -> Self {
        Rational::from_f64(v).expect("finite float")
    }

    fn from_f64_approx(_v: f64) -> Option<Self> {
        None
    }

    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn render(&self) -> String {
        render_rational(self)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_f64_exact(v: f64) -> Self {
        v
    }

    fn from_f64_approx(v: f64) -> Option<Self> {
        Some(v)
    }

    fn close_to(&self, other: &Self, tol: f64) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= tol * scale
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// "p/q" for proper fractions, "p" for integers.
pub fn render_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Accepts "p/q", integers and plain decimals such as "-0.125".
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::FixtureParse(format!("not a rational number: `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p = BigInt::from_str_radix(p.trim(), 10).map_err(|_| bad())?;
        let q = BigInt::from_str_radix(q.trim(), 10).map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let n = BigInt::from_str_radix(if digits.is_empty() { "0" } else { &digits }, 10)
            .map_err(|_| bad())?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(n, d);
        return Ok(if neg { -r } else { r });
    }
    BigInt::from_str_radix(s, 10)
        .map(Rational::from_integer)
        .map_err(|_| bad())
}

/// An extended real: a finite scalar or one of the two infinities.
#[derive(Debug, Clone, PartialEq)]
pub enum Ext<S> {
    NegInf,
    Finite(S),
    PosInf,
}

impl<S: Scalar> Ext<S> {
    pub fn zero() -> Self {
        Ext::Finite(S::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn finite(&self) -> Option<&S> {
        match self {
            Ext::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn into_finite(self) -> Option<S> {
        match self {
            Ext::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Sum with the convention that −∞ absorbs everything.
    pub fn add(&self, other: &Self) -> Self {
        match (self, other) {
            (Ext::NegInf, _) | (_, Ext::NegInf) => Ext::NegInf,
            (Ext::PosInf, _) | (_, Ext::PosInf) => Ext::PosInf,
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a.clone() + b.clone()),
        }
    }

    pub fn neg(&self) -> Self {
        match self {
            Ext::NegInf => Ext::PosInf,
            Ext::PosInf => Ext::NegInf,
            Ext::Finite(a) => Ext::Finite(-a.clone()),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// Multiplication by a strictly positive scalar.
    pub fn scale(&self, k: &S) -> Self {
        match self {
            Ext::Finite(a) => Ext::Finite(a.clone() * k.clone()),
            other => other.clone(),
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn close_to(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => a.close_to(b, tol),
            (Ext::NegInf, Ext::NegInf) | (Ext::PosInf, Ext::PosInf) => true,
            _ => false,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Ext::NegInf => f64::NEG_INFINITY,
            Ext::PosInf => f64::INFINITY,
            Ext::Finite(a) => a.to_f64(),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Ext::NegInf => "-inf".to_string(),
            Ext::PosInf => "+inf".to_string(),
            Ext::Finite(a) => a.render(),
        }
    }
}

impl<S: Scalar> PartialOrd for Ext<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => a.partial_cmp(b),
            (Ext::NegInf, Ext::NegInf) | (Ext::PosInf, Ext::PosInf) => Some(Ordering::Equal),
            (Ext::NegInf, _) | (_, Ext::PosInf) => Some(Ordering::Less),
            (Ext::PosInf, _) | (_, Ext::NegInf) => Some(Ordering::Greater),
        }
    }
}

impl<S: Scalar> fmt::Display for Ext<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<S> From<S> for Ext<S> {
    fn from(v: S) -> Self {
        Ext::Finite(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rational(" -7 ").unwrap(), int(-7));
        assert_eq!(parse_rational("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_rational("2.5").unwrap(), rat(5, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1.").is_err());
    }

    #[test]
    fn renders_rationals() {
        assert_eq!(render_rational(&rat(6, 8)), "3/4");
        assert_eq!(render_rational(&int(-2)), "-2");
    }

    #[test]
    fn extended_arithmetic() {
        let a: Ext<Rational> = Ext::Finite(int(2));
        assert_eq!(Ext::NegInf.add(&a), Ext::NegInf);
        assert_eq!(a.add(&Ext::NegInf), Ext::NegInf);
        assert!(Ext::NegInf < a && a < Ext::PosInf);
        assert_eq!(a.clone().min(Ext::PosInf), a);
        assert_eq!(Ext::<Rational>::NegInf, Ext::NegInf);
    }

    #[test]
    fn float_closeness_is_relative_above_one() {
        assert!(1e12f64.close_to(&(1e12 + 1e2), 1e-9));
        assert!(!1f64.close_to(&1.1, 1e-9));
    }
}
