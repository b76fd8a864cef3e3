//! Exact rational values and probabilities.
//!
//! Every rate this crate reports is an exact fraction of counts or of the
//! configured probabilities. Floating point only appears when a value is
//! rendered for humans or mapped into diagram coordinates.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational number.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn from_count(n: usize) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    /// `numer / denom` for two counts; `None` when `denom` is zero.
    pub fn ratio(numer: usize, denom: usize) -> Option<Self> {
        (denom != 0).then(|| Rational(BigRational::new(numer.into(), denom.into())))
    }

    /// The exact binary value of a finite float.
    pub fn from_f64(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    /// Rendered as `a/b`, or `a` for integers.
    pub fn exact_string(&self) -> String {
        self.0.to_string()
    }
}

impl From<BigRational> for Rational {
    fn from(value: BigRational) -> Self {
        Rational(value)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::ops::Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational(&self.0 - &rhs.0)
    }
}

impl std::ops::Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational(&self.0 * &rhs.0)
    }
}

impl std::ops::Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        Rational(&self.0 / &rhs.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        Rational(iter.fold(BigRational::zero(), |acc, r| acc + r.0))
    }
}

impl FromStr for Rational {
    type Err = Error;

    /// Accepts `a/b`, plain decimals (`0.75`, `.5`, `3`) and decimals with an
    /// exponent (`1e-5`, `2.5E+1`).
    fn from_str(s: &str) -> Result<Self> {
        parse_rational(s.trim()).ok_or_else(|| Error::InvalidProbability(s.to_string()))
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = parse_int(n.trim())?;
        let d: BigInt = parse_int(d.trim())?;
        if d.is_zero() {
            return None;
        }
        return Some(Rational(BigRational::new(n, d)));
    }
    parse_decimal(s)
}

fn parse_int(s: &str) -> Option<BigInt> {
    let digits = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], parse_int(&s[pos + 1..])?.to_i32()?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().ok()?);
    let scale = exponent.checked_sub(frac_part.len() as i32)?;
    if scale.unsigned_abs() > 4096 {
        return None;
    }
    let ten = BigRational::from_integer(BigInt::from(10));
    let factor = num_traits::pow(ten, scale.unsigned_abs() as usize);
    if scale >= 0 {
        value *= factor;
    } else {
        value /= factor;
    }
    if negative {
        value = -value;
    }
    Some(Rational(value))
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Rational", 2)?;
        st.serialize_field("exact", &self.exact_string())?;
        st.serialize_field("decimal", &self.to_f64())?;
        st.end()
    }
}

/// A probability: an exact rational in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Probability(Rational);

impl Probability {
    pub fn new(value: Rational) -> Result<Self> {
        if value < Rational::zero() || value > Rational::one() {
            return Err(Error::InvalidProbability(value.exact_string()));
        }
        Ok(Probability(value))
    }

    /// `numer / denom`; panics unless `0 <= numer <= denom` and `denom > 0`.
    pub fn from_ratio(numer: u64, denom: u64) -> Self {
        assert!(denom > 0 && numer <= denom, "{numer}/{denom} is not a probability");
        Probability(Rational(BigRational::new(numer.into(), denom.into())))
    }

    /// Fraction of `hits` among `total`; `None` when `total` is zero.
    pub fn of_counts(hits: usize, total: usize) -> Option<Self> {
        assert!(hits <= total);
        Rational::ratio(hits, total).map(Probability)
    }

    pub fn zero() -> Self {
        Probability(Rational::zero())
    }

    pub fn one() -> Self {
        Probability(Rational::one())
    }

    pub fn from_f64(x: f64) -> Result<Self> {
        let r = Rational::from_f64(x).ok_or_else(|| Error::InvalidProbability(x.to_string()))?;
        Probability::new(r)
    }

    pub fn complement(&self) -> Probability {
        Probability(&Rational::one() - &self.0)
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// `|self - other|`.
    pub fn distance(&self, other: &Probability) -> Rational {
        (&self.0 - &other.0).abs()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0 == Rational::one()
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for Probability {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let r: Rational = s.parse()?;
        Probability::new(r).map_err(|_| Error::InvalidProbability(s.to_string()))
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

/// A non-negative comparison tolerance held exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Tolerance {
    value: f64,
    exact: Rational,
}

impl Tolerance {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidTolerance(value));
        }
        let exact = Rational::from_f64(value).ok_or(Error::InvalidTolerance(value))?;
        Ok(Tolerance { value, exact })
    }

    pub fn zero() -> Self {
        Tolerance {
            value: 0.0,
            exact: Rational::zero(),
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> &Rational {
        &self.exact
    }

    pub fn is_zero(&self) -> bool {
        self.exact.is_zero()
    }

    /// True iff `difference` exceeds the tolerance.
    pub fn exceeded_by(&self, difference: &Rational) -> bool {
        difference > &self.exact
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::zero()
    }
}
