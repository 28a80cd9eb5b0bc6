//! Exact dyadic rationals `k / 2^m`.
//!
//! Every mass, capacity and transport number in the crate is a [`Dyadic`].
//! Values are kept normalized (odd numerator, or `0/2^0`), so structural
//! equality is numeric equality and the derived `Hash` is consistent with it.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DyadicError {
    #[error("{value} has denominator 2^{exponent}, which does not divide 2^{level}")]
    LevelTooSmall {
        value: String,
        exponent: u32,
        level: u32,
    },
    #[error("'{0}' is not a dyadic rational (denominator must be a power of two)")]
    NotDyadic(String),
    #[error("malformed number '{0}'")]
    Malformed(String),
    #[error("{0} does not fit in a 64-bit word count")]
    TooLarge(String),
}

/// An exact dyadic rational `numerator / 2^exponent`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    num: BigInt,
    exp: u32,
}

impl Dyadic {
    /// Builds the normalized representation of `numerator / 2^exponent`.
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Self {
        let mut num = numerator.into();
        if num.is_zero() {
            return Self::zero();
        }
        let mut exp = exponent;
        if exp > 0 {
            let tz = num.trailing_zeros().unwrap_or(0);
            let shift = tz.min(u64::from(exp)) as u32;
            num >>= shift;
            exp -= shift;
        }
        Dyadic { num, exp }
    }

    pub fn zero() -> Self {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(n, 0)
    }

    /// `1 / 2^n`.
    pub fn half_pow(n: u32) -> Self {
        Dyadic {
            num: BigInt::one(),
            exp: n,
        }
    }

    pub fn numerator(&self) -> &BigInt {
        &self.num
    }

    /// The exponent of the reduced denominator.
    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.num.is_positive()
    }

    /// True when `0 <= self <= 1`.
    pub fn in_unit_interval(&self) -> bool {
        !self.is_negative() && *self <= Dyadic::one()
    }

    /// Returns `k` with `self == k / 2^level`.
    pub fn rescale_to_level(&self, level: u32) -> Result<BigInt, DyadicError> {
        if self.exp > level {
            return Err(DyadicError::LevelTooSmall {
                value: self.to_string(),
                exponent: self.exp,
                level,
            });
        }
        Ok(&self.num << (level - self.exp))
    }

    /// Like [`rescale_to_level`](Self::rescale_to_level) for non-negative values that
    /// count words of a level antichain.
    pub fn count_at_level(&self, level: u32) -> Result<u64, DyadicError> {
        let k = self.rescale_to_level(level)?;
        k.to_u64().ok_or_else(|| DyadicError::TooLarge(self.to_string()))
    }

    pub fn min(self, other: Dyadic) -> Dyadic {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Dyadic) -> Dyadic {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn checked_mul(&self, other: &Dyadic) -> Option<Dyadic> {
        let exp = self.exp.checked_add(other.exp)?;
        Some(Dyadic::new(&self.num * &other.num, exp))
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, u32) {
        let exp = self.exp.max(other.exp);
        (
            &self.num << (exp - self.exp),
            &other.num << (exp - other.exp),
            exp,
        )
    }
}

impl Default for Dyadic {
    fn default() -> Self {
        Dyadic::zero()
    }
}

impl From<i64> for Dyadic {
    fn from(n: i64) -> Self {
        Dyadic::from_int(n)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        if self.exp == other.exp {
            return self.num.cmp(&other.num);
        }
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(rhs);
        Dyadic::new(a + b, exp)
    }
}

impl Sub for &Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(rhs);
        Dyadic::new(a - b, exp)
    }
}

impl Mul for &Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        self.checked_mul(rhs)
            .expect("dyadic exponent overflowed u32")
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            num: -&self.num,
            exp: self.exp,
        }
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic { (&self).$m(&rhs) }
        }
        impl $tr<&Dyadic> for Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: &Dyadic) -> Dyadic { (&self).$m(rhs) }
        }
        impl $tr<Dyadic> for &Dyadic {
            type Output = Dyadic;
            fn $m(self, rhs: Dyadic) -> Dyadic { self.$m(&rhs) }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul);

impl AddAssign<&Dyadic> for Dyadic {
    fn add_assign(&mut self, rhs: &Dyadic) {
        *self = &*self + rhs;
    }
}

impl AddAssign for Dyadic {
    fn add_assign(&mut self, rhs: Dyadic) {
        *self += &rhs;
    }
}

impl SubAssign<&Dyadic> for Dyadic {
    fn sub_assign(&mut self, rhs: &Dyadic) {
        *self = &*self - rhs;
    }
}

impl SubAssign for Dyadic {
    fn sub_assign(&mut self, rhs: Dyadic) {
        *self -= &rhs;
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        -&self
    }
}

impl Sum for Dyadic {
    fn sum<I: Iterator<Item = Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Dyadic> for Dyadic {
    fn sum<I: Iterator<Item = &'a Dyadic>>(iter: I) -> Dyadic {
        iter.fold(Dyadic::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, BigInt::one() << self.exp)
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn parse_int(s: &str, whole: &str) -> Result<BigInt, DyadicError> {
    let t = s.trim();
    let digits = t.strip_prefix(['-', '+']).unwrap_or(t);
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(DyadicError::Malformed(whole.to_string()));
    }
    BigInt::from_str(t.strip_prefix('+').unwrap_or(t))
        .map_err(|_| DyadicError::Malformed(whole.to_string()))
}

impl FromStr for Dyadic {
    type Err = DyadicError;

    /// Accepts `k`, `k/d` with `d` a power of two, and `k/2^m`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let Some((num, den)) = s.split_once('/') else {
            return Ok(Dyadic::new(parse_int(s, s)?, 0));
        };
        let num = parse_int(num, s)?;
        let den = den.trim();
        if let Some(pow) = den.strip_prefix("2^") {
            let exp: u32 = pow
                .trim()
                .parse()
                .map_err(|_| DyadicError::Malformed(s.to_string()))?;
            return Ok(Dyadic::new(num, exp));
        }
        let den = parse_int(den, s)?;
        if !den.is_positive() {
            return Err(DyadicError::Malformed(s.to_string()));
        }
        let tz = den.trailing_zeros().unwrap_or(0);
        if den != (BigInt::one() << tz) {
            return Err(DyadicError::NotDyadic(s.to_string()));
        }
        let exp = u32::try_from(tz).map_err(|_| DyadicError::TooLarge(s.to_string()))?;
        Ok(Dyadic::new(num, exp))
    }
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Int(i64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(n) => Ok(Dyadic::from_int(n)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(s: &str) -> Dyadic {
        s.parse().unwrap()
    }

    #[test]
    fn normalize_cancels_common_factors() {
        let x = Dyadic::new(2, 2);
        assert_eq!((x.numerator().clone(), x.exponent()), (BigInt::from(1), 1));
        let z = Dyadic::new(0, 5);
        assert_eq!((z.numerator().clone(), z.exponent()), (BigInt::from(0), 0));
        let y = Dyadic::new(3, 3);
        assert_eq!((y.numerator().clone(), y.exponent()), (BigInt::from(3), 3));
        assert_eq!(Dyadic::new(-12, 4), d("-3/4"));
        assert_eq!(Dyadic::new(8, 1), Dyadic::from_int(4));
    }

    #[test]
    fn arithmetic_examples() {
        assert_eq!(d("1/2") + d("1/4"), d("3/4"));
        assert_eq!(d("1/2") * d("1/2"), d("1/4"));
        assert_eq!(d("3/8").cmp(&d("1/2")), Ordering::Less);
        assert_eq!(d("1/4") - d("1/2"), d("-1/4"));
        assert!((d("1/4") - d("1/2")).is_negative());
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(d("1/2").rescale_to_level(3).unwrap(), BigInt::from(4));
        assert_eq!(d("3/8").rescale_to_level(3).unwrap(), BigInt::from(3));
        assert!(matches!(
            d("1/4").rescale_to_level(1),
            Err(DyadicError::LevelTooSmall { exponent: 2, level: 1, .. })
        ));
    }

    #[test]
    fn text_forms() {
        assert_eq!(d("0"), Dyadic::zero());
        assert_eq!(d("1"), Dyadic::one());
        assert_eq!(d("3/2^3"), d("3/8"));
        assert_eq!(d("6/16").to_string(), "3/8");
        assert_eq!(Dyadic::from_int(-2).to_string(), "-2");
        assert!(matches!("1/3".parse::<Dyadic>(), Err(DyadicError::NotDyadic(_))));
        assert!(matches!("1/0".parse::<Dyadic>(), Err(DyadicError::Malformed(_))));
        assert!(matches!("a/2".parse::<Dyadic>(), Err(DyadicError::Malformed(_))));
        assert!(matches!("".parse::<Dyadic>(), Err(DyadicError::Malformed(_))));
    }

    #[test]
    fn serde_uses_text_form() {
        let v = serde_json::to_string(&d("5/16")).unwrap();
        assert_eq!(v, "\"5/16\"");
        let back: Dyadic = serde_json::from_str(&v).unwrap();
        assert_eq!(back, d("5/16"));
        let int: Dyadic = serde_json::from_str("1").unwrap();
        assert_eq!(int, Dyadic::one());
        assert!(serde_json::from_str::<Dyadic>("\"2/3\"").is_err());
    }

    fn arb_dyadic() -> impl Strategy<Value = Dyadic> {
        (-1000i64..1000, 0u32..12).prop_map(|(n, e)| Dyadic::new(n, e))
    }

    fn is_normalized(x: &Dyadic) -> bool {
        (x.num.is_zero() && x.exp == 0) || x.exp == 0 || x.num.trailing_zeros() == Some(0)
    }

    proptest! {
        #[test]
        fn results_are_normalized(a in arb_dyadic(), b in arb_dyadic()) {
            for r in [&a + &b, &a - &b, &a * &b] {
                prop_assert!(is_normalized(&r));
                prop_assert_eq!(Dyadic::new(r.num.clone(), r.exp), r);
            }
        }

        #[test]
        fn ring_laws(a in arb_dyadic(), b in arb_dyadic(), c in arb_dyadic()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
        }

        #[test]
        fn rescale_roundtrip(a in arb_dyadic(), extra in 0u32..8) {
            let level = a.exponent() + extra;
            let k = a.rescale_to_level(level).unwrap();
            prop_assert_eq!(Dyadic::new(k, level), a);
        }

        #[test]
        fn text_roundtrip(a in arb_dyadic()) {
            prop_assert_eq!(a.to_string().parse::<Dyadic>().unwrap(), a);
        }
    }
}
