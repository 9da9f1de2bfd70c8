//! Exact rational scalar used for every cut position and value.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::DomainError;

/// Arbitrary-precision rational, always stored reduced with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fraction(BigRational);

impl Fraction {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Fraction(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_integer(n: i64) -> Self {
        Fraction(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Fraction(BigRational::zero())
    }

    pub fn one() -> Self {
        Fraction(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn checked_div(&self, rhs: &Fraction) -> Option<Fraction> {
        if rhs.is_zero() {
            None
        } else {
            Some(Fraction(&self.0 / &rhs.0))
        }
    }

    pub fn min(self, other: Fraction) -> Fraction {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Fraction) -> Fraction {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Lossy conversion, for display only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// `p/q` followed by a six-place decimal, e.g. `1/3 (0.333333)`.
    pub fn display_with_decimal(&self) -> String {
        format!("{} ({:.6})", self, self.to_f64())
    }

    pub fn in_unit_interval(&self) -> bool {
        !self.is_negative() && *self <= Fraction::one()
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Fraction {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || DomainError::BadFraction(s.to_string());
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Fraction(BigRational::new(n, d)))
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<i64> for Fraction {
    fn from(n: i64) -> Self {
        Fraction::from_integer(n)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<Fraction> for Fraction {
            type Output = Fraction;
            fn $method(self, rhs: Fraction) -> Fraction {
                Fraction(self.0.$method(rhs.0))
            }
        }
        impl<'a> $trait<&'a Fraction> for Fraction {
            type Output = Fraction;
            fn $method(self, rhs: &'a Fraction) -> Fraction {
                Fraction(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $trait<Fraction> for &'a Fraction {
            type Output = Fraction;
            fn $method(self, rhs: Fraction) -> Fraction {
                Fraction((&self.0).$method(rhs.0))
            }
        }
        impl<'a, 'b> $trait<&'b Fraction> for &'a Fraction {
            type Output = Fraction;
            fn $method(self, rhs: &'b Fraction) -> Fraction {
                Fraction((&self.0).$method(&rhs.0))
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Fraction {
    type Output = Fraction;
    fn neg(self) -> Fraction {
        Fraction(-self.0)
    }
}

impl Neg for &Fraction {
    type Output = Fraction;
    fn neg(self) -> Fraction {
        Fraction(-&self.0)
    }
}

impl AddAssign<&Fraction> for Fraction {
    fn add_assign(&mut self, rhs: &Fraction) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Fraction> for Fraction {
    fn sub_assign(&mut self, rhs: &Fraction) {
        self.0 -= &rhs.0;
    }
}

impl std::iter::Sum for Fraction {
    fn sum<I: Iterator<Item = Fraction>>(iter: I) -> Fraction {
        iter.fold(Fraction::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Fraction> for Fraction {
    fn sum<I: Iterator<Item = &'a Fraction>>(iter: I) -> Fraction {
        iter.fold(Fraction::zero(), |acc, x| acc + x)
    }
}

/// Shorthand for building fractions in tests and generators.
pub fn frac(numer: i64, denom: i64) -> Fraction {
    Fraction::new(numer, denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_reduces() {
        let f: Fraction = "2/4".parse().unwrap();
        assert_eq!(f, frac(1, 2));
        assert_eq!(f.to_string(), "1/2");
        let g: Fraction = "-3".parse().unwrap();
        assert_eq!(g.to_string(), "-3");
        let h: Fraction = "3/-6".parse().unwrap();
        assert_eq!(h, frac(-1, 2));
        assert!(h.denom() > &BigInt::zero());
    }

    #[test]
    fn rejects_garbage() {
        assert!("1/0".parse::<Fraction>().is_err());
        assert!("abc".parse::<Fraction>().is_err());
        assert!("".parse::<Fraction>().is_err());
    }

    #[test]
    fn arithmetic_is_exact() {
        let third = frac(1, 3);
        assert_eq!(&third + &third + &third, Fraction::one());
        assert_eq!(&third * frac(3, 1), Fraction::one());
        assert_eq!(third.checked_div(&Fraction::zero()), None);
        assert_eq!(frac(1, 2).display_with_decimal(), "1/2 (0.500000)");
    }

    #[test]
    fn serde_as_string() {
        let json = serde_json::to_string(&frac(3, 4)).unwrap();
        assert_eq!(json, "\"3/4\"");
        let back: Fraction = serde_json::from_str("\"6/8\"").unwrap();
        assert_eq!(back, frac(3, 4));
    }
}
