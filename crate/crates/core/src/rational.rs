//! Reduced rational numbers over `i64` with loud overflow behaviour.
//!
//! Every [`Frac`] is kept in canonical form: the denominator is strictly
//! positive and `gcd(|num|, den) == 1`. Arithmetic is exact; any operation
//! whose reduced result would not fit in `i64` panics rather than wrapping,
//! because a silently wrong share is worse than a crash here.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced when constructing or combining fractions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("denominator must not be zero")]
    ZeroDenominator,
    #[error("division by zero fraction")]
    DivisionByZero,
    #[error("rational arithmetic overflowed i64")]
    Overflow,
    #[error("cannot take lcm of an empty set of fractions")]
    EmptyInput,
    #[error("malformed fraction literal `{0}`, expected `num/den` or an integer")]
    Parse(String),
}

/// An exact rational number in reduced form with a positive denominator.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Frac {
    num: i64,
    den: i64,
}

fn gcd_i128(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn lcm_i128(a: i128, b: i128) -> i128 {
    if a == 0 || b == 0 {
        return 0;
    }
    (a / gcd_i128(a, b)).abs() * b.abs()
}

impl Frac {
    pub const ZERO: Frac = Frac { num: 0, den: 1 };
    pub const ONE: Frac = Frac { num: 1, den: 1 };

    /// Builds a reduced fraction, rejecting a zero denominator.
    pub fn new(num: i64, den: i64) -> Result<Frac, RationalError> {
        Frac::make(num as i128, den as i128)
    }

    /// Whole-number fraction `n/1`.
    pub fn from_int(n: i64) -> Frac {
        Frac { num: n, den: 1 }
    }

    /// Reduces `num/den` given as wide integers, checking the result fits.
    fn make(num: i128, den: i128) -> Result<Frac, RationalError> {
        if den == 0 {
            return Err(RationalError::ZeroDenominator);
        }
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd_i128(num, den);
        let (num, den) = if g == 0 {
            (0, 1)
        } else {
            (sign * num / g, sign * den / g)
        };
        if num < i64::MIN as i128 || num > i64::MAX as i128 || den > i64::MAX as i128 {
            return Err(RationalError::Overflow);
        }
        Ok(Frac {
            num: num as i64,
            den: den as i64,
        })
    }

    pub fn numer(self) -> i64 {
        self.num
    }

    pub fn denom(self) -> i64 {
        self.den
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_negative(self) -> bool {
        self.num < 0
    }

    pub fn abs(self) -> Frac {
        Frac {
            num: self.num.abs(),
            den: self.den,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Checked addition; `None` on overflow.
    pub fn checked_add(self, rhs: Frac) -> Option<Frac> {
        let num = self.num as i128 * rhs.den as i128 + rhs.num as i128 * self.den as i128;
        let den = self.den as i128 * rhs.den as i128;
        Frac::make(num, den).ok()
    }

    pub fn checked_sub(self, rhs: Frac) -> Option<Frac> {
        self.checked_add(-rhs)
    }

    pub fn checked_mul(self, rhs: Frac) -> Option<Frac> {
        let num = self.num as i128 * rhs.num as i128;
        let den = self.den as i128 * rhs.den as i128;
        Frac::make(num, den).ok()
    }

    /// Division that reports both zero divisors and overflow as errors.
    pub fn try_div(self, rhs: Frac) -> Result<Frac, RationalError> {
        if rhs.is_zero() {
            return Err(RationalError::DivisionByZero);
        }
        let num = self.num as i128 * rhs.den as i128;
        let den = self.den as i128 * rhs.num as i128;
        Frac::make(num, den)
    }
}

impl Default for Frac {
    fn default() -> Self {
        Frac::ZERO
    }
}

impl Add for Frac {
    type Output = Frac;
    fn add(self, rhs: Frac) -> Frac {
        self.checked_add(rhs).expect("fraction addition overflowed")
    }
}

impl Sub for Frac {
    type Output = Frac;
    fn sub(self, rhs: Frac) -> Frac {
        self.checked_sub(rhs)
            .expect("fraction subtraction overflowed")
    }
}

impl Mul for Frac {
    type Output = Frac;
    fn mul(self, rhs: Frac) -> Frac {
        self.checked_mul(rhs)
            .expect("fraction multiplication overflowed")
    }
}

impl Div for Frac {
    type Output = Frac;
    fn div(self, rhs: Frac) -> Frac {
        self.try_div(rhs).expect("fraction division failed")
    }
}

impl Neg for Frac {
    type Output = Frac;
    fn neg(self) -> Frac {
        Frac {
            num: -self.num,
            den: self.den,
        }
    }
}

impl Sum for Frac {
    fn sum<I: Iterator<Item = Frac>>(iter: I) -> Frac {
        iter.fold(Frac::ZERO, |acc, f| acc + f)
    }
}

impl PartialOrd for Frac {
    fn partial_cmp(&self, other: &Frac) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frac {
    fn cmp(&self, other: &Frac) -> Ordering {
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Frac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Frac {
    type Err = RationalError;

    fn from_str(s: &str) -> Result<Frac, RationalError> {
        let s = s.trim();
        let parse_int = |t: &str| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| RationalError::Parse(s.to_string()))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let num = parse_int(n)?;
                let den = parse_int(d)?;
                if den == 0 {
                    Err(RationalError::ZeroDenominator)
                } else {
                    Frac::new(num, den)
                }
            }
            None => Ok(Frac::from_int(parse_int(s)?)),
        }
    }
}

impl TryFrom<String> for Frac {
    type Error = RationalError;
    fn try_from(s: String) -> Result<Frac, RationalError> {
        s.parse()
    }
}

impl From<Frac> for String {
    fn from(f: Frac) -> String {
        f.to_string()
    }
}

/// Least common multiple of the denominators of a non-empty slice.
pub fn lcm_of_dens(fracs: &[Frac]) -> Result<u64, RationalError> {
    if fracs.is_empty() {
        return Err(RationalError::EmptyInput);
    }
    let mut acc: i128 = 1;
    for f in fracs {
        acc = lcm_i128(acc, f.den as i128);
        if acc > i64::MAX as i128 {
            return Err(RationalError::Overflow);
        }
    }
    Ok(acc as u64)
}

/// Least common multiple of two positive integers, loud on overflow.
pub fn lcm_u64(a: u64, b: u64) -> Result<u64, RationalError> {
    let v = lcm_i128(a as i128, b as i128);
    if v > i64::MAX as i128 {
        Err(RationalError::Overflow)
    } else {
        Ok(v as u64)
    }
}

/// Greatest common divisor of two unsigned integers.
pub fn gcd_u64(a: u64, b: u64) -> u64 {
    gcd_i128(a as i128, b as i128) as u64
}
