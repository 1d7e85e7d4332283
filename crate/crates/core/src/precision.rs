//! Arbitrary-precision reals, the precision context, and the two root
//! primitives (square-root branches and bracketed roots) everything else is
//! built on.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Rem, Sub};

use num_traits::{Num, One, Zero};
use rug::float::Round;
use rug::Float;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_BITS: u32 = 64;
pub const DEFAULT_BITS: u32 = 256;
pub const DEFAULT_GUARD_BITS: u32 = 32;
pub const DEFAULT_MAX_BITS: u32 = 1024;

/// Working precision, the reserve below which results count as unreliable,
/// and the seed for every randomized routine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionContext {
    pub bits: u32,
    pub guard_bits: u32,
    pub rng_seed: u64,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self {
            bits: DEFAULT_BITS,
            guard_bits: DEFAULT_GUARD_BITS,
            rng_seed: 1,
        }
    }
}

impl PrecisionContext {
    pub fn new(bits: u32, guard_bits: u32, rng_seed: u64) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::InvalidPrecision(format!(
                "{bits} bits is below the {MIN_BITS}-bit minimum"
            )));
        }
        if guard_bits == 0 || guard_bits >= bits {
            return Err(Error::InvalidPrecision(format!(
                "guard bits {guard_bits} must lie in 1..{bits}"
            )));
        }
        Ok(Self {
            bits,
            guard_bits,
            rng_seed,
        })
    }

    pub fn with_bits(bits: u32) -> Result<Self> {
        Self::new(bits, DEFAULT_GUARD_BITS.min(bits / 2), 1)
    }

    /// Bits that are trusted after the guard reserve is set aside.
    pub fn reliable_bits(&self) -> u32 {
        self.bits - self.guard_bits
    }

    /// `2^-(bits - guard_bits)`.
    pub fn tolerance<T: Real>(&self) -> T {
        T::pow2(-(self.reliable_bits() as i32), self.bits)
    }

    /// `2^-(bits - k)`, the additive slack used by inequality suites.
    pub fn slack<T: Real>(&self, k: u32) -> T {
        T::pow2(-(self.bits as i32 - k as i32), self.bits)
    }

    pub fn real<T: Real>(&self, v: f64) -> T {
        T::from_f64_at(v, self.bits)
    }

    pub fn parse<T: Real>(&self, s: &str) -> Result<T> {
        T::parse_decimal(s, self.bits)
    }

    /// The same context at a different working precision.
    pub fn escalated(&self, bits: u32) -> Self {
        Self { bits, ..*self }
    }
}

/// An MPFR float; binary operations round to nearest at the larger operand
/// precision.
#[derive(Clone)]
pub struct BigReal(Float);

impl BigReal {
    pub fn with_bits(v: f64, bits: u32) -> Self {
        BigReal(Float::with_val(bits, v))
    }

    pub fn from_float(f: Float) -> Self {
        BigReal(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn parse(s: &str, bits: u32) -> Result<Self> {
        let parsed = Float::parse(s.trim()).map_err(|_| Error::Parse(s.to_string()))?;
        Ok(BigReal(Float::with_val(bits, parsed)))
    }

    fn prec2(&self, other: &Self) -> u32 {
        self.0.prec().max(other.0.prec())
    }
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BigReal({})", self.to_decimal(20))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or_else(|| self.full_digits());
        f.write_str(&self.to_decimal(digits))
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

macro_rules! big_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                let p = self.prec2(&rhs);
                BigReal(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
        impl<'a> $trait<&'a BigReal> for &'a BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &'a BigReal) -> BigReal {
                let p = self.prec2(rhs);
                BigReal(Float::with_val(p, &self.0 $op &rhs.0))
            }
        }
    };
}

big_binop!(Add, add, +);
big_binop!(Sub, sub, -);
big_binop!(Mul, mul, *);
big_binop!(Div, div, /);

impl Rem for BigReal {
    type Output = BigReal;
    fn rem(self, rhs: BigReal) -> BigReal {
        let p = self.prec2(&rhs);
        BigReal(Float::with_val(p, &self.0 % &rhs.0))
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal(-self.0)
    }
}

impl Zero for BigReal {
    fn zero() -> Self {
        BigReal(Float::with_val(MIN_BITS, 0))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl One for BigReal {
    fn one() -> Self {
        BigReal(Float::with_val(MIN_BITS, 1))
    }
}

impl Num for BigReal {
    type FromStrRadixErr = Error;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self> {
        let parsed =
            Float::parse_radix(s.trim(), radix as i32).map_err(|_| Error::Parse(s.to_string()))?;
        Ok(BigReal(Float::with_val(DEFAULT_BITS, parsed)))
    }
}

impl Real for BigReal {
    fn bits(&self) -> u32 {
        self.0.prec()
    }

    fn at_bits(&self, bits: u32) -> Self {
        let mut f = self.0.clone();
        f.set_prec_round(bits, Round::Nearest);
        BigReal(f)
    }

    fn from_f64_at(v: f64, bits: u32) -> Self {
        BigReal(Float::with_val(bits, v))
    }

    fn parse_decimal(s: &str, bits: u32) -> Result<Self> {
        BigReal::parse(s, bits)
    }

    fn to_decimal(&self, digits: usize) -> String {
        self.0.to_string_radix(10, Some(digits.max(1)))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    fn try_sqrt(&self) -> Result<Self> {
        if self.0.is_sign_negative() && !self.0.is_zero() {
            return Err(Error::NegativeRadicand);
        }
        Ok(BigReal(self.0.clone().sqrt()))
    }

    fn try_ln(&self) -> Result<Self> {
        if self.0 <= 0 {
            return Err(Error::NonPositiveLogarithm);
        }
        Ok(BigReal(self.0.clone().ln()))
    }

    fn try_ln_1p(&self) -> Result<Self> {
        if self.0 <= -1 {
            return Err(Error::NonPositiveLogarithm);
        }
        Ok(BigReal(self.0.clone().ln_1p()))
    }

    fn exp(&self) -> Self {
        BigReal(self.0.clone().exp())
    }

    fn abs(&self) -> Self {
        BigReal(self.0.clone().abs())
    }

    fn pow2(k: i32, bits: u32) -> Self {
        let mut f = Float::with_val(bits, 1);
        f <<= k;
        BigReal(f)
    }

    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

impl Serialize for BigReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal(self.full_digits()))
    }
}

impl<'de> Deserialize<'de> for BigReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let digits = s
            .trim_start_matches('-')
            .split(['e', 'E'])
            .next()
            .map(|m| m.chars().filter(|c| c.is_ascii_digit()).count())
            .unwrap_or(0);
        let bits = ((digits as f64 / std::f64::consts::LOG10_2).ceil() as u32).max(MIN_BITS);
        BigReal::parse(&s, bits).map_err(serde::de::Error::custom)
    }
}

/// Which square-root branch to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn of<T: Real>(x: &T) -> Self {
        if x.sign() < 0 {
            Branch::Minus
        } else {
            Branch::Plus
        }
    }
}

/// `sign * sqrt(y)`, correctly rounded; negative radicands are an error.
pub fn eval_sqrt_branch<T: Real>(y: &T, branch: Branch) -> Result<T> {
    let r = y.try_sqrt()?;
    Ok(match branch {
        Branch::Plus => r,
        Branch::Minus => -r,
    })
}

/// Bisection root of a monotone function on `[lo, hi]`.
///
/// Stops once `|f(x)| <= tol` or the bracket is narrower than `tol`; the
/// midpoint sequence is fully determined by the inputs.
pub fn bracketed_root<T, F>(f: F, lo: &T, hi: &T, tol: &T) -> Result<T>
where
    T: Real,
    F: Fn(&T) -> T,
{
    let mut lo = lo.clone();
    let mut hi = hi.clone();
    let mut f_lo = f(&lo);
    let f_hi = f(&hi);
    if f_lo.abs() <= *tol {
        return Ok(lo);
    }
    if f_hi.abs() <= *tol {
        return Ok(hi);
    }
    if f_lo.sign() * f_hi.sign() > 0 {
        return Err(Error::NoSignChange);
    }
    let half = lo.lit(0.5);
    // Each halving gains one bit, so the loop is bounded by the precision.
    let max_steps = 4 * lo.bits().max(hi.bits()) as usize + 64;
    for _ in 0..max_steps {
        let mid = (lo.clone() + hi.clone()) * half.clone();
        if (hi.clone() - lo.clone()).abs() <= *tol {
            return Ok(mid);
        }
        let f_mid = f(&mid);
        if f_mid.abs() <= *tol {
            return Ok(mid);
        }
        if f_mid.sign() == f_lo.sign() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * half)
}
