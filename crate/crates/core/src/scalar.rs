//! The scalar abstraction shared by every numeric module.
//!
//! Geometry, dynamics and nest construction are written once against [`Real`]
//! and instantiated with `f64` (fast, 53-bit) or [`crate::BigReal`]
//! (MPFR-backed, arbitrary precision). Binary operators follow the num-traits
//! contract; everything the num-traits `Float` family cannot offer for a
//! non-`Copy` arbitrary-precision type (a precision hook, fallible roots and
//! logarithms, exact decimal I/O) lives on this trait.

use std::fmt;
use std::ops::Neg;

use num_traits::Num;

use crate::error::{Error, Result};

/// A real scalar carrying its own working precision.
///
/// Binary operations on values of different precision are evaluated at the
/// larger of the two, so exact constants such as `T::one()` never degrade a
/// high-precision operand.
pub trait Real:
    Num + Neg<Output = Self> + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// Mantissa bits carried by this value.
    fn bits(&self) -> u32;

    /// The same value re-rounded (or exactly extended) to `bits`.
    fn at_bits(&self, bits: u32) -> Self;

    fn from_f64_at(v: f64, bits: u32) -> Self;

    /// Parses a decimal string directly at `bits`, with no `f64` round trip.
    fn parse_decimal(s: &str, bits: u32) -> Result<Self>;

    /// Scientific-notation decimal string with `digits` significant digits.
    fn to_decimal(&self, digits: usize) -> String;

    fn to_f64(&self) -> f64;

    fn try_sqrt(&self) -> Result<Self>;

    fn try_ln(&self) -> Result<Self>;

    /// `ln(1 + self)`, accurate for tiny arguments.
    fn try_ln_1p(&self) -> Result<Self>;

    fn exp(&self) -> Self;

    fn abs(&self) -> Self;

    /// `2^k` at the given precision.
    fn pow2(k: i32, bits: u32) -> Self;

    fn is_finite(&self) -> bool;

    /// A constant at this value's precision.
    fn lit(&self, v: f64) -> Self {
        Self::from_f64_at(v, self.bits())
    }

    /// `2^k` at this value's precision.
    fn ulp_scale(&self, k: i32) -> Self {
        Self::pow2(k, self.bits())
    }

    /// Sign as -1, 0 or 1.
    fn sign(&self) -> i32 {
        let zero = Self::zero();
        if *self > zero {
            1
        } else if *self < zero {
            -1
        } else {
            0
        }
    }

    fn max_of(a: &Self, b: &Self) -> Self {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    fn min_of(a: &Self, b: &Self) -> Self {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// Decimal digits that faithfully represent this value's precision.
    fn full_digits(&self) -> usize {
        (self.bits() as f64 * std::f64::consts::LOG10_2).ceil() as usize + 1
    }
}

impl Real for f64 {
    fn bits(&self) -> u32 {
        f64::MANTISSA_DIGITS
    }

    fn at_bits(&self, _bits: u32) -> Self {
        *self
    }

    fn from_f64_at(v: f64, _bits: u32) -> Self {
        v
    }

    fn parse_decimal(s: &str, _bits: u32) -> Result<Self> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(s.to_string()))
    }

    fn to_decimal(&self, digits: usize) -> String {
        format!("{:.*e}", digits.saturating_sub(1), self)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn try_sqrt(&self) -> Result<Self> {
        if *self < 0.0 {
            Err(Error::NegativeRadicand)
        } else {
            Ok(f64::sqrt(*self))
        }
    }

    fn try_ln(&self) -> Result<Self> {
        if *self > 0.0 {
            Ok(f64::ln(*self))
        } else {
            Err(Error::NonPositiveLogarithm)
        }
    }

    fn try_ln_1p(&self) -> Result<Self> {
        if *self > -1.0 {
            Ok(f64::ln_1p(*self))
        } else {
            Err(Error::NonPositiveLogarithm)
        }
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn pow2(k: i32, _bits: u32) -> Self {
        2f64.powi(k)
    }

    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}
