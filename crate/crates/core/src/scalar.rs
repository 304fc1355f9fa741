//! Scalar abstraction so that the exact kernels run in `f32`, `f64` or exact rationals.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};
use std::fmt::Debug;

/// Field element usable by the exact kernels.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static
{
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// `self^n` for any integer `n` (negative powers invert).
    fn powi(&self, n: i64) -> Self {
        let p = num_traits::pow(self.clone(), n.unsigned_abs() as usize);
        if n < 0 {
            Self::one() / p
        } else {
            p
        }
    }

    fn max_of(a: Self, b: Self) -> Self {
        if a >= b {
            a
        } else {
            b
        }
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn powi(&self, n: i64) -> Self {
        f64::powi(*self, n as i32)
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f32().unwrap_or(f32::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self as f64
    }
    fn powi(&self, n: i64) -> Self {
        f32::powi(*self, n as i32)
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Exact rational from a decimal such as `0.2`; used to lift configured `q` values into exact arithmetic.
pub fn rational_from_f64(x: f64) -> Option<BigRational> {
    if !x.is_finite() {
        return None;
    }
    // Prefer the shortest decimal representation over the binary expansion.
    let text = format!("{x}");
    if let Some((int_part, frac)) = text.split_once('.') {
        let digits = format!("{int_part}{frac}");
        let num: BigInt = digits.parse().ok()?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Some(BigRational::new(num, den));
    }
    if let Ok(n) = text.parse::<i64>() {
        return Some(BigRational::from_integer(BigInt::from(n)));
    }
    BigRational::from_f64(x)
}
