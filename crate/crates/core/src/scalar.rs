//! Arithmetic backends.
//!
//! Every numeric path in the crate is generic over [`Scalar`]. Two backends
//! exist: `f64` for Monte Carlo campaigns and [`Rational`] (arbitrary precision)
//! for verification, where comparisons are exact and tolerances are zero.

use std::fmt::{Debug, Display};
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

/// Absolute tolerance used by the floating-point backend.
pub const F64_TOL: f64 = 1e-9;

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Zero
    + One
{
    /// True when comparisons are exact.
    const EXACT: bool;

    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    /// Exact for the rational backend (every finite double is a dyadic rational).
    fn from_double(x: f64) -> Self;
    fn as_f64(&self) -> f64;
    fn to_rational(&self) -> Rational;

    fn is_zero_tol(&self) -> bool;
    fn is_pos_tol(&self) -> bool;
    fn is_neg_tol(&self) -> bool;

    fn from_usize(n: usize) -> Self {
        Self::from_ratio(n as i64, 1)
    }

    /// `a >= b` up to the backend tolerance.
    fn ge_tol(&self, other: &Self) -> bool {
        !(other.clone() - self.clone()).is_pos_tol()
    }

    /// `a == b` up to the backend tolerance.
    fn eq_tol(&self, other: &Self) -> bool {
        (self.clone() - other.clone()).is_zero_tol()
    }

    fn clamp_nonneg(self) -> Self {
        if self.is_neg_tol() || self.is_zero_tol() {
            Self::zero()
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

    /// Renders the value for exact dumps: `p/q` for rationals, shortest round-trip for doubles.
    fn to_exact_string(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }
    fn from_double(x: f64) -> Self {
        x
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn to_rational(&self) -> Rational {
        <Rational as FromPrimitive>::from_f64(*self).unwrap_or_else(Rational::zero)
    }
    fn is_zero_tol(&self) -> bool {
        self.abs() <= F64_TOL
    }
    fn is_pos_tol(&self) -> bool {
        *self > F64_TOL
    }
    fn is_neg_tol(&self) -> bool {
        *self < -F64_TOL
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(BigInt::from(num), BigInt::from(den))
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn from_double(x: f64) -> Self {
        <Rational as FromPrimitive>::from_f64(x).unwrap_or_else(Rational::zero)
    }
    fn as_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_rational(&self) -> Rational {
        self.clone()
    }
    fn is_zero_tol(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_pos_tol(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_neg_tol(&self) -> bool {
        Signed::is_negative(self)
    }
}

/// Parses `"p/q"`, `"p"` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Some(Rational::from_integer(p));
    }
    // decimal literal: take it digit-exact rather than through a double
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, s),
    };
    let (int, frac) = body.split_once('.')?;
    if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let den = num_traits::pow(BigInt::from(10u32), frac.len());
    let r = Rational::new(num, den);
    Some(if neg { -r } else { r })
}
