//! Double-double arithmetic: an unevaluated sum `hi + lo` of two binary64
//! values carrying ~106 significand bits. Used as the high-precision oracle.
//!
//! Values are kept renormalized (`hi == fl(hi + lo)`). Operators follow IEEE
//! conventions for overflow and division by zero; the elementary functions in
//! [`elementary`] report domain errors explicitly.

mod elementary;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("{0}: argument outside the function's domain")]
    OutOfDomain(&'static str),
    #[error("division by zero")]
    DivisionByZero,
}

/// Knuth's branch-free error-free sum: `a + b == s + e` exactly.
#[inline]
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// Requires |a| ≥ |b| (or a == 0).
#[inline]
pub fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

/// Error-free product via fused multiply-add: `a · b == p + e` exactly.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1

fn split(a: f64) -> (f64, f64) {
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Dekker's FMA-free product. Exact when `a·b` neither overflows nor underflows.
pub fn two_prod_dekker(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

#[derive(Clone, Copy, Default, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

impl fmt::Debug for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for DoubleDouble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {:+e}", self.hi, self.lo)
    }
}

impl From<f64> for DoubleDouble {
    fn from(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }
}

impl DoubleDouble {
    pub const ZERO: DoubleDouble = DoubleDouble { hi: 0.0, lo: 0.0 };
    pub const ONE: DoubleDouble = DoubleDouble { hi: 1.0, lo: 0.0 };
    pub const NAN: DoubleDouble = DoubleDouble { hi: f64::NAN, lo: f64::NAN };

    pub const LN2: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::LN_2,
        lo: 2.3190468138462996e-17,
    };
    pub const PI: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };
    pub const FRAC_PI_2: DoubleDouble = DoubleDouble {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123233995736766e-17,
    };

    /// Builds a renormalized value from an arbitrary pair.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        if s.is_finite() {
            DoubleDouble { hi: s, lo: e }
        } else {
            DoubleDouble { hi: s, lo: 0.0 }
        }
    }

    pub fn renormalize(self) -> Self {
        Self::new(self.hi, self.lo)
    }

    fn from_parts_fast(hi: f64, lo: f64) -> Self {
        let (s, e) = quick_two_sum(hi, lo);
        if s.is_finite() {
            DoubleDouble { hi: s, lo: e }
        } else {
            DoubleDouble { hi: s, lo: 0.0 }
        }
    }

    /// Nearest binary64 to the represented value.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    pub fn is_nan(self) -> bool {
        self.hi.is_nan()
    }

    pub fn is_zero(self) -> bool {
        self.hi == 0.0
    }

    pub fn is_sign_negative(self) -> bool {
        self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0)
    }

    pub fn abs(self) -> Self {
        if self.is_sign_negative() {
            -self
        } else {
            self
        }
    }

    /// Multiplication by 2^k, exact barring underflow.
    pub fn ldexp(self, k: i32) -> Self {
        let scale = |v: f64| -> f64 {
            // powi would round for |k| beyond the normal exponent range; split it
            let mut v = v;
            let mut k = k;
            while k > 1000 {
                v *= 2f64.powi(1000);
                k -= 1000;
            }
            while k < -1000 {
                v *= 2f64.powi(-1000);
                k += 1000;
            }
            v * 2f64.powi(k)
        };
        DoubleDouble { hi: scale(self.hi), lo: scale(self.lo) }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = self.lo.mul_add(b, e);
        Self::from_parts_fast(p, e)
    }

    pub fn square(self) -> Self {
        self * self
    }

    /// Division reporting a zero divisor instead of producing ±∞.
    pub fn checked_div(self, rhs: Self) -> Result<Self, DomainError> {
        if rhs.is_zero() {
            Err(DomainError::DivisionByZero)
        } else {
            Ok(self / rhs)
        }
    }

    pub fn sqrt(self) -> Result<Self, DomainError> {
        if self.is_nan() || self.is_sign_negative() && !self.is_zero() {
            return Err(DomainError::OutOfDomain("sqrt"));
        }
        if self.is_zero() {
            return Ok(DoubleDouble::ZERO);
        }
        if self.hi.is_infinite() {
            return Ok(self);
        }
        // one Newton step on the binary64 seed, residual taken exactly
        let s = self.hi.sqrt();
        let (p, e) = two_prod(s, s);
        let residual = (self - DoubleDouble { hi: p, lo: e }).hi;
        Ok(Self::from_parts_fast(s, residual / (2.0 * s)))
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return DoubleDouble::ONE;
        }
        let mut base = self;
        let mut acc = DoubleDouble::ONE;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        if n < 0 {
            DoubleDouble::ONE / acc
        } else {
            acc
        }
    }
}

impl Neg for DoubleDouble {
    type Output = DoubleDouble;
    fn neg(self) -> DoubleDouble {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Add for DoubleDouble {
    type Output = DoubleDouble;
    fn add(self, b: DoubleDouble) -> DoubleDouble {
        let (s, e) = two_sum(self.hi, b.hi);
        if !s.is_finite() {
            return DoubleDouble { hi: s, lo: 0.0 };
        }
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Self::from_parts_fast(s, e + f)
    }
}

impl Sub for DoubleDouble {
    type Output = DoubleDouble;
    fn sub(self, b: DoubleDouble) -> DoubleDouble {
        self + (-b)
    }
}

impl Mul for DoubleDouble {
    type Output = DoubleDouble;
    fn mul(self, b: DoubleDouble) -> DoubleDouble {
        let (p, e) = two_prod(self.hi, b.hi);
        if !p.is_finite() {
            return DoubleDouble { hi: p, lo: 0.0 };
        }
        let t = self.lo * b.lo;
        let t = self.hi.mul_add(b.lo, t);
        let t = self.lo.mul_add(b.hi, t);
        Self::from_parts_fast(p, e + t)
    }
}

impl Div for DoubleDouble {
    type Output = DoubleDouble;
    fn div(self, b: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi / b.hi;
        if !q1.is_finite() || q1 == 0.0 && self.is_zero() {
            return DoubleDouble { hi: q1, lo: 0.0 };
        }
        // long division: three quotient digits from the binary64 seed
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (q1, q2) = quick_two_sum(q1, q2);
        DoubleDouble { hi: q1, lo: q2 } + DoubleDouble::from(q3)
    }
}

impl PartialOrd for DoubleDouble {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}
