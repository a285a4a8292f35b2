//! Elementary functions in 512-bit fixed point: a value v is stored as the
//! integer round(v·2⁵¹²). Results come back as exact rationals of that
//! integer, accurate to far below 2⁻⁹⁰ relative on the test grids.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::sync::OnceLock;

use super::rat;

pub const P: usize = 512;

fn one() -> BigInt {
    BigInt::one() << P
}

/// round(q·2ᴾ)
pub fn fix(q: &BigRational) -> BigInt {
    let scaled = q * BigRational::from_integer(one());
    scaled.round().to_integer()
}

pub fn unfix(v: &BigInt) -> BigRational {
    BigRational::new(v.clone(), one())
}

/// Product truncated toward zero, so alternating series terms reach zero.
fn mul(a: &BigInt, b: &BigInt) -> BigInt {
    let p = a * b;
    if p.is_negative() {
        -((-p) >> P)
    } else {
        p >> P
    }
}

fn div(a: &BigInt, b: &BigInt) -> BigInt {
    (a << P).div_floor(b)
}

fn sqrt_fixed(a: &BigInt) -> BigInt {
    (a << P).sqrt()
}

/// Σ (−1)ᵏ / ((2k+1)·n^(2k+1))
fn atan_inverse(n: u64) -> BigInt {
    let n = BigInt::from(n);
    let n2 = &n * &n;
    let mut power = one() / &n;
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &n2;
        k += 1;
    }
    sum
}

pub fn pi() -> &'static BigInt {
    static PI: OnceLock<BigInt> = OnceLock::new();
    PI.get_or_init(|| atan_inverse(5) * 16 - atan_inverse(239) * 4)
}

/// 2·atanh(t) for fixed-point |t| ≤ 1/3.
fn two_atanh(t: &BigInt) -> BigInt {
    let t2 = mul(t, t);
    let mut power = t.clone();
    let mut sum = BigInt::zero();
    let mut k = 1u64;
    while !power.is_zero() {
        sum += &power / BigInt::from(k);
        power = mul(&power, &t2);
        k += 2;
    }
    sum * 2
}

pub fn ln2() -> &'static BigInt {
    static LN2: OnceLock<BigInt> = OnceLock::new();
    // ln 2 = 2·atanh(1/3)
    LN2.get_or_init(|| two_atanh(&(one() / 3)))
}

fn ln10() -> &'static BigInt {
    static LN10: OnceLock<BigInt> = OnceLock::new();
    LN10.get_or_init(|| fix(&ln(&BigRational::from_integer(10.into()))))
}

/// exp of a fixed-point argument: Taylor on x/2ᵐ, then m squarings.
fn exp_fixed(x: &BigInt) -> BigInt {
    let m = (x.bits() as i64 - P as i64 + 10).max(0) as usize;
    let r = if x.is_negative() { -((-x) >> m) } else { x >> m };
    let mut term = one();
    let mut sum = one();
    let mut k = 1u64;
    while !term.is_zero() {
        term = mul(&term, &r) / BigInt::from(k);
        sum += &term;
        k += 1;
    }
    for _ in 0..m {
        sum = mul(&sum, &sum);
    }
    sum
}

pub fn exp(x: &BigRational) -> BigRational {
    let xf = fix(x);
    if xf.is_negative() {
        // 1/exp(|x|) keeps full relative precision for tiny results
        BigRational::new(one(), exp_fixed(&-xf))
    } else {
        unfix(&exp_fixed(&xf))
    }
}

pub fn ln(x: &BigRational) -> BigRational {
    assert!(x.is_positive());
    let bits = x.numer().bits() as i64 - x.denom().bits() as i64;
    // m = x / 2ᵏ lies in [1/2, 2]
    let k = bits;
    let m = if k >= 0 {
        x / BigRational::from_integer(BigInt::one() << k as usize)
    } else {
        x * BigRational::from_integer(BigInt::one() << (-k) as usize)
    };
    let one_r = BigRational::one();
    let t = (&m - &one_r) / (&m + &one_r);
    unfix(&(two_atanh(&fix(&t)) + ln2() * BigInt::from(k)))
}

pub fn log10(x: &BigRational) -> BigRational {
    ln(x) / unfix(ln10())
}

/// sin and cos via reduction modulo 2π and direct Taylor series.
pub fn sin_cos(x: &BigRational) -> (BigRational, BigRational) {
    let two_pi = pi() * 2;
    let xf = fix(x);
    let half: BigInt = &two_pi >> 1;
    let q: BigInt = (&xf + half).div_floor(&two_pi);
    let r = xf - q * &two_pi;
    let r2 = mul(&r, &r);
    let mut s_term = r.clone();
    let mut c_term = one();
    let mut s = BigInt::zero();
    let mut c = BigInt::zero();
    let mut k = 0u64;
    while !s_term.is_zero() || !c_term.is_zero() {
        s += &s_term;
        c += &c_term;
        s_term = -mul(&s_term, &r2) / BigInt::from((2 * k + 2) * (2 * k + 3));
        c_term = -mul(&c_term, &r2) / BigInt::from((2 * k + 1) * (2 * k + 2));
        k += 1;
    }
    (unfix(&s), unfix(&c))
}

/// atan of fixed-point |t| ≤ 1 by two half-angle reductions and the series.
fn atan_fixed(t: &BigInt) -> BigInt {
    let mut t = t.clone();
    for _ in 0..3 {
        // atan t = 2·atan(t / (1 + √(1 + t²)))
        let denom = one() + sqrt_fixed(&(one() + mul(&t, &t)));
        t = div(&t, &denom);
    }
    let t2 = mul(&t, &t);
    let mut power = t;
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power = mul(&power, &t2);
        k += 1;
    }
    sum * 8
}

pub fn asin(x: &BigRational) -> BigRational {
    let xf = fix(x);
    assert!(xf.abs() <= one());
    let c = sqrt_fixed(&(one() - mul(&xf, &xf)));
    let v = if xf.abs() * 10 < one() * 7 {
        atan_fixed(&div(&xf, &c))
    } else {
        let a: BigInt = (pi() >> 1) - atan_fixed(&div(&c, &xf.abs()));
        if xf.is_negative() {
            -a
        } else {
            a
        }
    };
    unfix(&v)
}

pub fn acos(x: &BigRational) -> BigRational {
    unfix(&(pi() >> 1)) - asin(x)
}

pub fn sinh(x: &BigRational) -> BigRational {
    let xf = fix(x);
    if xf.abs() < one() {
        // series avoids the cancellation in (eˣ − e⁻ˣ)/2
        let x2 = mul(&xf, &xf);
        let mut term = xf.clone();
        let mut sum = BigInt::zero();
        let mut k = 1u64;
        while !term.is_zero() {
            sum += &term;
            term = mul(&term, &x2) / BigInt::from((k + 1) * (k + 2));
            k += 2;
        }
        return unfix(&sum);
    }
    let e = exp(x);
    (&e - e.recip()) / BigRational::from_integer(2.into())
}

pub fn cosh(x: &BigRational) -> BigRational {
    let e = exp(x);
    (&e + e.recip()) / BigRational::from_integer(2.into())
}

pub fn pow(x: f64, y: f64) -> BigRational {
    exp(&(rat(y) * ln(&rat(x))))
}
