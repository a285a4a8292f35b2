//! Elementary functions in double-double precision.
//!
//! Target accuracy is 2⁻⁹⁰ relative on moderate arguments. Argument reduction
//! uses triple-length constants so the reduced argument keeps full precision.

use std::sync::OnceLock;

use super::{two_prod, DomainError, DoubleDouble};

const LN2_TAIL: f64 = 5.707708438416212e-34;
const FRAC_PI_2_TAIL: f64 = -1.4973849048591698e-33;

const EXP_SQUARINGS: i32 = 4;
const EXP_TAYLOR_DEGREE: usize = 18;
const TRIG_TAYLOR_DEGREE: usize = 31;

fn inverse_factorials() -> &'static [DoubleDouble] {
    static TABLE: OnceLock<Vec<DoubleDouble>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::with_capacity(TRIG_TAYLOR_DEGREE + 2);
        let mut fact = DoubleDouble::ONE;
        out.push(DoubleDouble::ONE);
        for i in 1..=TRIG_TAYLOR_DEGREE + 1 {
            fact = fact.mul_f64(i as f64);
            out.push(DoubleDouble::ONE / fact);
        }
        out
    })
}

fn ln10() -> DoubleDouble {
    static LN10: OnceLock<DoubleDouble> = OnceLock::new();
    *LN10.get_or_init(|| DoubleDouble::from(10.0).ln().expect("ln 10"))
}

/// `x − k·c` where `c` is given to triple length (`c.hi + c.lo + tail`).
fn reduce(x: DoubleDouble, k: f64, c: DoubleDouble, tail: f64) -> DoubleDouble {
    let (p1, e1) = two_prod(k, c.hi);
    let (p2, e2) = two_prod(k, c.lo);
    let r = x - DoubleDouble::new(p1, e1);
    let r = r - DoubleDouble::new(p2, e2);
    r - DoubleDouble::from(k * tail)
}

/// Σ coeffs[i]·x^i by Horner's rule.
fn horner(x: DoubleDouble, coeffs: impl DoubleEndedIterator<Item = DoubleDouble>) -> DoubleDouble {
    coeffs.rev().fold(DoubleDouble::ZERO, |acc, c| acc * x + c)
}

impl DoubleDouble {
    pub fn exp(self) -> DoubleDouble {
        if self.is_nan() {
            return DoubleDouble::NAN;
        }
        if self.hi > 709.79 {
            return DoubleDouble::from(f64::INFINITY);
        }
        if self.hi < -745.2 {
            return DoubleDouble::ZERO;
        }
        if self.is_zero() {
            return DoubleDouble::ONE;
        }
        let k = (self.hi / DoubleDouble::LN2.hi).round();
        let r = reduce(self, k, DoubleDouble::LN2, LN2_TAIL);
        // extra halving keeps the degree-18 Taylor remainder far below 2^-106
        let r = r.ldexp(-EXP_SQUARINGS);
        let fact = inverse_factorials();
        let mut y = horner(r, fact[..=EXP_TAYLOR_DEGREE].iter().copied());
        for _ in 0..EXP_SQUARINGS {
            y = y.square();
        }
        y.ldexp(k as i32)
    }

    /// Natural logarithm. Zero and negative arguments are domain errors.
    pub fn ln(self) -> Result<DoubleDouble, DomainError> {
        if self.is_nan() || self.hi <= 0.0 {
            return Err(DomainError::OutOfDomain("log"));
        }
        if self.hi.is_infinite() {
            return Ok(self);
        }
        // x = m·2^k with m in [√½, √2)
        let mut k = self.hi.log2().floor() as i32;
        let mut m = self.ldexp(-k);
        if m.hi >= std::f64::consts::SQRT_2 {
            m = m.ldexp(-1);
            k += 1;
        } else if m.hi < std::f64::consts::FRAC_1_SQRT_2 {
            m = m.ldexp(1);
            k -= 1;
        }
        let ln_m = if (m.hi - 1.0).abs() < 0.125 {
            ln_near_one(m)
        } else {
            // Newton on exp: y ← y + m·exp(−y) − 1, quadratic from a 53-bit seed
            let mut y = DoubleDouble::from(m.hi.ln());
            for _ in 0..2 {
                y = y + m * (-y).exp() - DoubleDouble::ONE;
            }
            y
        };
        if k == 0 {
            return Ok(ln_m);
        }
        let kf = k as f64;
        let (p1, e1) = two_prod(kf, DoubleDouble::LN2.hi);
        let (p2, e2) = two_prod(kf, DoubleDouble::LN2.lo);
        let k_ln2 = DoubleDouble::new(p1, e1) + DoubleDouble::new(p2, e2 + kf * LN2_TAIL);
        Ok(k_ln2 + ln_m)
    }

    pub fn log10(self) -> Result<DoubleDouble, DomainError> {
        Ok(self.ln()? / ln10())
    }

    /// Returns (sin, cos) from a single reduction modulo π/2.
    pub fn sin_cos(self) -> (DoubleDouble, DoubleDouble) {
        if !self.is_finite() {
            return (DoubleDouble::NAN, DoubleDouble::NAN);
        }
        let k = (self.hi / DoubleDouble::FRAC_PI_2.hi).round();
        let r = reduce(self, k, DoubleDouble::FRAC_PI_2, FRAC_PI_2_TAIL);
        let (s, c) = sin_cos_taylor(r);
        match (k as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> DoubleDouble {
        self.sin_cos().0
    }

    pub fn cos(self) -> DoubleDouble {
        self.sin_cos().1
    }

    pub fn tan(self) -> DoubleDouble {
        let (s, c) = self.sin_cos();
        s / c
    }

    pub fn asin(self) -> Result<DoubleDouble, DomainError> {
        if self.is_nan() || self.abs() > DoubleDouble::ONE {
            return Err(DomainError::OutOfDomain("asin"));
        }
        if self.abs() == DoubleDouble::ONE {
            return Ok(if self.hi > 0.0 {
                DoubleDouble::FRAC_PI_2
            } else {
                -DoubleDouble::FRAC_PI_2
            });
        }
        if self.is_zero() {
            return Ok(self);
        }
        let mut y = DoubleDouble::from(self.hi.asin());
        for _ in 0..2 {
            let (s, c) = y.sin_cos();
            y = y - (s - self) / c;
        }
        Ok(y)
    }

    pub fn acos(self) -> Result<DoubleDouble, DomainError> {
        if self.is_nan() || self.abs() > DoubleDouble::ONE {
            return Err(DomainError::OutOfDomain("acos"));
        }
        if self == DoubleDouble::ONE {
            return Ok(DoubleDouble::ZERO);
        }
        if self == -DoubleDouble::ONE {
            return Ok(DoubleDouble::PI);
        }
        let mut y = DoubleDouble::from(self.hi.acos());
        for _ in 0..2 {
            let (s, c) = y.sin_cos();
            y = y + (c - self) / s;
        }
        Ok(y)
    }

    pub fn sinh(self) -> DoubleDouble {
        if self.abs().hi < 0.5 {
            // odd Taylor series avoids the cancellation in (e^x − e^−x)/2
            let fact = inverse_factorials();
            let x2 = self.square();
            let odd = (0..=12).map(|j| fact[2 * j + 1]);
            return self * horner(x2, odd);
        }
        // odd symmetry: e^−|x| has a subnormal low word near −700
        let a = self.abs();
        let v = if a.hi > 700.0 {
            let half = a.ldexp(-1).exp();
            half * half.ldexp(-1)
        } else {
            let e = a.exp();
            (e - DoubleDouble::ONE / e).ldexp(-1)
        };
        if self.hi < 0.0 {
            -v
        } else {
            v
        }
    }

    pub fn cosh(self) -> DoubleDouble {
        let a = self.abs();
        if a.hi > 700.0 {
            let half = a.ldexp(-1).exp();
            return half * half.ldexp(-1);
        }
        let e = a.exp();
        (e + DoubleDouble::ONE / e).ldexp(-1)
    }

    /// `x^y`; negative bases require an integral exponent.
    pub fn pow(self, y: DoubleDouble) -> Result<DoubleDouble, DomainError> {
        if self.is_nan() || y.is_nan() {
            return Err(DomainError::OutOfDomain("pow"));
        }
        if y.is_zero() {
            return Ok(DoubleDouble::ONE);
        }
        let integral = y.lo == 0.0 && y.hi.fract() == 0.0;
        if integral && y.hi.abs() <= 64.0 {
            if self.is_zero() && y.hi < 0.0 {
                return Err(DomainError::OutOfDomain("pow"));
            }
            return Ok(self.powi(y.hi as i32));
        }
        if self.is_zero() {
            return if y.hi > 0.0 {
                Ok(DoubleDouble::ZERO)
            } else {
                Err(DomainError::OutOfDomain("pow"))
            };
        }
        if self.hi < 0.0 {
            if !integral {
                return Err(DomainError::OutOfDomain("pow"));
            }
            let magnitude = (y * (-self).ln()?).exp();
            // |y| > 64 here, so the parity lives in hi (y.lo == 0)
            let odd = (y.hi / 2.0).fract() != 0.0;
            return Ok(if odd { -magnitude } else { magnitude });
        }
        Ok((y * self.ln()?).exp())
    }
}

/// atanh series: ln m = 2·Σ s^(2j+1)/(2j+1), s = (m−1)/(m+1), |s| < 0.06.
fn ln_near_one(m: DoubleDouble) -> DoubleDouble {
    let s = (m - DoubleDouble::ONE) / (m + DoubleDouble::ONE);
    let s2 = s.square();
    let coeffs = (0..16).map(|j| DoubleDouble::ONE / DoubleDouble::from((2 * j + 1) as f64));
    (s * horner(s2, coeffs)).ldexp(1)
}

/// Taylor series for |r| ≤ π/4 (plus rounding slack).
fn sin_cos_taylor(r: DoubleDouble) -> (DoubleDouble, DoubleDouble) {
    let fact = inverse_factorials();
    let r2 = r.square();
    let terms = TRIG_TAYLOR_DEGREE / 2 + 1;
    let alternate = |j: usize, c: DoubleDouble| if j.is_multiple_of(2) { c } else { -c };
    let sin_poly = horner(r2, (0..terms).map(|j| alternate(j, fact[2 * j + 1])));
    let cos_poly = horner(r2, (0..terms).map(|j| alternate(j, fact[2 * j])));
    (r * sin_poly, cos_poly)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: DoubleDouble, b: DoubleDouble) -> f64 {
        ((a - b) / b).to_f64().abs()
    }

    #[test]
    fn exp_of_zero_is_exactly_one() {
        assert_eq!(DoubleDouble::ZERO.exp(), DoubleDouble::ONE);
    }

    #[test]
    fn log_inverts_exp() {
        let e = DoubleDouble::ONE.exp();
        assert_eq!(e.hi, std::f64::consts::E);
        let back = e.ln().unwrap();
        assert!((back - DoubleDouble::ONE).to_f64().abs() <= 2f64.powi(-90));
    }

    #[test]
    fn sine_of_pi() {
        let s = DoubleDouble::PI.sin();
        assert!(s.to_f64().abs() <= 2f64.powi(-90));
        // π_dd overshoots π by 2.9947698097183397e-33, so sin(π_dd) = π − π_dd to first order
        assert!((s.hi + 2.9947698097183397e-33).abs() < 1e-40, "{s:?}");
    }

    #[test]
    fn ln10_constant() {
        let l = ln10();
        assert_eq!(l.hi, std::f64::consts::LN_10);
        assert!((l.lo - -2.1707562233822494e-16).abs() < 1e-31);
    }

    #[test]
    fn domains() {
        assert!(DoubleDouble::ZERO.ln().is_err());
        assert!(DoubleDouble::from(-1.0).ln().is_err());
        assert!(DoubleDouble::from(1.5).asin().is_err());
        assert!(DoubleDouble::from(-1.5).acos().is_err());
        assert!(DoubleDouble::from(-2.0).pow(DoubleDouble::from(0.5)).is_err());
        assert!(DoubleDouble::ZERO.pow(DoubleDouble::from(-1.0)).is_err());
        assert_eq!(DoubleDouble::from(-2.0).pow(DoubleDouble::from(3.0)).unwrap().to_f64(), -8.0);
        assert_eq!(DoubleDouble::from(-2.0).pow(DoubleDouble::from(100.0)).unwrap().to_f64(), 2f64.powi(100));
    }

    #[test]
    fn identities() {
        let x = DoubleDouble::new(0.7, 1e-18);
        let (s, c) = x.sin_cos();
        assert!((s * s + c * c - DoubleDouble::ONE).to_f64().abs() < 1e-31);
        assert!(rel(x.asin().unwrap().sin(), x) < 1e-30);
        assert!(rel(x.acos().unwrap().cos(), x) < 1e-30);
        let ch = x.cosh();
        let sh = x.sinh();
        assert!((ch * ch - sh * sh - DoubleDouble::ONE).to_f64().abs() < 1e-30);
        assert!(rel(DoubleDouble::from(100.0).log10().unwrap(), DoubleDouble::from(2.0)) < 1e-31);
    }

    #[test]
    fn extremes() {
        assert!(DoubleDouble::from(710.0).exp().hi.is_infinite());
        assert_eq!(DoubleDouble::from(-800.0).exp(), DoubleDouble::ZERO);
        assert!(DoubleDouble::from(710.0).cosh().is_finite());
        let tiny = DoubleDouble::from(1e-300);
        assert!(rel(tiny.ln().unwrap(), DoubleDouble::from(1e-300f64.ln())) < 1e-15);
    }
}
