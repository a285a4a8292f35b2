//! Bit-level binary64 utilities: ULP size, ULP stepping, ULP distance and the
//! absolute / relative / ULP error metrics.
//!
//! All functions are pure. The ULP of zero and of subnormal values is the
//! uniform subnormal spacing 2⁻¹⁰⁷⁴, which keeps [`err_ulp`] finite and
//! monotone near zero.

use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Largest step count accepted by [`offset_by_ulps`].
pub const MAX_OFFSET_STEPS: i64 = 1 << 20;

/// Smallest positive subnormal, also the ULP of zero.
pub const SUBNORMAL_SPACING: f64 = f64::from_bits(1);

const SIGN_MASK: u64 = 1 << 63;
const MAX_FINITE_KEY: i64 = 0x7fef_ffff_ffff_ffff;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum UlpError {
    #[error("non-finite operand {0}")]
    NonFinite(f64),
    #[error("stepping {steps} ULPs from {from} leaves the finite range")]
    Overflow { from: f64, steps: i64 },
    #[error("step count {0} exceeds the ±2^20 bound")]
    StepBound(i64),
    #[error("relative error undefined for a zero reference")]
    ZeroReference,
}

/// Result of a ULP-scale comparison.
///
/// `NonFinite` is the sentinel for comparisons where one side is NaN or
/// infinite; it orders above every numeric divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Ulps(f64),
    NonFinite,
}

impl Divergence {
    pub const ZERO: Divergence = Divergence::Ulps(0.0);

    pub fn is_non_finite(self) -> bool {
        matches!(self, Divergence::NonFinite)
    }

    /// Numeric view, mapping the sentinel to +∞.
    pub fn as_f64(self) -> f64 {
        match self {
            Divergence::Ulps(v) => v,
            Divergence::NonFinite => f64::INFINITY,
        }
    }

    pub fn exceeds(self, threshold: f64) -> bool {
        match self {
            Divergence::Ulps(v) => v > threshold,
            Divergence::NonFinite => true,
        }
    }

    pub fn max(self, other: Divergence) -> Divergence {
        if self.as_f64() >= other.as_f64() {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::Ulps(v) => write!(f, "{v:e}"),
            Divergence::NonFinite => f.write_str("non-finite"),
        }
    }
}

impl Serialize for Divergence {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Divergence::Ulps(v) if v.is_finite() => s.serialize_f64(*v),
            Divergence::Ulps(_) => s.serialize_str("inf"),
            Divergence::NonFinite => s.serialize_str("non-finite"),
        }
    }
}

fn check_finite(x: f64) -> Result<(), UlpError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(UlpError::NonFinite(x))
    }
}

/// Maps a finite value onto a monotone integer line; ±0 both map to 0.
fn ordered_key(x: f64) -> i64 {
    let bits = x.to_bits();
    if bits & SIGN_MASK != 0 {
        -((bits & !SIGN_MASK) as i64)
    } else {
        bits as i64
    }
}

fn from_ordered_key(key: i64) -> f64 {
    if key < 0 {
        f64::from_bits(key.unsigned_abs() | SIGN_MASK)
    } else {
        f64::from_bits(key as u64)
    }
}

/// Exponent-based ULP: ε·2^E with ε = 2⁻⁵², or 2⁻¹⁰⁷⁴ below the normal range.
pub fn ulp_of(x: f64) -> Result<f64, UlpError> {
    check_finite(x)?;
    let biased = ((x.to_bits() >> 52) & 0x7ff) as i64;
    Ok(match biased {
        // zero, subnormals and the lowest binade all share the subnormal spacing
        0 | 1 => SUBNORMAL_SPACING,
        // ULP itself is subnormal
        2..=52 => f64::from_bits(1 << (biased - 1)),
        _ => f64::from_bits(((biased - 52) as u64) << 52),
    })
}

/// ULP of `x` after rounding to binary32, returned as binary64.
pub fn ulp_of_binary32(x: f64) -> Result<f64, UlpError> {
    check_finite(x)?;
    let narrowed = x as f32;
    if !narrowed.is_finite() {
        return Err(UlpError::NonFinite(x));
    }
    let biased = ((narrowed.to_bits() >> 23) & 0xff) as i32;
    let exp = if biased <= 1 { -126 } else { biased - 127 };
    Ok(2f64.powi(exp - 23))
}

/// The value `n` representable steps away from `x`, crossing zero as a single
/// step between −2⁻¹⁰⁷⁴ and +0.
pub fn offset_by_ulps(x: f64, n: i64) -> Result<f64, UlpError> {
    check_finite(x)?;
    if n.abs() > MAX_OFFSET_STEPS {
        return Err(UlpError::StepBound(n));
    }
    if n == 0 {
        return Ok(x);
    }
    let key = ordered_key(x) + n;
    if key.abs() > MAX_FINITE_KEY {
        return Err(UlpError::Overflow { from: x, steps: n });
    }
    Ok(from_ordered_key(key))
}

/// Signed count of representable steps from `a` to `b`.
pub fn ulp_distance(a: f64, b: f64) -> Result<i64, UlpError> {
    check_finite(a)?;
    check_finite(b)?;
    Ok(ordered_key(b) - ordered_key(a))
}

pub fn err_abs(truth: f64, approx: f64) -> Result<f64, UlpError> {
    if truth.is_nan() {
        return Err(UlpError::NonFinite(truth));
    }
    if approx.is_nan() {
        return Err(UlpError::NonFinite(approx));
    }
    Ok((truth - approx).abs())
}

pub fn err_rel(truth: f64, approx: f64) -> Result<f64, UlpError> {
    let abs = err_abs(truth, approx)?;
    if truth == 0.0 {
        return Err(UlpError::ZeroReference);
    }
    Ok(abs / truth.abs())
}

/// |reference − other| / ulp_of(reference).
///
/// The reference must be the trusted value; the denominator is its ULP.
pub fn err_ulp(reference: f64, other: f64) -> Divergence {
    if !reference.is_finite() || !other.is_finite() {
        return Divergence::NonFinite;
    }
    let ulp = ulp_of(reference).expect("finite reference");
    let diff = (reference - other).abs();
    if diff.is_finite() {
        Divergence::Ulps(diff / ulp)
    } else {
        // both operands finite but the difference overflows; halve to stay in range
        Divergence::Ulps((reference / 2.0 - other / 2.0).abs() / (ulp / 2.0))
    }
}

/// Formats a binary64 as a C99-style hexadecimal float (`0x1.8p+1`).
pub fn format_hex(x: f64) -> String {
    if x.is_nan() {
        return if x.is_sign_negative() { "-nan".into() } else { "nan".into() };
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = x.to_bits();
    let sign = if bits & SIGN_MASK != 0 { "-" } else { "" };
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = bits & ((1 << 52) - 1);
    if biased == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut frac = format!("{mantissa:013x}");
    while frac.ends_with('0') {
        frac.pop();
    }
    let dot = if frac.is_empty() { "" } else { "." };
    format!("{sign}0x{lead}{dot}{frac}p{exp:+}")
}

/// Parses either a decimal or a hexadecimal float literal, optionally signed.
///
/// Decimal conversion is correctly rounded.
pub fn parse_float(text: &str) -> Option<f64> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let lower = body.to_ascii_lowercase();
    let value = if lower.starts_with("0x") {
        parse_hex(&lower)?
    } else {
        if !lower.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
            return None;
        }
        lower.parse::<f64>().ok()?
    };
    Some(if neg { -value } else { value })
}

fn parse_hex(lower: &str) -> Option<f64> {
    // hexf-parse requires an explicit exponent
    if lower.contains('p') {
        hexf_parse::parse_hexf64(lower, false).ok()
    } else {
        hexf_parse::parse_hexf64(&format!("{lower}p0"), false).ok()
    }
}
