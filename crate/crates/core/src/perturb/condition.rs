//! Closed-form condition numbers of the atomic operations and their
//! dangerous regions.

use super::AtomicOp;
use crate::dd::DomainError;

/// Condition numbers above this mark an operation as dangerous. A 1-ULP input
/// error becomes a ~10⁶-ULP output error, past half the binary64 digits.
pub const DEFAULT_DANGER_THRESHOLD: f64 = 1e6;

/// |num / den|, with an exact-zero denominator mapping to +∞.
fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::INFINITY
    } else {
        (num / den).abs()
    }
}

/// Per-operand condition numbers of `op` at `operands`.
///
/// Operations without an ill-conditioned region (mul, div, neg, sqrt, fabs)
/// report 1 for every operand. Removable singularities at zero (sin, tan,
/// sinh, asin) report their limit 1.
pub fn condition_numbers(op: AtomicOp, operands: &[f64]) -> Result<Vec<f64>, DomainError> {
    assert_eq!(operands.len(), op.arity(), "{op} takes {} operands", op.arity());
    if operands.iter().any(|v| v.is_nan()) {
        return Err(DomainError::OutOfDomain(op.name()));
    }
    let x = operands[0];
    let c = match op {
        AtomicOp::Add => {
            let y = operands[1];
            let s = x + y;
            return Ok(vec![ratio(x, s), ratio(y, s)]);
        }
        AtomicOp::Sub => {
            let y = operands[1];
            let d = x - y;
            return Ok(vec![ratio(x, d), ratio(y, d)]);
        }
        AtomicOp::Pow => {
            let y = operands[1];
            if x < 0.0 {
                return Err(DomainError::OutOfDomain("pow"));
            }
            let ylog = if y == 0.0 { 0.0 } else { (y * x.ln()).abs() };
            return Ok(vec![y.abs(), ylog]);
        }
        AtomicOp::Mul | AtomicOp::Div => return Ok(vec![1.0, 1.0]),
        AtomicOp::Neg | AtomicOp::Sqrt | AtomicOp::Fabs => 1.0,
        AtomicOp::Sin if x == 0.0 => 1.0,
        AtomicOp::Sin => ratio(x * x.cos(), x.sin()),
        AtomicOp::Cos => (x * x.tan()).abs(),
        AtomicOp::Tan if x == 0.0 => 1.0,
        AtomicOp::Tan => ratio(x, x.sin() * x.cos()),
        AtomicOp::Asin | AtomicOp::Acos if x.abs() > 1.0 => {
            return Err(DomainError::OutOfDomain(op.name()))
        }
        AtomicOp::Asin if x == 0.0 => 1.0,
        AtomicOp::Asin => ratio(x, (1.0 - x * x).sqrt() * x.asin()),
        AtomicOp::Acos => ratio(x, (1.0 - x * x).sqrt() * x.acos()),
        AtomicOp::Sinh if x == 0.0 => 1.0,
        AtomicOp::Sinh => ratio(x * x.cosh(), x.sinh()),
        AtomicOp::Cosh => (x * x.tanh()).abs(),
        AtomicOp::Exp => x.abs(),
        AtomicOp::Log | AtomicOp::Log10 if x < 0.0 => {
            return Err(DomainError::OutOfDomain(op.name()))
        }
        AtomicOp::Log | AtomicOp::Log10 => ratio(1.0, x.ln()),
    };
    Ok(vec![c])
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DangerReport {
    pub dangerous: bool,
    /// Operand positions whose condition number exceeds the threshold.
    pub operands: Vec<usize>,
}

/// Flags `op` as dangerous when any condition number exceeds `threshold`.
/// Operands outside the formula's domain are never flagged.
pub fn in_dangerous_region(op: AtomicOp, operands: &[f64], threshold: f64) -> DangerReport {
    let Ok(cond) = condition_numbers(op, operands) else {
        return DangerReport::default();
    };
    let offending: Vec<usize> = cond
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > threshold)
        .map(|(i, _)| i)
        .collect();
    DangerReport { dangerous: !offending.is_empty(), operands: offending }
}
