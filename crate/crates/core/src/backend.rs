//! Numeric backends shared by the expression evaluator and the LU solver.

use std::cmp::Ordering;

use crate::dd::DoubleDouble;
use crate::perturb::AtomicOp;

/// Semantics of the atomic operations for one evaluation.
///
/// `input` and `constant` are called once per program input binding and per
/// literal evaluation; `apply` once per executed atomic operation. `magnitude`
/// and `partial_cmp` are uninstrumented helpers for pivoting and branching.
pub trait Arithmetic {
    type Value: Copy;

    fn input(&mut self, x: f64) -> Self::Value;
    fn constant(&mut self, x: f64) -> Self::Value;
    fn apply(&mut self, op: AtomicOp, args: &[Self::Value]) -> Self::Value;
    fn partial_cmp(&self, a: Self::Value, b: Self::Value) -> Option<Ordering>;
    fn magnitude(&self, v: Self::Value) -> Self::Value;
    fn to_f64(&self, v: Self::Value) -> f64;
}

/// Hardware binary64, no instrumentation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Plain;

impl Arithmetic for Plain {
    type Value = f64;

    fn input(&mut self, x: f64) -> f64 {
        x
    }

    fn constant(&mut self, x: f64) -> f64 {
        x
    }

    fn apply(&mut self, op: AtomicOp, args: &[f64]) -> f64 {
        op.eval_f64(args)
    }

    fn partial_cmp(&self, a: f64, b: f64) -> Option<Ordering> {
        a.partial_cmp(&b)
    }

    fn magnitude(&self, v: f64) -> f64 {
        v.abs()
    }

    fn to_f64(&self, v: f64) -> f64 {
        v
    }
}

/// Double-double evaluation of every operation.
///
/// Arguments outside a function's domain produce what binary64 would produce
/// for the rounded argument (NaN or ±∞), so oracle and plain runs classify
/// failures the same way.
#[derive(Debug, Clone, Copy, Default)]
pub struct Oracle;

impl Oracle {
    pub fn eval(op: AtomicOp, args: &[DoubleDouble]) -> DoubleDouble {
        let x = args[0];
        let fallback = || DoubleDouble::from(op.eval_f64(&args.iter().map(|a| a.to_f64()).collect::<Vec<_>>()));
        let checked = |r: Result<DoubleDouble, _>| r.unwrap_or_else(|_| fallback());
        match op {
            AtomicOp::Add => x + args[1],
            AtomicOp::Sub => x - args[1],
            AtomicOp::Mul => x * args[1],
            AtomicOp::Div => checked(x.checked_div(args[1])),
            AtomicOp::Pow => checked(x.pow(args[1])),
            AtomicOp::Neg => -x,
            AtomicOp::Fabs => x.abs(),
            AtomicOp::Sqrt => checked(x.sqrt()),
            AtomicOp::Sin => x.sin(),
            AtomicOp::Cos => x.cos(),
            AtomicOp::Tan => x.tan(),
            AtomicOp::Asin => checked(x.asin()),
            AtomicOp::Acos => checked(x.acos()),
            AtomicOp::Sinh => x.sinh(),
            AtomicOp::Cosh => x.cosh(),
            AtomicOp::Exp => x.exp(),
            AtomicOp::Log => checked(x.ln()),
            AtomicOp::Log10 => checked(x.log10()),
        }
    }
}

impl Arithmetic for Oracle {
    type Value = DoubleDouble;

    fn input(&mut self, x: f64) -> DoubleDouble {
        DoubleDouble::from(x)
    }

    fn constant(&mut self, x: f64) -> DoubleDouble {
        DoubleDouble::from(x)
    }

    fn apply(&mut self, op: AtomicOp, args: &[DoubleDouble]) -> DoubleDouble {
        Oracle::eval(op, args)
    }

    fn partial_cmp(&self, a: DoubleDouble, b: DoubleDouble) -> Option<Ordering> {
        a.partial_cmp(&b)
    }

    fn magnitude(&self, v: DoubleDouble) -> DoubleDouble {
        v.abs()
    }

    fn to_f64(&self, v: DoubleDouble) -> f64 {
        v.to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_domain_fallbacks_match_binary64() {
        let dd = |v: f64| DoubleDouble::from(v);
        assert!(Oracle::eval(AtomicOp::Log, &[dd(-1.0)]).is_nan());
        assert_eq!(Oracle::eval(AtomicOp::Log, &[dd(0.0)]).to_f64(), f64::NEG_INFINITY);
        assert_eq!(Oracle::eval(AtomicOp::Div, &[dd(1.0), dd(0.0)]).to_f64(), f64::INFINITY);
        assert!(Oracle::eval(AtomicOp::Div, &[dd(0.0), dd(0.0)]).is_nan());
        assert!(Oracle::eval(AtomicOp::Asin, &[dd(2.0)]).is_nan());
        assert!(Oracle::eval(AtomicOp::Sqrt, &[dd(-4.0)]).is_nan());
    }

    #[test]
    fn plain_is_hardware_arithmetic() {
        let mut p = Plain;
        assert_eq!(p.apply(AtomicOp::Sub, &[1.2, 1.1]), 0.09999999999999987);
        assert_eq!(p.apply(AtomicOp::Pow, &[2.0, 10.0]), 1024.0);
    }
}
