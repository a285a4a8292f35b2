//! Exact and high-precision reference arithmetic shared by the integration
//! tests. Everything here is independent of the library's double-double code:
//! rationals for the error-free transforms, 512-bit fixed point for the
//! elementary functions.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use ulpscope::dd::{two_prod, two_prod_dekker, two_sum};
use ulpscope::rng::SplitMix64;
use ulpscope::DoubleDouble;

pub mod elementary;

/// Exact value of a finite binary64.
pub fn rat(x: f64) -> BigRational {
    assert!(x.is_finite());
    let bits = x.to_bits();
    let neg = bits >> 63 == 1;
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, exp) = if biased == 0 { (frac, -1074) } else { (frac | (1 << 52), biased - 1075) };
    let m = BigInt::from(mant);
    let mut q = if exp >= 0 {
        BigRational::from_integer(m << exp as usize)
    } else {
        BigRational::new(m, BigInt::one() << (-exp) as usize)
    };
    if neg {
        q = -q;
    }
    q
}

pub fn rat_dd(x: DoubleDouble) -> BigRational {
    rat(x.hi) + rat(x.lo)
}

/// |approx − exact| / |exact| as binary64 (0 when both vanish).
pub fn rel_err(approx: &BigRational, exact: &BigRational) -> f64 {
    if exact.is_zero() {
        return if approx.is_zero() { 0.0 } else { f64::INFINITY };
    }
    ((approx - exact) / exact).abs().to_f64().unwrap()
}

/// Random finite double with a random sign and a binary exponent in `exp_range`.
pub fn random_double(rng: &mut SplitMix64, exp_range: std::ops::RangeInclusive<i32>) -> f64 {
    let span = (exp_range.end() - exp_range.start() + 1) as u64;
    let e = exp_range.start() + rng.below(span) as i32;
    let m = 1.0 + rng.next_f64();
    let v = m * 2f64.powi(e);
    if rng.next_u64() & 1 == 1 {
        -v
    } else {
        v
    }
}

/// Operand pairs for the error-free transforms: independent exponents,
/// close exponents (heavy cancellation) and small ones. Exponents stay
/// within ±450 so that product error terms never underflow.
pub fn eft_pairs(count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|i| {
            let a = random_double(&mut rng, -450..=450);
            let b = match i % 4 {
                0 => random_double(&mut rng, -450..=450),
                1 => a * (1.0 + random_double(&mut rng, -60..=-1)),
                2 => -a * (1.0 + random_double(&mut rng, -52..=-30)),
                _ => random_double(&mut rng, -60..=60),
            };
            (a, b)
        })
        .collect()
}

/// Number of pairs on which some transform is not exact.
pub fn eft_failures(pairs: &[(f64, f64)]) -> usize {
    pairs
        .iter()
        .filter(|&&(a, b)| {
            let (ra, rb) = (rat(a), rat(b));
            let (s, e) = two_sum(a, b);
            let (p, pe) = two_prod(a, b);
            let (d, de) = two_prod_dekker(a, b);
            let sum_ok = s == a + b && rat(s) + rat(e) == &ra + &rb;
            let prod_ok = p == a * b && rat(p) + rat(pe) == &ra * &rb;
            let dekker_ok = d == p && rat(d) + rat(de) == &ra * &rb;
            !(sum_ok && prod_ok && dekker_ok)
        })
        .count()
}

pub fn random_dd(rng: &mut SplitMix64, exp_range: std::ops::RangeInclusive<i32>) -> DoubleDouble {
    let hi = random_double(rng, exp_range);
    let lo = hi * rng.uniform(-1.0, 1.0) * 2f64.powi(-53);
    DoubleDouble::new(hi, lo)
}

/// Worst relative error of dd add, sub, mul, div and sqrt over `count`
/// random operand pairs.
pub fn dd_arithmetic_worst(count: usize, seed: u64) -> f64 {
    let mut rng = SplitMix64::new(seed);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let a = random_dd(&mut rng, -200..=200);
        let b = if i % 3 == 0 {
            // near-cancelling partner
            DoubleDouble::new(-a.hi, rng.uniform(-1.0, 1.0) * a.hi.abs() * 2f64.powi(-60))
        } else {
            random_dd(&mut rng, -200..=200)
        };
        let (ra, rb) = (rat_dd(a), rat_dd(b));
        let sum = &ra + &rb;
        if !sum.is_zero() {
            worst = worst.max(rel_err(&rat_dd(a + b), &sum));
            worst = worst.max(rel_err(&rat_dd(a - (-b)), &sum));
        }
        worst = worst.max(rel_err(&rat_dd(a * b), &(&ra * &rb)));
        worst = worst.max(rel_err(&rat_dd(a.checked_div(b).unwrap()), &(&ra / &rb)));
        let root = a.abs().sqrt().unwrap();
        // r² = |a|(1 + δ)² so the relative error of r is about half the residual
        let residual = rel_err(&(rat_dd(root) * rat_dd(root)), &ra.abs());
        worst = worst.max(residual / 2.0);
    }
    worst
}

/// Pairs on which dd ordering disagrees with exact ordering.
pub fn dd_order_failures(count: usize, seed: u64) -> usize {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .filter(|i| {
            let a = random_dd(&mut rng, -20..=20);
            let b = if i % 2 == 0 {
                DoubleDouble::new(a.hi, a.lo * rng.uniform(-2.0, 2.0))
            } else {
                random_dd(&mut rng, -20..=20)
            };
            a.partial_cmp(&b) != rat_dd(a).partial_cmp(&rat_dd(b))
        })
        .count()
}

/// Worst relative error of each dd elementary function against the
/// fixed-point reference, over `points` deterministic samples per function.
pub fn elementary_worst(points: usize, seed: u64) -> Vec<(&'static str, f64)> {
    use elementary as ex;
    let mut rng = SplitMix64::new(seed);
    let mut grid = |f: &mut dyn FnMut(&mut SplitMix64, usize) -> f64| -> Vec<f64> {
        (0..points).map(|i| f(&mut rng, i)).collect()
    };
    let exp_grid = grid(&mut |r, i| if i % 2 == 0 { r.uniform(-600.0, 700.0) } else { r.uniform(-1.0, 1.0) });
    let log_grid = grid(&mut |r, i| match i % 4 {
        0 | 1 => r.uniform(-1000.0, 1000.0).exp2() * r.uniform(1.0, 2.0),
        2 => 1.0 + r.uniform(-1.0, 1.0) * r.uniform(-40.0, -3.0).exp2(),
        _ => r.uniform(0.5, 2.0),
    });
    let trig_grid = grid(&mut |r, i| if i % 4 == 0 { r.uniform(-1.0, 1.0) } else { r.uniform(-100.0, 100.0) });
    let unit_grid = grid(&mut |r, i| if i % 5 == 0 { 1.0 - r.uniform(-40.0, -1.0).exp2() } else { r.uniform(-1.0, 1.0) });
    let hyp_grid = grid(&mut |r, i| if i % 2 == 0 { r.uniform(-700.0, 700.0) } else { r.uniform(-1.0, 1.0) });
    let pow_grid: Vec<(f64, f64)> = grid(&mut |r, _| r.uniform(0.1, 10.0))
        .into_iter()
        .zip(grid(&mut |r, _| r.uniform(-50.0, 50.0)))
        .collect();

    let worst = |xs: &[f64], dd: &dyn Fn(DoubleDouble) -> DoubleDouble, exact: &dyn Fn(&BigRational) -> BigRational| {
        xs.iter()
            .map(|&x| rel_err(&rat_dd(dd(DoubleDouble::from(x))), &exact(&rat(x))))
            .fold(0.0, f64::max)
    };
    vec![
        ("exp", worst(&exp_grid, &|d| d.exp(), &ex::exp)),
        ("log", worst(&log_grid, &|d| d.ln().unwrap(), &ex::ln)),
        ("log10", worst(&log_grid, &|d| d.log10().unwrap(), &ex::log10)),
        ("sin", worst(&trig_grid, &|d| d.sin(), &|q| ex::sin_cos(q).0)),
        ("cos", worst(&trig_grid, &|d| d.cos(), &|q| ex::sin_cos(q).1)),
        ("tan", worst(&trig_grid, &|d| d.tan(), &|q| {
            let (s, c) = ex::sin_cos(q);
            s / c
        })),
        ("asin", worst(&unit_grid, &|d| d.asin().unwrap(), &ex::asin)),
        ("acos", worst(&unit_grid, &|d| d.acos().unwrap(), &ex::acos)),
        ("sinh", worst(&hyp_grid, &|d| d.sinh(), &ex::sinh)),
        ("cosh", worst(&hyp_grid, &|d| d.cosh(), &ex::cosh)),
        (
            "pow",
            pow_grid
                .iter()
                .map(|&(x, y)| {
                    let d = DoubleDouble::from(x).pow(DoubleDouble::from(y)).unwrap();
                    rel_err(&rat_dd(d), &ex::pow(x, y))
                })
                .fold(0.0, f64::max),
        ),
    ]
}
