mod common;

use common::{rat, rat_dd};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;
use ulpscope::dd::{quick_two_sum, two_prod, two_sum};
use ulpscope::DoubleDouble;

#[test]
fn transforms_are_exact_on_random_pairs() {
    let pairs = common::eft_pairs(100_000, 0x5eed);
    assert_eq!(common::eft_failures(&pairs), 0);
}

#[test]
fn two_sum_examples() {
    let tiny = 2f64.powi(-53);
    assert_eq!(two_sum(1.0, tiny), (1.0, tiny));
    assert_eq!(two_sum(1.0, 1.0), (2.0, 0.0));
    let (s, e) = two_sum(0.1, 0.2);
    assert_eq!(s, 0.30000000000000004);
    assert_eq!(rat(e), rat(0.1) + rat(0.2) - rat(s));
    assert_eq!(e, -2.7755575615628914e-17);
}

#[test]
fn two_prod_examples() {
    assert_eq!(two_prod(1.0, 0.7), (0.7, 0.0));
    let a = 134217729.0; // 2²⁷ + 1
    let (p, e) = two_prod(a, a);
    // (2²⁷+1)² = 2⁵⁴ + 2²⁸ + 1: the trailing 1 is below the last place of p
    let exact = (BigInt::from(1) << 54) + (BigInt::from(1) << 28) + 1;
    assert_eq!(rat(p) + rat(e), BigRational::from_integer(exact));
    assert_eq!(e, 1.0);
    let (p, e) = two_prod(0.1, 0.1);
    assert_eq!(p, 0.010000000000000002);
    assert_eq!(rat(p) + rat(e), rat(0.1) * rat(0.1));
}

#[test]
fn dd_arithmetic_within_bound() {
    let worst = common::dd_arithmetic_worst(20_000, 3);
    assert!(worst <= 2f64.powi(-104), "{worst:e}");
}

#[test]
fn dd_ordering_matches_exact_ordering() {
    assert_eq!(common::dd_order_failures(20_000, 11), 0);
}

#[test]
fn dd_add_negation_is_zero() {
    let x = DoubleDouble::new(0.1, 1e-18);
    assert!((x + (-x)).is_zero());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn renormalize_is_idempotent(hi in -1e300f64..1e300, frac in -1.0f64..1.0) {
        let x = DoubleDouble { hi, lo: hi * frac * 1e-10 }.renormalize();
        let y = x.renormalize();
        prop_assert_eq!(x.hi.to_bits(), y.hi.to_bits());
        prop_assert_eq!(x.lo.to_bits(), y.lo.to_bits());
        prop_assert_eq!(x.hi, x.hi + x.lo);
    }

    #[test]
    fn quick_two_sum_exact_when_ordered(a in -1e200f64..1e200, r in -1.0f64..1.0) {
        let b = a * r * 1e-5;
        let (s, e) = quick_two_sum(a, b);
        prop_assert_eq!(rat(s) + rat(e), rat(a) + rat(b));
    }

    #[test]
    fn sum_of_dd_is_exact_within_bound(a in -1e10f64..1e10, b in -1e10f64..1e10, c in -1.0f64..1.0) {
        let x = DoubleDouble::new(a, a * c * 1e-17);
        let y = DoubleDouble::from(b);
        let exact = rat_dd(x) + rat_dd(y);
        let got = rat_dd(x + y);
        prop_assert!(common::rel_err(&got, &exact) <= 2f64.powi(-104) || exact == got);
    }
}
