//! Correlation statistics, permutation p-values, significance and outlier
//! classification.
//!
//! Pearson uses the two-pass algorithm (means first, then centered sums),
//! which avoids the cancellation of the one-pass textbook formula.

use serde::Serialize;
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::ulp::Divergence;

/// Relative errors strictly above this are significant (0.1%).
pub const SIGNIFICANCE_THRESHOLD: f64 = 1e-3;

pub const DEFAULT_PERMUTATION_ROUNDS: usize = 10_000;

/// ULP divergence above which a result counts as significant regardless of
/// its relative size.
pub const SIGNIFICANT_ULPS: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("non-finite sample")]
    NonFinite,
    #[error("correlation undefined: zero variance")]
    ZeroVariance,
}

fn check(xs: &[f64], ys: &[f64]) -> Result<(), CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooFewSamples(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn pearson_unchecked(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CorrelationError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check(xs, ys)?;
    pearson_unchecked(xs, ys)
}

/// 1-based average ranks; ties share the mean of their rank range.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman's rho: Pearson on average ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, CorrelationError> {
    check(xs, ys)?;
    pearson_unchecked(&ranks(xs), &ranks(ys))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    Pearson,
    Spearman,
}

/// Two-sided permutation p-value: shuffles `ys` with splitmix64(`seed`) and
/// counts shuffles whose |statistic| reaches the observed one, smoothed as
/// (count + 1) / (rounds + 1).
pub fn permutation_p_value(
    xs: &[f64],
    ys: &[f64],
    statistic: Statistic,
    rounds: usize,
    seed: u64,
) -> Result<f64, CorrelationError> {
    check(xs, ys)?;
    let (xs, mut ys) = match statistic {
        Statistic::Pearson => (xs.to_vec(), ys.to_vec()),
        Statistic::Spearman => (ranks(xs), ranks(ys)),
    };
    let observed = pearson_unchecked(&xs, &ys)?.abs();
    // shuffles sum in a different order; allow for last-bit noise
    let bar = observed * (1.0 - 1e-12);
    let mut rng = SplitMix64::new(seed);
    let mut hits = 0usize;
    for _ in 0..rounds {
        rng.shuffle(&mut ys);
        if pearson_unchecked(&xs, &ys)?.abs() >= bar {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (rounds + 1) as f64)
}

/// Relative error strictly above 0.1%.
pub fn classify_significant(rel_err: f64) -> bool {
    rel_err > SIGNIFICANCE_THRESHOLD
}

/// |plain − other| / |plain|; zero when the values agree (including equal
/// infinities) and infinite when the quotient is undefined.
pub fn relative_divergence(plain: f64, other: f64) -> f64 {
    if plain == other || plain.is_nan() && other.is_nan() {
        return 0.0;
    }
    let r = ((plain - other) / plain).abs();
    if r.is_nan() {
        f64::INFINITY
    } else {
        r
    }
}

/// Dual threshold: relative divergence above 0.1%, or a ULP divergence above
/// [`SIGNIFICANT_ULPS`] (relative error understates divergence near zero).
pub fn is_significant(relative: f64, divergence: Divergence) -> bool {
    classify_significant(relative) || divergence.exceeds(SIGNIFICANT_ULPS)
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Indices whose log₁₀(err + 1) lies more than `k` median absolute
/// deviations from the median. Fewer than 5 values yield no outliers.
pub fn detect_outliers(errors: &[f64], k: f64) -> Vec<usize> {
    if errors.len() < 5 {
        return Vec::new();
    }
    let logs: Vec<f64> = errors.iter().map(|e| (e + 1.0).log10()).collect();
    let mut sorted = logs.clone();
    sorted.sort_by(f64::total_cmp);
    let med = median(&sorted);
    let mut dev: Vec<f64> = logs.iter().map(|l| (l - med).abs()).collect();
    dev.sort_by(f64::total_cmp);
    let mad = median(&dev);
    logs.iter()
        .enumerate()
        .filter(|(_, l)| (*l - med).abs() > k * mad)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub pearson_r: f64,
    pub spearman_rho: f64,
    pub p_pearson: f64,
    pub p_spearman: f64,
    pub n: usize,
    pub outliers_removed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PermutationConfig {
    pub rounds: usize,
    pub seed: u64,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        PermutationConfig { rounds: DEFAULT_PERMUTATION_ROUNDS, seed: 0 }
    }
}

/// Pearson, Spearman and their permutation p-values over the pairs not
/// listed in `excluded`.
pub fn correlate(
    xs: &[f64],
    ys: &[f64],
    excluded: &[usize],
    perm: PermutationConfig,
) -> Result<CorrelationReport, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch(xs.len(), ys.len()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = xs
        .iter()
        .zip(ys)
        .enumerate()
        .filter(|(i, _)| !excluded.contains(i))
        .map(|(_, (&x, &y))| (x, y))
        .unzip();
    Ok(CorrelationReport {
        pearson_r: pearson(&xs, &ys)?,
        spearman_rho: spearman(&xs, &ys)?,
        p_pearson: permutation_p_value(&xs, &ys, Statistic::Pearson, perm.rounds, perm.seed)?,
        p_spearman: permutation_p_value(&xs, &ys, Statistic::Spearman, perm.rounds, perm.seed)?,
        n: xs.len(),
        outliers_removed: excluded.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_relations() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.37 - 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x + 1.0).collect();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_against_exact_rational_value() {
        // exact rational sums for [1,2,3,4] vs [1,2,3,100]: sxy = 149, sxx = 5,
        // syy = 7205, so r = 149 / sqrt(36025)
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 100.0]).unwrap();
        assert!((r - 149.0 / 36025f64.sqrt()).abs() < 1e-15, "{r}");
        assert!((r - 0.7850264209630101).abs() < 1e-15);
    }

    #[test]
    fn spearman_is_rank_based() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64 / 7.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.exp()).collect();
        assert_eq!(spearman(&xs, &ys).unwrap(), 1.0);
        let incr: Vec<f64> = xs.iter().map(|x| x * x * x + 3.0).collect();
        assert_eq!(spearman(&xs, &incr).unwrap(), 1.0);
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]),
            Err(CorrelationError::ZeroVariance)
        );
    }

    #[test]
    fn tied_ranks() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn input_validation() {
        assert_eq!(pearson(&[1.0], &[1.0]), Err(CorrelationError::TooFewSamples(1)));
        assert_eq!(pearson(&[1.0, 2.0], &[1.0]), Err(CorrelationError::LengthMismatch(2, 1)));
        assert_eq!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]), Err(CorrelationError::NonFinite));
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(CorrelationError::ZeroVariance));
    }

    #[test]
    fn permutation_p_values() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let p = permutation_p_value(&xs, &ys, Statistic::Pearson, 10_000, 1).unwrap();
        assert!(p <= 0.001, "{p}");
        let p = permutation_p_value(&[1.0, 2.0], &[3.0, 5.0], Statistic::Pearson, 1000, 1).unwrap();
        assert!(p >= 1.0 / 3.0, "{p}");
        let a = permutation_p_value(&xs, &ys, Statistic::Spearman, 500, 42).unwrap();
        let b = permutation_p_value(&xs, &ys, Statistic::Spearman, 500, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn independent_data_is_not_significant() {
        // Monte-Carlo calibration: under independence p is ~uniform, so p > 0.01
        // should hold on (almost) every seed
        let mut passes = 0;
        for seed in 0..10u64 {
            let mut rng = SplitMix64::new(1000 + seed);
            let xs: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
            let ys: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
            let p = permutation_p_value(&xs, &ys, Statistic::Pearson, 1000, seed).unwrap();
            if p > 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 9, "{passes}");
    }

    #[test]
    fn significance_is_strict() {
        assert!(!classify_significant(0.001));
        assert!(classify_significant(0.0011));
        assert!(!classify_significant(0.0));
    }

    #[test]
    fn outliers() {
        let mut errs = vec![10.0; 20];
        errs[7] = 1e7;
        assert_eq!(detect_outliers(&errs, 10.0), vec![7]);
        assert!(detect_outliers(&[3.0; 10], 10.0).is_empty());
        assert!(detect_outliers(&[1.0, 1e9], 10.0).is_empty());
        let spread: Vec<f64> = (0..40).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        assert!(detect_outliers(&spread, 10.0).is_empty());
    }

    #[test]
    fn correlate_with_exclusions() {
        let xs: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let mut ys: Vec<f64> = xs.iter().map(|x| x * 2.0).collect();
        ys[5] = -1000.0;
        let perm = PermutationConfig { rounds: 200, seed: 9 };
        let all = correlate(&xs, &ys, &[], perm).unwrap();
        let clean = correlate(&xs, &ys, &[5], perm).unwrap();
        assert!(all.pearson_r < 0.5);
        assert!((clean.pearson_r - 1.0).abs() < 1e-12);
        assert_eq!(clean.n, 29);
        assert_eq!(clean.outliers_removed, 1);
    }
}
