use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{estimate_condition_number, generate_conditioned_matrix, solve, LinalgError, Matrix, MatrixGenSpec};
use crate::backend::{Oracle, Plain};
use crate::expr::compare_results;
use crate::perturb::{PerturbationContext, PerturbationPolicy, PerturbationStrategy};
use crate::rng::{derive_seed, SplitMix64};
use crate::stats::{self, CorrelationReport, PermutationConfig};
use crate::ulp::Divergence;

pub use crate::stats::SIGNIFICANT_ULPS;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub count: usize,
    pub dim: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub seed: u64,
    pub strategy: PerturbationStrategy,
    pub policy: PerturbationPolicy,
    pub permutation_rounds: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            count: 100,
            dim: 50,
            kappa_min: 1e1,
            kappa_max: 1e12,
            seed: 0,
            strategy: PerturbationStrategy::default(),
            policy: PerturbationPolicy::default(),
            permutation_rounds: stats::DEFAULT_PERMUTATION_ROUNDS,
        }
    }
}

/// Errors of one solved system.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseErrors {
    pub plain: Vec<f64>,
    pub perturbed: Option<Vec<f64>>,
    pub oracle: Option<Vec<f64>>,
    /// Max over components, plain as reference.
    pub dela_err: Divergence,
    /// Max over components, rounded oracle as reference.
    pub oracle_err: Divergence,
    /// Max over components of |plain − perturbed| / |plain|.
    pub relative_divergence: f64,
}

impl CaseErrors {
    pub fn significant(&self) -> bool {
        stats::is_significant(self.relative_divergence, self.dela_err)
    }
}

fn max_divergence(reference: &[f64], other: &[f64]) -> Divergence {
    reference
        .iter()
        .zip(other)
        .map(|(&r, &o)| compare_results(r, o))
        .fold(Divergence::ZERO, Divergence::max)
}

fn relative(plain: &[f64], other: &[f64]) -> f64 {
    plain
        .iter()
        .zip(other)
        .map(|(&p, &q)| stats::relative_divergence(p, q))
        .fold(0.0, f64::max)
}

/// Solves A·x = b under all three backends. Fails only when the plain
/// factorization does; a singular perturbed or oracle run yields the
/// non-finite sentinel.
pub fn solve_case(
    matrix: &Matrix,
    b: &[f64],
    strategy: &PerturbationStrategy,
    policy: &PerturbationPolicy,
) -> Result<CaseErrors, LinalgError> {
    let plain = solve(matrix, b, &mut Plain)?;
    let mut ctx = PerturbationContext::new(strategy.clone(), *policy).without_trace();
    let perturbed = solve(matrix, b, &mut ctx).ok();
    let oracle: Option<Vec<f64>> =
        solve(matrix, b, &mut Oracle).ok().map(|x| x.iter().map(|v| v.to_f64()).collect());
    let (dela_err, relative_divergence) = match &perturbed {
        Some(p) => (max_divergence(&plain, p), relative(&plain, p)),
        None => (Divergence::NonFinite, f64::INFINITY),
    };
    let oracle_err = match &oracle {
        Some(o) => max_divergence(o, &plain),
        None => Divergence::NonFinite,
    };
    Ok(CaseErrors { plain, perturbed, oracle, dela_err, oracle_err, relative_divergence })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCase {
    pub index: usize,
    pub seed: u64,
    pub target_kappa: f64,
    /// κ₁ estimate of the generated matrix.
    pub kappa: f64,
    pub dela_err: Divergence,
    pub oracle_err: Divergence,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub cases: Vec<BenchCase>,
    /// Indices of cases whose plain factorization hit a zero pivot.
    pub singular: Vec<usize>,
    /// log₁₀(1 + err) of both detectors, over cases with finite errors.
    pub dela_vs_oracle: Option<CorrelationReport>,
    /// Same pairs on the raw ULP scale.
    pub dela_vs_oracle_raw: Option<CorrelationReport>,
    /// log₁₀ κ against log₁₀(1 + dela_err).
    pub kappa_vs_dela: Option<CorrelationReport>,
}

impl BenchReport {
    /// Case indices (into `cases`) of the `k` largest errors, largest first.
    pub fn top_k(&self, k: usize, by_oracle: bool) -> Vec<usize> {
        let key = |c: &BenchCase| if by_oracle { c.oracle_err.as_f64() } else { c.dela_err.as_f64() };
        let mut idx: Vec<usize> = (0..self.cases.len()).collect();
        idx.sort_by(|&a, &b| key(&self.cases[b]).total_cmp(&key(&self.cases[a])).then(a.cmp(&b)));
        idx.truncate(k);
        idx
    }
}

fn generate_case(config: &BenchConfig, index: usize) -> Result<(u64, f64, Matrix, Vec<f64>), LinalgError> {
    let seed = derive_seed(config.seed, index as u64);
    let mut rng = SplitMix64::new(seed);
    let kappa = 10f64.powf(rng.uniform(config.kappa_min.log10(), config.kappa_max.log10()));
    let x_star: Vec<f64> = (0..config.dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let matrix = generate_conditioned_matrix(MatrixGenSpec { dim: config.dim, target_kappa: kappa, seed: rng.next_u64() })?;
    let b = matrix.mul_vec(&x_star);
    Ok((seed, kappa, matrix, b))
}

fn log_err(d: Divergence) -> f64 {
    (d.as_f64() + 1.0).log10()
}

/// Generates `count` systems with log-uniform κ, solves each under the three
/// backends, and correlates the errors. Case `i` draws from
/// splitmix64(derive_seed(seed, i)), so results do not depend on scheduling.
pub fn bench_linear_systems(config: &BenchConfig) -> Result<BenchReport, LinalgError> {
    if config.count < 10 {
        return Err(LinalgError::InvalidSpec(format!("count {} is below 10", config.count)));
    }
    if config.dim < 2 || config.dim > 500 {
        return Err(LinalgError::InvalidSpec(format!("dimension {} is outside 2..=500", config.dim)));
    }
    if !(config.kappa_min >= 1.0 && config.kappa_max >= config.kappa_min && config.kappa_max.is_finite()) {
        return Err(LinalgError::InvalidSpec("condition range must satisfy 1 <= min <= max".into()));
    }
    config
        .policy
        .validate(&config.strategy)
        .map_err(|e| LinalgError::InvalidSpec(e.to_string()))?;

    let outcomes: Vec<Result<Option<BenchCase>, LinalgError>> = (0..config.count)
        .into_par_iter()
        .map(|i| {
            let (seed, target_kappa, matrix, b) = generate_case(config, i)?;
            let errors = match solve_case(&matrix, &b, &config.strategy, &config.policy) {
                Ok(e) => e,
                Err(LinalgError::Singular { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let kappa = estimate_condition_number(&matrix).unwrap_or(f64::INFINITY);
            Ok(Some(BenchCase {
                index: i,
                seed,
                target_kappa,
                kappa,
                dela_err: errors.dela_err,
                oracle_err: errors.oracle_err,
                significant: errors.significant(),
            }))
        })
        .collect();

    let mut cases = Vec::with_capacity(config.count);
    let mut singular = Vec::new();
    for (i, o) in outcomes.into_iter().enumerate() {
        match o? {
            Some(c) => cases.push(c),
            None => singular.push(i),
        }
    }

    let finite: Vec<&BenchCase> = cases
        .iter()
        .filter(|c| !c.dela_err.is_non_finite() && !c.oracle_err.is_non_finite() && c.kappa.is_finite())
        .collect();
    let perm = PermutationConfig { rounds: config.permutation_rounds, seed: config.seed };
    let column = |f: &dyn Fn(&BenchCase) -> f64| finite.iter().map(|c| f(c)).collect::<Vec<f64>>();
    let dela_log = column(&|c| log_err(c.dela_err));
    let oracle_log = column(&|c| log_err(c.oracle_err));
    let dela_raw = column(&|c| c.dela_err.as_f64());
    let oracle_raw = column(&|c| c.oracle_err.as_f64());
    let kappa_log = column(&|c| c.kappa.log10());

    Ok(BenchReport {
        config: config.clone(),
        dela_vs_oracle: stats::correlate(&dela_log, &oracle_log, &[], perm).ok(),
        dela_vs_oracle_raw: stats::correlate(&dela_raw, &oracle_raw, &[], perm).ok(),
        kappa_vs_dela: stats::correlate(&kappa_log, &dela_log, &[], perm).ok(),
        cases,
        singular,
    })
}

/// CSV mirror of the per-case table.
pub fn write_bench_csv<W: Write>(report: &BenchReport, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["index", "seed", "target_kappa", "kappa", "dela_err", "oracle_err", "significant"])?;
    for c in &report.cases {
        w.write_record([
            c.index.to_string(),
            c.seed.to_string(),
            format!("{:?}", c.target_kappa),
            format!("{:?}", c.kappa),
            c.dela_err.to_string(),
            c.oracle_err.to_string(),
            c.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(count: usize, kmin: f64, kmax: f64) -> BenchConfig {
        BenchConfig { count, dim: 6, kappa_min: kmin, kappa_max: kmax, permutation_rounds: 200, ..Default::default() }
    }

    #[test]
    fn validates_configuration() {
        assert!(bench_linear_systems(&small(9, 1.0, 10.0)).is_err());
        assert!(bench_linear_systems(&small(10, 10.0, 1.0)).is_err());
        assert!(bench_linear_systems(&BenchConfig { dim: 1, ..small(10, 1.0, 2.0) }).is_err());
    }

    #[test]
    fn deterministic_and_ordered() {
        let cfg = small(12, 1e2, 1e8);
        let a = bench_linear_systems(&cfg).unwrap();
        let b = bench_linear_systems(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cases.len() + a.singular.len(), 12);
        assert!(a.cases.windows(2).all(|w| w[0].index < w[1].index));
        assert!(a.cases.iter().all(|c| c.target_kappa >= 1e2 && c.target_kappa < 1e8));
    }

    #[test]
    fn no_perturbation_means_no_divergence() {
        let cfg = BenchConfig { strategy: PerturbationStrategy::NoPerturbation, ..small(10, 1e3, 1e9) };
        let r = bench_linear_systems(&cfg).unwrap();
        assert!(r.cases.iter().all(|c| c.dela_err == Divergence::ZERO && !c.significant));
    }

    #[test]
    fn two_by_two_case() {
        let m = Matrix::from_rows(&[vec![1.0001, 1.0], vec![1.0, 1.0]]).unwrap();
        let e = solve_case(&m, &[2.0001, 2.0], &PerturbationStrategy::default(), &PerturbationPolicy::default())
            .unwrap();
        assert!(e.dela_err.exceeds(1e3), "{:?}", e.dela_err);
        let oracle = e.oracle.unwrap();
        // b = [2.0001, 2] rounded; the exact solution of the rounded system is near [1, 1]
        assert!((oracle[0] - 1.0).abs() < 1e-8 && (oracle[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn csv_mirror() {
        let r = bench_linear_systems(&small(10, 1.0, 1.0)).unwrap();
        let mut buf = Vec::new();
        write_bench_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 11);
        assert!(text.starts_with("index,seed,target_kappa,kappa,dela_err,oracle_err,significant\n"));
    }
}
