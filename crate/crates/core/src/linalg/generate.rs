use serde::{Deserialize, Serialize};

use super::{LinalgError, Matrix};
use crate::rng::SplitMix64;

/// Recipe for a random matrix with 2-norm condition number `target_kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixGenSpec {
    pub dim: usize,
    pub target_kappa: f64,
    pub seed: u64,
}

/// Orthogonal factor of a Householder QR of `g`, formed explicitly.
pub fn householder_q(g: &Matrix) -> Matrix {
    let n = g.dim;
    let mut a = g.entries.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(n);
    for k in 0..n {
        let norm = (k..n).map(|i| a[i * n + k] * a[i * n + k]).sum::<f64>().sqrt();
        let mut v: Vec<f64> = (k..n).map(|i| a[i * n + k]).collect();
        // sign choice avoids cancellation in v[0]
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..n {
                let dot: f64 = (k..n).map(|i| v[i - k] * a[i * n + j]).sum();
                let s = 2.0 * dot / vnorm2;
                for i in k..n {
                    a[i * n + j] -= s * v[i - k];
                }
            }
        }
        reflectors.push(v);
    }
    // Q = H₀·H₁·…·H_{n−1}, applied right to left onto the identity
    let mut q = Matrix::identity(n).entries;
    for (k, v) in reflectors.iter().enumerate().rev() {
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        for j in 0..n {
            let dot: f64 = (k..n).map(|i| v[i - k] * q[i * n + j]).sum();
            let s = 2.0 * dot / vnorm2;
            for i in k..n {
                q[i * n + j] -= s * v[i - k];
            }
        }
    }
    Matrix { dim: n, entries: q }
}

fn gaussian(dim: usize, rng: &mut SplitMix64) -> Matrix {
    Matrix { dim, entries: (0..dim * dim).map(|_| rng.standard_normal()).collect() }
}

/// A = Q₁·diag(σ)·Q₂ᵀ with σ log-spaced from 1 down to 1/κ. Q₁ and Q₂ come
/// from Gaussian matrices drawn (row-major, Q₁ first) from splitmix64(seed).
pub fn generate_conditioned_matrix(spec: MatrixGenSpec) -> Result<Matrix, LinalgError> {
    let n = spec.dim;
    if n < 2 {
        return Err(LinalgError::InvalidSpec(format!("dimension {n} is below 2")));
    }
    if spec.target_kappa.is_nan() || spec.target_kappa < 1.0 || !spec.target_kappa.is_finite() {
        return Err(LinalgError::InvalidSpec(format!("target condition number {} is below 1", spec.target_kappa)));
    }
    let mut rng = SplitMix64::new(spec.seed);
    let q1 = householder_q(&gaussian(n, &mut rng));
    let q2 = householder_q(&gaussian(n, &mut rng));
    let log_k = spec.target_kappa.log10();
    let sigma: Vec<f64> = (0..n).map(|i| 10f64.powf(-log_k * i as f64 / (n - 1) as f64)).collect();
    let mut scaled = q1;
    for i in 0..n {
        for (j, s) in sigma.iter().enumerate() {
            scaled.entries[i * n + j] *= s;
        }
    }
    Matrix::new(n, scaled.matmul(&q2.transpose()).entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_deviation_from_identity(m: &Matrix) -> f64 {
        let p = m.transpose().matmul(m);
        let n = m.dim();
        (0..n * n)
            .map(|k| (p.entries()[k] - if k / n == k % n { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn q_is_orthogonal() {
        let mut rng = SplitMix64::new(7);
        let q = householder_q(&gaussian(12, &mut rng));
        assert!(max_deviation_from_identity(&q) < 1e-13);
    }

    #[test]
    fn unit_kappa_is_orthogonal() {
        let a = generate_conditioned_matrix(MatrixGenSpec { dim: 20, target_kappa: 1.0, seed: 3 }).unwrap();
        assert!(max_deviation_from_identity(&a) < 1e-12);
    }

    #[test]
    fn deterministic() {
        let spec = MatrixGenSpec { dim: 8, target_kappa: 1e5, seed: 99 };
        let a = generate_conditioned_matrix(spec).unwrap();
        let b = generate_conditioned_matrix(spec).unwrap();
        assert!(a.entries().iter().zip(b.entries()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = generate_conditioned_matrix(MatrixGenSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_conditioned_matrix(MatrixGenSpec { dim: 1, target_kappa: 2.0, seed: 0 }).is_err());
        assert!(generate_conditioned_matrix(MatrixGenSpec { dim: 3, target_kappa: 0.5, seed: 0 }).is_err());
        assert!(generate_conditioned_matrix(MatrixGenSpec { dim: 3, target_kappa: f64::NAN, seed: 0 }).is_err());
    }
}
