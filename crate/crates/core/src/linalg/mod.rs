//! Dense linear systems: LU with partial pivoting over any [`Arithmetic`]
//! backend, matrices with a prescribed condition number, and the
//! error-correlation benchmark.
//!
//! [`Arithmetic`]: crate::Arithmetic

mod bench;
mod generate;
mod lu;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{
    bench_linear_systems, solve_case, write_bench_csv, BenchCase, BenchConfig, BenchReport, CaseErrors,
    SIGNIFICANT_ULPS,
};
pub use generate::{generate_conditioned_matrix, householder_q, MatrixGenSpec};
pub use lu::{estimate_condition_number, invert, lu_decompose, lu_solve, solve, LuFactors};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (zero pivot in column {column})")]
    Singular { column: usize },
    #[error("expected {expected} entries, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("invalid configuration: {0}")]
    InvalidSpec(String),
}

/// Square matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    dim: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(LinalgError::DimensionMismatch { expected: dim * dim, found: entries.len() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(Matrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let dim = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(LinalgError::DimensionMismatch { expected: dim, found: r.len() });
        }
        Matrix::new(dim, rows.concat())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Matrix { dim, entries }
    }

    pub fn diagonal(values: &[f64]) -> Result<Self, LinalgError> {
        let dim = values.len();
        let mut entries = vec![0.0; dim * dim];
        for (i, v) in values.iter().enumerate() {
            entries[i * dim + i] = *v;
        }
        Matrix::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn transpose(&self) -> Matrix {
        let n = self.dim;
        let entries = (0..n * n).map(|k| self.get(k % n, k / n)).collect();
        Matrix { dim: n, entries }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        let n = self.dim;
        assert_eq!(n, other.dim);
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                for j in 0..n {
                    entries[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Matrix { dim: n, entries }
    }

    /// Plain binary64 product A·x.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm_1(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .chunks(self.dim)
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
