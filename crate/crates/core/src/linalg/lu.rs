use std::cmp::Ordering;

use super::{LinalgError, Matrix};
use crate::backend::{Arithmetic, Plain};
use crate::perturb::AtomicOp;

/// Packed LU factors: strictly lower part of `compact` holds L (unit
/// diagonal implied), the rest holds U. Row `i` of the factored matrix is row
/// `pivots[i]` of the original.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors<V> {
    pub dim: usize,
    pub compact: Vec<V>,
    pub pivots: Vec<usize>,
}

impl<V: Copy> LuFactors<V> {
    pub fn at(&self, row: usize, col: usize) -> V {
        self.compact[row * self.dim + col]
    }
}

impl LuFactors<f64> {
    pub fn lower(&self) -> Matrix {
        let n = self.dim;
        let entries = (0..n * n)
            .map(|k| match (k / n).cmp(&(k % n)) {
                Ordering::Greater => self.compact[k],
                Ordering::Equal => 1.0,
                Ordering::Less => 0.0,
            })
            .collect();
        Matrix { dim: n, entries }
    }

    pub fn upper(&self) -> Matrix {
        let n = self.dim;
        let entries = (0..n * n).map(|k| if k / n <= k % n { self.compact[k] } else { 0.0 }).collect();
        Matrix { dim: n, entries }
    }
}

fn is_zero<A: Arithmetic>(arith: &A, v: A::Value) -> bool {
    arith.to_f64(v) == 0.0
}

/// Doolittle elimination with partial pivoting. Matrix entries enter the
/// backend through [`Arithmetic::input`]; every multiplier, product and
/// update is one backend operation.
pub fn lu_decompose<A: Arithmetic>(matrix: &Matrix, arith: &mut A) -> Result<LuFactors<A::Value>, LinalgError> {
    let n = matrix.dim;
    let mut a: Vec<A::Value> = matrix.entries.iter().map(|&v| arith.input(v)).collect();
    let mut pivots: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = arith.magnitude(a[k * n + k]);
        for i in k + 1..n {
            let m = arith.magnitude(a[i * n + k]);
            if arith.partial_cmp(m, best) == Some(Ordering::Greater) {
                p = i;
                best = m;
            }
        }
        if p != k {
            for j in 0..n {
                a.swap(k * n + j, p * n + j);
            }
            pivots.swap(k, p);
        }
        let pivot = a[k * n + k];
        if is_zero(arith, pivot) {
            return Err(LinalgError::Singular { column: k });
        }
        for i in k + 1..n {
            let l = arith.apply(AtomicOp::Div, &[a[i * n + k], pivot]);
            a[i * n + k] = l;
            for j in k + 1..n {
                let prod = arith.apply(AtomicOp::Mul, &[l, a[k * n + j]]);
                a[i * n + j] = arith.apply(AtomicOp::Sub, &[a[i * n + j], prod]);
            }
        }
    }
    Ok(LuFactors { dim: n, compact: a, pivots })
}

/// Forward then back substitution. Right-hand side entries enter through
/// [`Arithmetic::input`].
#[allow(clippy::needless_range_loop)]
pub fn lu_solve<A: Arithmetic>(
    factors: &LuFactors<A::Value>,
    b: &[f64],
    arith: &mut A,
) -> Result<Vec<A::Value>, LinalgError> {
    let n = factors.dim;
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch { expected: n, found: b.len() });
    }
    let b: Vec<A::Value> = b.iter().map(|&v| arith.input(v)).collect();
    let mut y: Vec<A::Value> = Vec::with_capacity(n);
    for i in 0..n {
        let mut s = b[factors.pivots[i]];
        for (j, &yj) in y.iter().enumerate() {
            let prod = arith.apply(AtomicOp::Mul, &[factors.at(i, j), yj]);
            s = arith.apply(AtomicOp::Sub, &[s, prod]);
        }
        y.push(s);
    }
    let mut x = y;
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            let prod = arith.apply(AtomicOp::Mul, &[factors.at(i, j), x[j]]);
            s = arith.apply(AtomicOp::Sub, &[s, prod]);
        }
        let d = factors.at(i, i);
        if is_zero(arith, d) {
            return Err(LinalgError::Singular { column: i });
        }
        x[i] = arith.apply(AtomicOp::Div, &[s, d]);
    }
    Ok(x)
}

/// Factor and solve in one call.
pub fn solve<A: Arithmetic>(matrix: &Matrix, b: &[f64], arith: &mut A) -> Result<Vec<A::Value>, LinalgError> {
    let f = lu_decompose(matrix, arith)?;
    lu_solve(&f, b, arith)
}

/// Explicit inverse, column by column from one plain factorization.
pub fn invert(matrix: &Matrix) -> Result<Matrix, LinalgError> {
    let n = matrix.dim;
    let f = lu_decompose(matrix, &mut Plain)?;
    let mut entries = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu_solve(&f, &e, &mut Plain)?;
        e[j] = 0.0;
        for (i, v) in col.into_iter().enumerate() {
            entries[i * n + j] = v;
        }
    }
    Matrix::new(n, entries).map_err(|_| LinalgError::Singular { column: n - 1 })
}

/// κ₁(A) = ‖A‖₁·‖A⁻¹‖₁.
pub fn estimate_condition_number(matrix: &Matrix) -> Result<f64, LinalgError> {
    Ok(matrix.norm_1() * invert(matrix)?.norm_1())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn near_singular_2x2() -> Matrix {
        Matrix::from_rows(&[vec![1.0001, 1.0], vec![1.0, 1.0]]).unwrap()
    }

    #[test]
    fn identity_factors() {
        let f = lu_decompose(&Matrix::identity(4), &mut Plain).unwrap();
        assert_eq!(f.lower(), Matrix::identity(4));
        assert_eq!(f.upper(), Matrix::identity(4));
        assert_eq!(f.pivots, vec![0, 1, 2, 3]);
        let b = [0.1, -3.0, 1e-300, 7.5];
        assert_eq!(solve(&Matrix::identity(4), &b, &mut Plain).unwrap(), b.to_vec());
    }

    #[test]
    fn two_by_two_hand_elimination() {
        let f = lu_decompose(&near_singular_2x2(), &mut Plain).unwrap();
        assert_eq!(f.pivots, vec![0, 1]);
        // l = 1/1.0001, u11 = 1 - l*1, each step rounded once
        let l = 1.0 / 1.0001;
        assert_eq!(f.at(1, 0), l);
        assert_eq!(f.at(1, 1), 1.0 - l);
        assert!((f.at(1, 1) - (1.0 - 1.0 / 1.0001)).abs() < 1e-15);
    }

    #[test]
    fn pivot_ties_take_lowest_row() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![-3.0, 1.0, 1.0], vec![3.0, 0.0, 1.0]]).unwrap();
        let f = lu_decompose(&m, &mut Plain).unwrap();
        assert_eq!(f.pivots[0], 1);
    }

    #[test]
    fn singular_matrix() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(lu_decompose(&m, &mut Plain), Err(LinalgError::Singular { column: 1 }));
        assert!(estimate_condition_number(&m).is_err());
    }

    #[test]
    fn ill_conditioned_solutions() {
        let m = near_singular_2x2();
        let x = solve(&m, &[2.0001, 2.0], &mut Plain).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-8 && (x[1] - 1.0).abs() < 1e-8, "{x:?}");
        let x = solve(&m, &[2.0, 2.0], &mut Plain).unwrap();
        assert!(x[0].abs() < 1e-8 && (x[1] - 2.0).abs() < 1e-8, "{x:?}");
    }

    #[test]
    fn condition_numbers() {
        assert_eq!(estimate_condition_number(&Matrix::identity(5)).unwrap(), 1.0);
        let d = Matrix::diagonal(&[1.0, 1e-6]).unwrap();
        assert!((estimate_condition_number(&d).unwrap() - 1e6).abs() < 1e-4);
        // closed form: ‖A‖₁ = 2.0001, ‖A⁻¹‖₁ = 2.0001 / 0.0001
        let k = estimate_condition_number(&near_singular_2x2()).unwrap();
        let exact = 2.0001 * 2.0001 / 0.0001;
        assert!((k / exact - 1.0).abs() < 1e-9, "{k}");
        assert!((k / 4.0002e4 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn reconstruction() {
        let m = Matrix::from_rows(&[
            vec![2.0, -1.0, 0.5, 3.0],
            vec![4.0, 1.0, -2.0, 0.0],
            vec![-1.0, 0.25, 8.0, 1.0],
            vec![0.5, 6.0, 1.0, -1.0],
        ])
        .unwrap();
        let f = lu_decompose(&m, &mut Plain).unwrap();
        let lu = f.lower().matmul(&f.upper());
        let tol = 4.0 * 2f64.powi(-50) * m.norm_inf();
        for i in 0..4 {
            for j in 0..4 {
                assert!((lu.get(i, j) - m.get(f.pivots[i], j)).abs() <= tol);
            }
        }
    }
}
