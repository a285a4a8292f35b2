//! Shared workloads for the benchmarks.

use ulpscope::corpus::CORPUS;
use ulpscope::expr::positional_inputs;
use ulpscope::linalg::{generate_conditioned_matrix, Matrix, MatrixGenSpec};
use ulpscope::rng::SplitMix64;
use ulpscope::Program;

/// A parsed corpus program with its sample inputs in declaration order.
pub struct Workload {
    pub name: &'static str,
    pub program: Program,
    pub values: Vec<f64>,
}

pub fn corpus_workloads() -> Vec<Workload> {
    CORPUS
        .iter()
        .map(|e| {
            let program = e.program().expect("bundled programs parse");
            let values = positional_inputs(&program, &e.bindings()).expect("samples bind every input");
            Workload { name: e.name, program, values }
        })
        .collect()
}

/// A system A·x = b with κ(A) ≈ `kappa` and a known solution in [−1, 1]ⁿ.
pub fn linear_system(dim: usize, kappa: f64, seed: u64) -> (Matrix, Vec<f64>) {
    let a = generate_conditioned_matrix(MatrixGenSpec { dim, target_kappa: kappa, seed }).expect("valid spec");
    let mut rng = SplitMix64::new(seed ^ 0x5eed);
    let x: Vec<f64> = (0..dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let b = a.mul_vec(&x);
    (a, b)
}
