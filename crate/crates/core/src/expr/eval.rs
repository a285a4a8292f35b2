use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::ast::{Expr, Program};
use crate::backend::{Arithmetic, Oracle, Plain};
use crate::dd::DoubleDouble;
use crate::perturb::{
    PerturbationContext, PerturbationPolicy, PerturbationStrategy, TraceRecord,
};
use crate::ulp::{err_ulp, Divergence};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("input `{0}` is not bound")]
    Unbound(String),
    #[error("`{0}` is not an input of the program")]
    UnknownInput(String),
    #[error("input `{name}` is not finite ({value})")]
    NonFiniteInput { name: String, value: f64 },
    #[error("expected {expected} input values, got {found}")]
    InputCount { expected: usize, found: usize },
}

/// Input values by name.
pub type Bindings = BTreeMap<String, f64>;

/// Builds [`Bindings`] from `(name, value)` pairs.
pub fn bindings<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Bindings {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalBackend {
    Plain,
    Perturbed { strategy: PerturbationStrategy, policy: PerturbationPolicy },
    Oracle,
}

/// Outcome of one `if`: the ordinal of the conditional among those executed
/// and the branch taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BranchRecord {
    pub ordinal: usize,
    pub took_then: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Binary64 result; the rounded oracle value under the oracle backend.
    pub result: f64,
    /// Perturbation sites, empty unless the backend is perturbed.
    pub trace: Vec<TraceRecord>,
    pub branches: Vec<BranchRecord>,
    pub oracle_value: Option<DoubleDouble>,
}

/// Index of the first conditional where two runs went different ways.
pub fn first_branch_flip(a: &[BranchRecord], b: &[BranchRecord]) -> Option<usize> {
    a.iter()
        .zip(b)
        .position(|(x, y)| x.took_then != y.took_then)
        .or_else(|| (a.len() != b.len()).then(|| a.len().min(b.len())))
}

fn eval_expr<A: Arithmetic>(
    expr: &Expr,
    env: &mut Vec<A::Value>,
    arith: &mut A,
    branches: &mut Vec<BranchRecord>,
) -> A::Value {
    match expr {
        Expr::Literal(v) => arith.constant(*v),
        Expr::Var { slot, .. } => env[*slot],
        Expr::Unary { op, arg } => {
            let a = eval_expr(arg, env, arith, branches);
            arith.apply(*op, &[a])
        }
        Expr::Binary { op, lhs, rhs } => {
            let a = eval_expr(lhs, env, arith, branches);
            let b = eval_expr(rhs, env, arith, branches);
            arith.apply(*op, &[a, b])
        }
        Expr::Call { func, args } => match args.as_slice() {
            [a] => {
                let a = eval_expr(a, env, arith, branches);
                arith.apply(*func, &[a])
            }
            [a, b] => {
                let a = eval_expr(a, env, arith, branches);
                let b = eval_expr(b, env, arith, branches);
                arith.apply(*func, &[a, b])
            }
            _ => unreachable!("arity checked at parse time"),
        },
        Expr::Let { .. } => {
            // walk let chains iteratively; programs can hold long unrolled sequences
            let mut node = expr;
            let depth = env.len();
            while let Expr::Let { bound, body, .. } = node {
                let v = eval_expr(bound, env, arith, branches);
                env.push(v);
                node = body;
            }
            let v = eval_expr(node, env, arith, branches);
            env.truncate(depth);
            v
        }
        Expr::If { cond, then_branch, else_branch } => {
            let l = eval_expr(&cond.lhs, env, arith, branches);
            let r = eval_expr(&cond.rhs, env, arith, branches);
            let took_then = cond.relation.holds(arith.partial_cmp(l, r));
            branches.push(BranchRecord { ordinal: branches.len(), took_then });
            let chosen = if took_then { then_branch } else { else_branch };
            eval_expr(chosen, env, arith, branches)
        }
    }
}

/// Runs `program` on positional input values (declaration order).
pub fn run<A: Arithmetic>(
    program: &Program,
    values: &[f64],
    arith: &mut A,
    branches: &mut Vec<BranchRecord>,
) -> Result<A::Value, EvalError> {
    if values.len() != program.inputs.len() {
        return Err(EvalError::InputCount { expected: program.inputs.len(), found: values.len() });
    }
    if let Some((name, &value)) = program.inputs.iter().zip(values).find(|(_, v)| !v.is_finite()) {
        return Err(EvalError::NonFiniteInput { name: name.clone(), value });
    }
    let mut env: Vec<A::Value> = values.iter().map(|&v| arith.input(v)).collect();
    Ok(eval_expr(&program.body, &mut env, arith, branches))
}

/// Orders named bindings by declaration, rejecting missing or unknown names.
pub fn positional_inputs(program: &Program, inputs: &Bindings) -> Result<Vec<f64>, EvalError> {
    if let Some(extra) = inputs.keys().find(|k| program.input_index(k).is_none()) {
        return Err(EvalError::UnknownInput(extra.clone()));
    }
    program
        .inputs
        .iter()
        .map(|name| inputs.get(name).copied().ok_or_else(|| EvalError::Unbound(name.clone())))
        .collect()
}

/// Evaluates with positional inputs. Traces are recorded for the perturbed
/// backend only when `record_trace` is set.
pub fn evaluate_values(
    program: &Program,
    values: &[f64],
    backend: &EvalBackend,
    record_trace: bool,
) -> Result<Evaluation, EvalError> {
    let mut branches = Vec::new();
    match backend {
        EvalBackend::Plain => {
            let result = run(program, values, &mut Plain, &mut branches)?;
            Ok(Evaluation { result, trace: Vec::new(), branches, oracle_value: None })
        }
        EvalBackend::Perturbed { strategy, policy } => {
            let mut ctx = PerturbationContext::new(strategy.clone(), *policy);
            if !record_trace {
                ctx = ctx.without_trace();
            }
            let result = run(program, values, &mut ctx, &mut branches)?;
            Ok(Evaluation { result, trace: ctx.into_trace(), branches, oracle_value: None })
        }
        EvalBackend::Oracle => {
            let value = run(program, values, &mut Oracle, &mut branches)?;
            Ok(Evaluation { result: value.to_f64(), trace: Vec::new(), branches, oracle_value: Some(value) })
        }
    }
}

pub fn evaluate(program: &Program, inputs: &Bindings, backend: &EvalBackend) -> Result<Evaluation, EvalError> {
    let values = positional_inputs(program, inputs)?;
    evaluate_values(program, &values, backend, true)
}

/// ULP divergence of `other` against `reference`, extended to non-finite
/// results: two non-finite values of the same class (both NaN, or equal
/// infinities) agree; any other non-finite mismatch is the sentinel.
pub fn compare_results(reference: f64, other: f64) -> Divergence {
    match (reference.is_finite(), other.is_finite()) {
        (true, true) => err_ulp(reference, other),
        (false, false) if reference.is_nan() && other.is_nan() || reference == other => Divergence::ZERO,
        _ => Divergence::NonFinite,
    }
}

/// Plain result, perturbed result and their divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelaOutcome {
    pub plain: f64,
    pub perturbed: f64,
    pub divergence: Divergence,
}

pub fn dela_outcome(
    program: &Program,
    values: &[f64],
    strategy: &PerturbationStrategy,
    policy: &PerturbationPolicy,
) -> Result<DelaOutcome, EvalError> {
    let plain = run(program, values, &mut Plain, &mut Vec::new())?;
    let mut ctx = PerturbationContext::new(strategy.clone(), *policy).without_trace();
    let perturbed = run(program, values, &mut ctx, &mut Vec::new())?;
    Ok(DelaOutcome { plain, perturbed, divergence: compare_results(plain, perturbed) })
}

/// Divergence between the plain and the perturbed run, in ULPs of the plain result.
pub fn dela_error(
    program: &Program,
    inputs: &Bindings,
    strategy: &PerturbationStrategy,
    policy: &PerturbationPolicy,
) -> Result<Divergence, EvalError> {
    let values = positional_inputs(program, inputs)?;
    Ok(dela_outcome(program, &values, strategy, policy)?.divergence)
}

/// Plain result, double-double result and the plain result's error in ULPs
/// of the rounded oracle value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOutcome {
    pub plain: f64,
    pub oracle: DoubleDouble,
    pub divergence: Divergence,
}

pub fn oracle_outcome(program: &Program, values: &[f64]) -> Result<OracleOutcome, EvalError> {
    let plain = run(program, values, &mut Plain, &mut Vec::new())?;
    let oracle = run(program, values, &mut Oracle, &mut Vec::new())?;
    Ok(OracleOutcome { plain, oracle, divergence: compare_results(oracle.to_f64(), plain) })
}

pub fn oracle_error(program: &Program, inputs: &Bindings) -> Result<Divergence, EvalError> {
    let values = positional_inputs(program, inputs)?;
    Ok(oracle_outcome(program, &values)?.divergence)
}
