//! A small numerical-program language standing in for instrumented compiler
//! IR: straight-line `let` bindings, conditionals and the atomic operation
//! set, evaluated under interchangeable numeric backends.

mod ast;
mod eval;
mod parser;

pub use ast::{Comparison, Expr, Program, Relation};
pub use eval::{
    bindings, compare_results, dela_error, dela_outcome, evaluate, evaluate_values,
    first_branch_flip, oracle_error, oracle_outcome, positional_inputs, run, Bindings,
    BranchRecord, DelaOutcome, EvalBackend, EvalError, Evaluation, OracleOutcome,
};
pub use parser::{parse, ParseError, ParseErrorKind};
