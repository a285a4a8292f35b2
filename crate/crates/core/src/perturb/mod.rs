//! ULP-scale perturbation of atomic operations.
//!
//! A [`PerturbationContext`] evaluates atomic operations in binary64 and then
//! nudges each result (and optionally each program input and literal) by a few
//! ULPs according to a [`PerturbationStrategy`]. Every instrumented site is
//! recorded in a trace so the perturbed run can be compared step by step with
//! the unperturbed one.

mod condition;
mod trace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Arithmetic;
use crate::ulp::{self, err_ulp};

pub use condition::{condition_numbers, in_dangerous_region, DangerReport, DEFAULT_DANGER_THRESHOLD};
pub use trace::{
    align_traces, read_trace_csv, write_trace_csv, AlignedSite, SiteKind, SiteNote, TraceRecord,
};

/// The instrumented operation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtomicOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Log10,
    Pow,
    Sqrt,
    Fabs,
}

impl AtomicOp {
    pub const ALL: [AtomicOp; 18] = [
        AtomicOp::Add,
        AtomicOp::Sub,
        AtomicOp::Mul,
        AtomicOp::Div,
        AtomicOp::Neg,
        AtomicOp::Sin,
        AtomicOp::Cos,
        AtomicOp::Tan,
        AtomicOp::Asin,
        AtomicOp::Acos,
        AtomicOp::Sinh,
        AtomicOp::Cosh,
        AtomicOp::Exp,
        AtomicOp::Log,
        AtomicOp::Log10,
        AtomicOp::Pow,
        AtomicOp::Sqrt,
        AtomicOp::Fabs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AtomicOp::Add => "add",
            AtomicOp::Sub => "sub",
            AtomicOp::Mul => "mul",
            AtomicOp::Div => "div",
            AtomicOp::Neg => "neg",
            AtomicOp::Sin => "sin",
            AtomicOp::Cos => "cos",
            AtomicOp::Tan => "tan",
            AtomicOp::Asin => "asin",
            AtomicOp::Acos => "acos",
            AtomicOp::Sinh => "sinh",
            AtomicOp::Cosh => "cosh",
            AtomicOp::Exp => "exp",
            AtomicOp::Log => "log",
            AtomicOp::Log10 => "log10",
            AtomicOp::Pow => "pow",
            AtomicOp::Sqrt => "sqrt",
            AtomicOp::Fabs => "fabs",
        }
    }

    pub fn from_name(name: &str) -> Option<AtomicOp> {
        AtomicOp::ALL.into_iter().find(|op| op.name() == name)
    }

    /// Operations callable by name in program text.
    pub fn is_function(self) -> bool {
        !matches!(
            self,
            AtomicOp::Add | AtomicOp::Sub | AtomicOp::Mul | AtomicOp::Div | AtomicOp::Neg
        )
    }

    pub fn arity(self) -> usize {
        match self {
            AtomicOp::Add | AtomicOp::Sub | AtomicOp::Mul | AtomicOp::Div | AtomicOp::Pow => 2,
            _ => 1,
        }
    }

    /// Whether the operation has an ill-conditioned region at all.
    pub fn has_dangerous_region(self) -> bool {
        !matches!(
            self,
            AtomicOp::Mul | AtomicOp::Div | AtomicOp::Neg | AtomicOp::Sqrt | AtomicOp::Fabs
        )
    }

    /// Hardware binary64 semantics (round to nearest even, libm functions).
    pub fn eval_f64(self, args: &[f64]) -> f64 {
        let x = args[0];
        match self {
            AtomicOp::Add => x + args[1],
            AtomicOp::Sub => x - args[1],
            AtomicOp::Mul => x * args[1],
            AtomicOp::Div => x / args[1],
            AtomicOp::Pow => x.powf(args[1]),
            AtomicOp::Neg => -x,
            AtomicOp::Sin => x.sin(),
            AtomicOp::Cos => x.cos(),
            AtomicOp::Tan => x.tan(),
            AtomicOp::Asin => x.asin(),
            AtomicOp::Acos => x.acos(),
            AtomicOp::Sinh => x.sinh(),
            AtomicOp::Cosh => x.cosh(),
            AtomicOp::Exp => x.exp(),
            AtomicOp::Log => x.ln(),
            AtomicOp::Log10 => x.log10(),
            AtomicOp::Sqrt => x.sqrt(),
            AtomicOp::Fabs => x.abs(),
        }
    }
}

impl fmt::Display for AtomicOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("cyclic perturbation sequence must not be empty")]
    EmptyCycle,
    #[error("perturbation strategy is active but no site class is enabled")]
    NoSites,
    #[error("invalid strategy `{0}` (expected none, fixed:N, cyclic or cyclic:N,N,...)")]
    BadStrategy(String),
}

/// How many ULPs to inject at each dynamic site.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationStrategy {
    NoPerturbation,
    FixedOffset { steps: i64 },
    Cyclic { sequence: Vec<i64> },
}

impl Default for PerturbationStrategy {
    fn default() -> Self {
        PerturbationStrategy::FixedOffset { steps: -1 }
    }
}

impl PerturbationStrategy {
    pub const DEFAULT_CYCLE: [i64; 6] = [-1, 1, -2, 2, -3, 3];

    pub fn fixed(steps: i64) -> Self {
        PerturbationStrategy::FixedOffset { steps }
    }

    /// The ±1, ±2, ±3 alternation used when a fixed offset is masked.
    pub fn cyclic_default() -> Self {
        PerturbationStrategy::Cyclic { sequence: Self::DEFAULT_CYCLE.to_vec() }
    }

    pub fn cyclic(sequence: Vec<i64>) -> Result<Self, ConfigError> {
        if sequence.is_empty() {
            return Err(ConfigError::EmptyCycle);
        }
        Ok(PerturbationStrategy::Cyclic { sequence })
    }

    pub fn is_active(&self) -> bool {
        match self {
            PerturbationStrategy::NoPerturbation => false,
            PerturbationStrategy::FixedOffset { steps } => *steps != 0,
            PerturbationStrategy::Cyclic { sequence } => sequence.iter().any(|&s| s != 0),
        }
    }

    /// ULP offset applied at dynamic site `site`.
    pub fn offset_at(&self, site: usize) -> i64 {
        match self {
            PerturbationStrategy::NoPerturbation => 0,
            PerturbationStrategy::FixedOffset { steps } => *steps,
            PerturbationStrategy::Cyclic { sequence } => sequence[site % sequence.len()],
        }
    }

    /// Largest magnitude offset the strategy can inject.
    pub fn max_offset(&self) -> i64 {
        match self {
            PerturbationStrategy::NoPerturbation => 0,
            PerturbationStrategy::FixedOffset { steps } => steps.abs(),
            PerturbationStrategy::Cyclic { sequence } => {
                sequence.iter().map(|s| s.abs()).max().unwrap_or(0)
            }
        }
    }
}

impl fmt::Display for PerturbationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PerturbationStrategy::NoPerturbation => f.write_str("none"),
            PerturbationStrategy::FixedOffset { steps } => write!(f, "fixed:{steps}"),
            PerturbationStrategy::Cyclic { sequence } => {
                let parts: Vec<String> = sequence.iter().map(i64::to_string).collect();
                write!(f, "cyclic:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for PerturbationStrategy {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ConfigError::BadStrategy(s.to_string());
        let s = s.trim();
        match s {
            "none" => return Ok(PerturbationStrategy::NoPerturbation),
            "fixed" => return Ok(PerturbationStrategy::default()),
            "cyclic" => return Ok(PerturbationStrategy::cyclic_default()),
            _ => {}
        }
        if let Some(n) = s.strip_prefix("fixed:") {
            return n.trim().parse().map(PerturbationStrategy::fixed).map_err(|_| bad());
        }
        if let Some(list) = s.strip_prefix("cyclic:") {
            let seq = list
                .split(',')
                .map(|p| p.trim().parse::<i64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            return PerturbationStrategy::cyclic(seq);
        }
        Err(bad())
    }
}

/// Which site classes receive perturbations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationPolicy {
    pub perturb_op_results: bool,
    pub perturb_inputs: bool,
    pub perturb_constants: bool,
    /// Offset for input sites; independent of the strategy.
    pub input_offset_steps: i64,
}

impl Default for PerturbationPolicy {
    fn default() -> Self {
        PerturbationPolicy {
            perturb_op_results: true,
            perturb_inputs: true,
            perturb_constants: false,
            input_offset_steps: 1,
        }
    }
}

impl PerturbationPolicy {
    /// Inputs nudged by +1 ULP, operation results left exact. Among single-step
    /// configurations, only this one takes the Q0 kernel at 0.9999999999999809
    /// to 1.8984813721090177e-14, 105347359704572.0 and 16.14414209686719.
    pub fn inputs_only() -> Self {
        PerturbationPolicy { perturb_op_results: false, ..Default::default() }
    }

    pub fn results_only() -> Self {
        PerturbationPolicy { perturb_inputs: false, ..Default::default() }
    }

    pub fn validate(&self, strategy: &PerturbationStrategy) -> Result<(), ConfigError> {
        if let PerturbationStrategy::Cyclic { sequence } = strategy {
            if sequence.is_empty() {
                return Err(ConfigError::EmptyCycle);
            }
        }
        let any = self.perturb_op_results || self.perturb_inputs || self.perturb_constants;
        if *strategy != PerturbationStrategy::NoPerturbation && !any {
            return Err(ConfigError::NoSites);
        }
        Ok(())
    }
}

/// Steps `x` by the strategy's offset for `site_index`.
///
/// Non-finite values pass through unchanged, as does a step that would leave
/// the finite range.
pub fn apply_perturbation(x: f64, strategy: &PerturbationStrategy, site_index: usize) -> f64 {
    step(x, strategy.offset_at(site_index)).0
}

fn step(x: f64, k: i64) -> (f64, Option<SiteNote>) {
    if !x.is_finite() {
        return (x, Some(SiteNote::NonFinite));
    }
    match ulp::offset_by_ulps(x, k) {
        Ok(v) => (v, None),
        Err(_) => (x, Some(SiteNote::OffsetOverflow)),
    }
}

/// Evaluation context of one perturbed run: strategy, policy, the dynamic
/// site counter and the trace.
///
/// A context belongs to a single evaluation; create one per run.
#[derive(Debug, Clone)]
pub struct PerturbationContext {
    strategy: PerturbationStrategy,
    policy: PerturbationPolicy,
    next_site: usize,
    recording: bool,
    trace: Vec<TraceRecord>,
}

impl PerturbationContext {
    pub fn new(strategy: PerturbationStrategy, policy: PerturbationPolicy) -> Self {
        PerturbationContext { strategy, policy, next_site: 0, recording: true, trace: Vec::new() }
    }

    /// Disables trace recording; sites are still counted.
    pub fn without_trace(mut self) -> Self {
        self.recording = false;
        self
    }

    pub fn strategy(&self) -> &PerturbationStrategy {
        &self.strategy
    }

    pub fn policy(&self) -> &PerturbationPolicy {
        &self.policy
    }

    pub fn sites_executed(&self) -> usize {
        self.next_site
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    pub fn into_trace(self) -> Vec<TraceRecord> {
        self.trace
    }

    fn active(&self) -> bool {
        self.strategy != PerturbationStrategy::NoPerturbation
    }

    fn record(&mut self, kind: SiteKind, original: f64, perturbed: f64, cond: Vec<f64>, note: Option<SiteNote>) {
        let site_index = self.next_site;
        self.next_site += 1;
        if self.recording {
            self.trace.push(TraceRecord {
                site_index,
                kind,
                original,
                perturbed,
                ulp_diff: err_ulp(original, perturbed),
                condition_numbers: cond,
                note,
            });
        }
    }

    /// Binds a program input: one site when input perturbation is enabled.
    pub fn perturb_input(&mut self, x: f64) -> f64 {
        if !self.policy.perturb_inputs {
            return x;
        }
        let k = if self.active() { self.policy.input_offset_steps } else { 0 };
        let (v, note) = step(x, k);
        self.record(SiteKind::Input, x, v, Vec::new(), note);
        v
    }

    /// Materializes a literal: one site when constant perturbation is enabled.
    pub fn perturb_constant(&mut self, x: f64) -> f64 {
        if !self.policy.perturb_constants {
            return x;
        }
        let k = self.strategy.offset_at(self.next_site);
        let (v, note) = step(x, k);
        self.record(SiteKind::Constant, x, v, Vec::new(), note);
        v
    }

    /// Executes `op` in binary64 and perturbs its result.
    ///
    /// Every call is one site, whether or not result perturbation is enabled.
    /// Exact-zero results are left unperturbed: they carry no rounding error,
    /// and stepping them would only produce a subnormal.
    pub fn perturbed_apply(&mut self, op: AtomicOp, operands: &[f64]) -> f64 {
        assert_eq!(operands.len(), op.arity(), "{op} takes {} operands", op.arity());
        let exact = op.eval_f64(operands);
        let k = if self.policy.perturb_op_results {
            self.strategy.offset_at(self.next_site)
        } else {
            0
        };
        let (perturbed, step_note) = if exact == 0.0 && k != 0 {
            (exact, Some(SiteNote::ExactZero))
        } else {
            step(exact, k)
        };
        if !self.recording {
            self.next_site += 1;
            return perturbed;
        }
        // condition numbers are only needed for the trace
        let (cond, note) = match condition_numbers(op, operands) {
            Ok(c) if exact.is_nan() => (c, Some(SiteNote::NonFinite)),
            Ok(c) => (c, step_note),
            Err(_) => (Vec::new(), Some(SiteNote::DomainError)),
        };
        self.record(SiteKind::Op(op), exact, perturbed, cond, note);
        perturbed
    }
}

impl Arithmetic for PerturbationContext {
    type Value = f64;

    fn input(&mut self, x: f64) -> f64 {
        self.perturb_input(x)
    }

    fn constant(&mut self, x: f64) -> f64 {
        self.perturb_constant(x)
    }

    fn apply(&mut self, op: AtomicOp, args: &[f64]) -> f64 {
        self.perturbed_apply(op, args)
    }

    fn partial_cmp(&self, a: f64, b: f64) -> Option<std::cmp::Ordering> {
        a.partial_cmp(&b)
    }

    fn magnitude(&self, v: f64) -> f64 {
        v.abs()
    }

    fn to_f64(&self, v: f64) -> f64 {
        v
    }
}
