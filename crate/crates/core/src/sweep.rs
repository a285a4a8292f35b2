//! Neighborhood sweeps: evaluate a program on a regular grid around a center
//! input and compare the perturbation divergence with the oracle error.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{dela_outcome, oracle_outcome, Bindings, EvalError, Program};
use crate::perturb::{PerturbationPolicy, PerturbationStrategy};
use crate::stats::{self, CorrelationReport, PermutationConfig};
use crate::ulp::{format_hex, ulp_of, ulp_of_binary32, Divergence, UlpError};

/// Largest allowed ratio between the fixed grid step and a grid point's own ULP
/// (both measured in the step's format).
pub const MAX_STEP_TO_ULP_RATIO: f64 = 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloatFormat {
    #[serde(rename = "binary64")]
    Binary64,
    #[serde(rename = "binary32")]
    Binary32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UlpMultiple {
    pub format: FloatFormat,
    pub multiple: u32,
}

impl UlpMultiple {
    pub fn binary64() -> Self {
        UlpMultiple { format: FloatFormat::Binary64, multiple: 10 }
    }

    pub fn binary32() -> Self {
        UlpMultiple { format: FloatFormat::Binary32, multiple: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub center: f64,
    pub points_each_side: usize,
    pub step: UlpMultiple,
    /// Values for the program's other inputs.
    #[serde(default)]
    pub fixed_inputs: Bindings,
}

impl SweepConfig {
    /// 1000 points either side at ten binary64 ULPs of the center.
    pub fn around(center: f64) -> Self {
        SweepConfig {
            center,
            points_each_side: 1000,
            step: UlpMultiple::binary64(),
            fixed_inputs: Bindings::new(),
        }
    }

    /// Grid spacing: the center's ULP in the chosen format times the multiple.
    pub fn step_size(&self) -> Result<f64, SweepError> {
        Ok(self.unit_ulp(self.center)? * self.step.multiple as f64)
    }

    fn unit_ulp(&self, x: f64) -> Result<f64, SweepError> {
        Ok(match self.step.format {
            FloatFormat::Binary64 => ulp_of(x)?,
            FloatFormat::Binary32 => ulp_of_binary32(x)?,
        })
    }

    pub fn grid(&self) -> Result<Vec<f64>, SweepError> {
        if self.step.multiple == 0 {
            return Err(SweepError::ZeroStep);
        }
        let step = self.step_size()?;
        let n = self.points_each_side as i64;
        let points: Vec<f64> = (-n..=n).map(|i| self.center + i as f64 * step).collect();
        for &x in &points {
            if !x.is_finite() {
                return Err(SweepError::NonFiniteGrid);
            }
            let ratio = step / self.unit_ulp(x)?;
            if ratio > MAX_STEP_TO_ULP_RATIO {
                return Err(SweepError::BinadeCrossing { point: x, ratio });
            }
        }
        Ok(points)
    }
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Ulp(#[from] UlpError),
    #[error("`{0}` is not an input of the program")]
    UnknownInput(String),
    #[error("step multiple must be positive")]
    ZeroStep,
    #[error("grid leaves the finite range")]
    NonFiniteGrid,
    #[error("grid step is {ratio} ULPs at {point}; the grid crosses binades too widely")]
    BinadeCrossing { point: f64, ratio: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub input: f64,
    pub dela_err: Divergence,
    pub oracle_err: Divergence,
    pub plain_result: f64,
    pub perturbed_result: f64,
    pub oracle_result_rounded: f64,
}

/// Evaluates every grid point (in parallel; rows come back in grid order).
pub fn sweep(
    program: &Program,
    input_name: &str,
    config: &SweepConfig,
    strategy: &PerturbationStrategy,
    policy: &PerturbationPolicy,
) -> Result<Vec<SweepRow>, SweepError> {
    let slot = program
        .input_index(input_name)
        .ok_or_else(|| SweepError::UnknownInput(input_name.to_string()))?;
    let mut fixed = config.fixed_inputs.clone();
    fixed.insert(input_name.to_string(), config.center);
    let base = crate::expr::positional_inputs(program, &fixed)?;
    let grid = config.grid()?;
    grid.par_iter()
        .map(|&x| {
            let mut values = base.clone();
            values[slot] = x;
            let dela = dela_outcome(program, &values, strategy, policy)?;
            let oracle = oracle_outcome(program, &values)?;
            Ok(SweepRow {
                input: x,
                dela_err: dela.divergence,
                oracle_err: oracle.divergence,
                plain_result: dela.plain,
                perturbed_result: dela.perturbed,
                oracle_result_rounded: oracle.oracle.to_f64(),
            })
        })
        .collect()
}

/// Index of the largest perturbation divergence (first one on ties).
pub fn peak_index(rows: &[SweepRow]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in rows.iter().enumerate() {
        let v = r.dela_err.as_f64();
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Summary statistics of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: usize,
    pub peak_index: Option<usize>,
    pub peak_input: Option<f64>,
    pub peak_dela_err: Option<Divergence>,
    pub outliers: Vec<usize>,
    /// Correlation of log₁₀(1 + error) between the two detectors over rows
    /// with finite errors; `None` when undefined (e.g. constant errors).
    pub correlation: Option<CorrelationReport>,
    pub correlation_without_outliers: Option<CorrelationReport>,
}

pub fn summarize(rows: &[SweepRow], perm: PermutationConfig) -> SweepSummary {
    let peak = peak_index(rows);
    let finite: Vec<(usize, f64, f64)> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.dela_err.is_non_finite() && !r.oracle_err.is_non_finite())
        .map(|(i, r)| (i, (r.dela_err.as_f64() + 1.0).log10(), (r.oracle_err.as_f64() + 1.0).log10()))
        .collect();
    let dela: Vec<f64> = finite.iter().map(|t| t.1).collect();
    let oracle: Vec<f64> = finite.iter().map(|t| t.2).collect();
    let raw: Vec<f64> = rows.iter().map(|r| r.dela_err.as_f64()).collect();
    let outliers = stats::detect_outliers(&raw, 10.0);
    let excluded: Vec<usize> = finite
        .iter()
        .enumerate()
        .filter(|(_, t)| outliers.contains(&t.0))
        .map(|(j, _)| j)
        .collect();
    SweepSummary {
        rows: rows.len(),
        peak_index: peak,
        peak_input: peak.map(|i| rows[i].input),
        peak_dela_err: peak.map(|i| rows[i].dela_err),
        correlation: stats::correlate(&dela, &oracle, &[], perm).ok(),
        correlation_without_outliers: if excluded.is_empty() {
            None
        } else {
            stats::correlate(&dela, &oracle, &excluded, perm).ok()
        },
        outliers,
    }
}

fn divergence_field(d: Divergence) -> String {
    match d {
        Divergence::Ulps(v) => format!("{v:?}"),
        Divergence::NonFinite => "non-finite".into(),
    }
}

/// Plot-ready CSV, one row per grid point.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["input_hex", "input", "dela_err", "oracle_err", "plain", "perturbed", "oracle"])?;
    for r in rows {
        w.write_record([
            format_hex(r.input),
            format!("{:?}", r.input),
            divergence_field(r.dela_err),
            divergence_field(r.oracle_err),
            format!("{:?}", r.plain_result),
            format!("{:?}", r.perturbed_result),
            format!("{:?}", r.oracle_result_rounded),
        ])?;
    }
    w.flush()?;
    Ok(())
}
