//! The run configuration: every setting the CLI accepts, with defaults, in a
//! form that round-trips through JSON.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use ulpscope::sweep::UlpMultiple;
use ulpscope::{PerturbationPolicy, PerturbationStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    /// Plain, perturbed and oracle results with both error measures.
    #[default]
    Eval,
    /// Classifies the divergence; exit status 1 when significant.
    Detect,
    /// Writes the perturbed run's per-site trace.
    Trace,
    /// Evaluates a grid of inputs around a center point.
    Sweep,
    /// Runs the random linear-system benchmark.
    Linsys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum StepFormat {
    #[serde(rename = "64")]
    #[value(name = "64")]
    Binary64,
    #[serde(rename = "32")]
    #[value(name = "32")]
    Binary32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    /// Swept input; may be omitted for single-input programs.
    pub input: Option<String>,
    pub points: usize,
    /// Step in ULPs of the center; 10 for binary64 and 1 for binary32 when unset.
    pub step_ulps: Option<u32>,
    pub step_format: StepFormat,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams { input: None, points: 1000, step_ulps: None, step_format: StepFormat::Binary64 }
    }
}

impl SweepParams {
    pub fn step(&self) -> UlpMultiple {
        let base = match self.step_format {
            StepFormat::Binary64 => UlpMultiple::binary64(),
            StepFormat::Binary32 => UlpMultiple::binary32(),
        };
        UlpMultiple { multiple: self.step_ulps.unwrap_or(base.multiple), ..base }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinsysParams {
    pub count: usize,
    pub dim: usize,
    pub kappa_min: f64,
    pub kappa_max: f64,
}

impl Default for LinsysParams {
    fn default() -> Self {
        LinsysParams { count: 100, dim: 50, kappa_min: 1e1, kappa_max: 1e12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    /// A file path, or `corpus:NAME` for a bundled program.
    pub program_path: Option<String>,
    pub bindings: BTreeMap<String, f64>,
    #[serde(with = "strategy_text")]
    pub strategy: PerturbationStrategy,
    pub perturb_results: bool,
    pub perturb_inputs: bool,
    pub perturb_constants: bool,
    pub sweep: SweepParams,
    pub linsys: LinsysParams,
    pub permutation_rounds: usize,
    /// Output file; standard output when unset.
    pub out: Option<PathBuf>,
    /// csv for trace and sweep, json for linsys when unset.
    pub format: Option<OutputFormat>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let policy = PerturbationPolicy::default();
        RunConfig {
            command: CommandKind::Eval,
            program_path: None,
            bindings: BTreeMap::new(),
            strategy: PerturbationStrategy::default(),
            perturb_results: policy.perturb_op_results,
            perturb_inputs: policy.perturb_inputs,
            perturb_constants: policy.perturb_constants,
            sweep: SweepParams::default(),
            linsys: LinsysParams::default(),
            permutation_rounds: ulpscope::stats::DEFAULT_PERMUTATION_ROUNDS,
            out: None,
            format: None,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn policy(&self) -> PerturbationPolicy {
        PerturbationPolicy {
            perturb_op_results: self.perturb_results,
            perturb_inputs: self.perturb_inputs,
            perturb_constants: self.perturb_constants,
            ..PerturbationPolicy::default()
        }
    }

    pub fn output_format(&self) -> OutputFormat {
        self.format.unwrap_or(match self.command {
            CommandKind::Linsys => OutputFormat::Json,
            _ => OutputFormat::Csv,
        })
    }
}

/// Strategies are stored in their command-line spelling (`fixed:-1`).
mod strategy_text {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};
    use ulpscope::PerturbationStrategy;

    pub fn serialize<S: Serializer>(s: &PerturbationStrategy, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_str(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<PerturbationStrategy, D::Error> {
        let text = String::deserialize(de)?;
        text.parse().map_err(D::Error::custom)
    }
}
