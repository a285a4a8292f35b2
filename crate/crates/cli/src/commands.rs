use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use ulpscope::corpus;
use ulpscope::expr::{compare_results, evaluate_values, first_branch_flip, oracle_outcome, positional_inputs};
use ulpscope::linalg::{bench_linear_systems, write_bench_csv, BenchConfig};
use ulpscope::perturb::write_trace_csv;
use ulpscope::stats::{is_significant, relative_divergence, CorrelationReport, PermutationConfig};
use ulpscope::sweep::{summarize, sweep, write_sweep_csv, SweepConfig, SweepRow, SweepSummary};
use ulpscope::ulp::format_hex;
use ulpscope::{parse, Bindings, Divergence, EvalBackend, Program};

use crate::config::{CommandKind, OutputFormat, RunConfig};

/// Whether a run found a significant error; maps to exit status 0 or 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Finding {
    Clean,
    Significant,
}

impl Finding {
    fn from_flag(significant: bool) -> Self {
        if significant {
            Finding::Significant
        } else {
            Finding::Clean
        }
    }
}

pub fn run(config: &RunConfig, out: &mut dyn Write) -> Result<Finding> {
    config.policy().validate(&config.strategy)?;
    match config.command {
        CommandKind::Eval => cmd_eval(config, out),
        CommandKind::Detect => cmd_detect(config, out),
        CommandKind::Trace => cmd_trace(config, out),
        CommandKind::Sweep => cmd_sweep(config, out),
        CommandKind::Linsys => cmd_linsys(config, out),
    }
}

fn load_program(config: &RunConfig) -> Result<Program> {
    let path = config.program_path.as_deref().ok_or_else(|| anyhow!("no program given"))?;
    let source = match path.strip_prefix("corpus:") {
        Some(name) => corpus::find(name).ok_or_else(|| anyhow!("no bundled program named `{name}`"))?.source.to_string(),
        None => fs::read_to_string(path).with_context(|| format!("cannot read {path}"))?,
    };
    parse(&source).map_err(|e| anyhow!("{path}:{e}"))
}

fn load_with_inputs(config: &RunConfig) -> Result<(Program, Vec<f64>)> {
    let program = load_program(config)?;
    let values = positional_inputs(&program, &config.bindings)?;
    Ok((program, values))
}

fn perturbed_backend(config: &RunConfig) -> EvalBackend {
    EvalBackend::Perturbed { strategy: config.strategy.clone(), policy: config.policy() }
}

fn show_divergence(d: Divergence) -> String {
    match d {
        Divergence::Ulps(0.0) => "0 ULPs".into(),
        Divergence::Ulps(v) => format!("{v:.4e} ULPs"),
        Divergence::NonFinite => "non-finite".into(),
    }
}

fn show_value(x: f64) -> String {
    format!("{x:?} ({})", format_hex(x))
}

fn cmd_eval(config: &RunConfig, out: &mut dyn Write) -> Result<Finding> {
    let (program, values) = load_with_inputs(config)?;
    let plain = evaluate_values(&program, &values, &EvalBackend::Plain, false)?;
    let perturbed = evaluate_values(&program, &values, &perturbed_backend(config), false)?;
    let oracle = oracle_outcome(&program, &values)?;
    let dela = compare_results(plain.result, perturbed.result);
    writeln!(out, "plain       {}", show_value(plain.result))?;
    writeln!(out, "perturbed   {}", show_value(perturbed.result))?;
    writeln!(out, "oracle      {}", show_value(oracle.oracle.to_f64()))?;
    writeln!(out, "dela_err    {}", show_divergence(dela))?;
    writeln!(out, "oracle_err  {}", show_divergence(oracle.divergence))?;
    if let Some(k) = first_branch_flip(&plain.branches, &perturbed.branches) {
        writeln!(out, "branch flip at conditional {k}")?;
    }
    Ok(Finding::Clean)
}

fn cmd_detect(config: &RunConfig, out: &mut dyn Write) -> Result<Finding> {
    let (program, values) = load_with_inputs(config)?;
    let plain = evaluate_values(&program, &values, &EvalBackend::Plain, false)?.result;
    let run = evaluate_values(&program, &values, &perturbed_backend(config), true)?;
    let relative = relative_divergence(plain, run.result);
    let divergence = compare_results(plain, run.result);
    let significant = is_significant(relative, divergence);
    let verdict = if significant { "SIGNIFICANT" } else { "not significant" };
    writeln!(out, "{verdict}: relative divergence {relative:e}, {}", show_divergence(divergence))?;
    if significant {
        let worst = run
            .trace
            .iter()
            .filter(|r| r.max_condition_number().is_some_and(|c| !c.is_nan()))
            .max_by(|a, b| a.max_condition_number().unwrap().total_cmp(&b.max_condition_number().unwrap()));
        if let Some(row) = worst {
            writeln!(out, "largest amplification:")?;
            write_trace_csv(std::slice::from_ref(row), &mut *out)?;
        }
    }
    Ok(Finding::from_flag(significant))
}

fn cmd_trace(config: &RunConfig, out: &mut dyn Write) -> Result<Finding> {
    let (program, values) = load_with_inputs(config)?;
    let run = evaluate_values(&program, &values, &perturbed_backend(config), true)?;
    write_output(config, out, |out, format| match format {
        OutputFormat::Csv => Ok(write_trace_csv(&run.trace, out)?),
        OutputFormat::Json => Ok(serde_json::to_writer_pretty(out, &run.trace)?),
    })?;
    Ok(Finding::Clean)
}

#[derive(Serialize)]
struct SweepDocument<'a> {
    summary: &'a SweepSummary,
    rows: &'a [SweepRow],
}

fn cmd_sweep(config: &RunConfig, out: &mut dyn Write) -> Result<Finding> {
    let program = load_program(config)?;
    let input = match &config.sweep.input {
        Some(name) => name.clone(),
        None if program.inputs.len() == 1 => program.inputs[0].clone(),
        None => bail!("the program has {} inputs; choose one with --input", program.inputs.len()),
    };
    let mut fixed: Bindings = config.bindings.clone();
    let center = fixed.remove(&input).ok_or_else(|| anyhow!("bind `{input}=VALUE` to set the sweep center"))?;
    let sweep_config = SweepConfig {
        center,
        points_each_side: config.sweep.points,
        step: config.sweep.step(),
        fixed_inputs: fixed,
    };
    let rows = sweep(&program, &input, &sweep_config, &config.strategy, &config.policy())?;
    let summary = summarize(&rows, PermutationConfig { rounds: config.permutation_rounds, seed: config.seed });
    write_output(config, out, |out, format| match format {
        OutputFormat::Csv => Ok(write_sweep_csv(&rows, out)?),
        OutputFormat::Json => Ok(serde_json::to_writer_pretty(out, &SweepDocument { summary: &summary, rows: &rows })?),
    })?;
    let mut lines = vec![format!("{} points", summary.rows)];
    if let (Some(i), Some(x), Some(e)) = (summary.peak_index, summary.peak_input, summary.peak_dela_err) {
        lines.push(format!("peak at index {i}, input {x:?}, dela_err {}", show_divergence(e)));
    }
    lines.push(format!("{} outliers", summary.outliers.len()));
    lines.push(correlation_line("log dela_err vs oracle_err", summary.correlation.as_ref()));
    lines.push(correlation_line("without outliers", summary.correlation_without_outliers.as_ref()));
    report(config, out, &lines)?;
    let significant = rows
        .iter()
        .any(|r| is_significant(relative_divergence(r.plain_result, r.perturbed_result), r.dela_err));
    Ok(Finding::from_flag(significant))
}

fn cmd_linsys(config: &RunConfig, out: &mut dyn Write) -> Result<Finding> {
    let bench = BenchConfig {
        count: config.linsys.count,
        dim: config.linsys.dim,
        kappa_min: config.linsys.kappa_min,
        kappa_max: config.linsys.kappa_max,
        seed: config.seed,
        strategy: config.strategy.clone(),
        policy: config.policy(),
        permutation_rounds: config.permutation_rounds,
    };
    let report_data = bench_linear_systems(&bench)?;
    write_output(config, out, |out, format| match format {
        OutputFormat::Csv => Ok(write_bench_csv(&report_data, out)?),
        OutputFormat::Json => Ok(serde_json::to_writer_pretty(out, &report_data)?),
    })?;
    let significant = report_data.cases.iter().filter(|c| c.significant).count();
    let lines = vec![
        format!("{} systems of dimension {}", report_data.cases.len(), bench.dim),
        format!("{significant} significant, {} singular", report_data.singular.len()),
        correlation_line("log dela_err vs oracle_err", report_data.dela_vs_oracle.as_ref()),
        correlation_line("raw dela_err vs oracle_err", report_data.dela_vs_oracle_raw.as_ref()),
        correlation_line("log kappa vs dela_err", report_data.kappa_vs_dela.as_ref()),
    ];
    report(config, out, &lines)?;
    Ok(Finding::from_flag(significant > 0))
}

fn correlation_line(label: &str, c: Option<&CorrelationReport>) -> String {
    match c {
        Some(c) => format!(
            "{label}: pearson {:.4} (p = {:.3e}), spearman {:.4} (p = {:.3e}), n = {}",
            c.pearson_r, c.p_pearson, c.spearman_rho, c.p_spearman, c.n
        ),
        None => format!("{label}: undefined"),
    }
}

/// Summaries go to standard output unless the data already does.
fn report(config: &RunConfig, out: &mut dyn Write, lines: &[String]) -> io::Result<()> {
    for line in lines {
        if config.out.is_some() {
            writeln!(out, "{line}")?;
        } else {
            eprintln!("{line}");
        }
    }
    Ok(())
}

/// Writes to `--out` through a temporary file in the same directory, so a
/// failed run never leaves a partial file behind.
fn write_output(
    config: &RunConfig,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write, OutputFormat) -> Result<()>,
) -> Result<()> {
    let format = config.output_format();
    match &config.out {
        None => {
            body(stdout, format)?;
            stdout.flush()?;
        }
        Some(path) => {
            let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
            let mut out = BufWriter::new(tmp);
            body(&mut out, format)?;
            let tmp = out.into_inner().map_err(|e| e.into_error())?;
            tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
        }
    }
    Ok(())
}
