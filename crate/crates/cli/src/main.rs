//! Command-line front end: evaluate programs under perturbation, sweep
//! inputs, and run the linear-system benchmark.
//!
//! Exit status: 0 when no significant error was found, 1 when one was, and 2
//! on usage or input errors.

mod commands;
mod config;

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, ValueEnum};
use ulpscope::ulp::parse_float;
use ulpscope::PerturbationStrategy;

use commands::Finding;
use config::{CommandKind, OutputFormat, RunConfig, StepFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

impl From<Switch> for bool {
    fn from(s: Switch) -> bool {
        s == Switch::On
    }
}

#[derive(Debug, Parser)]
#[command(name = "ulpscope", version, about = "Detect floating-point errors by perturbing atomic operations")]
struct Cli {
    /// Command to run; may come from --config instead.
    #[arg(value_enum)]
    command: Option<CommandKind>,

    /// Program file, or corpus:NAME for a bundled one (not used by linsys).
    program: Option<String>,

    /// Input bindings as NAME=VALUE; decimal or hex-float values.
    bindings: Vec<String>,

    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,

    /// none, fixed:N or cyclic[:N,N,...] [default: fixed:-1]
    #[arg(long)]
    strategy: Option<PerturbationStrategy>,

    /// Perturb operation results [default: on]
    #[arg(long, value_enum)]
    perturb_results: Option<Switch>,

    /// Perturb program inputs by +1 ULP [default: on]
    #[arg(long, value_enum)]
    perturb_inputs: Option<Switch>,

    /// Perturb literal constants [default: off]
    #[arg(long, value_enum)]
    perturb_constants: Option<Switch>,

    /// Input to sweep (sweep only; defaults to the only input)
    #[arg(long)]
    input: Option<String>,

    /// Grid points on each side of the center [default: 1000]
    #[arg(long)]
    points: Option<usize>,

    /// Grid step in ULPs of the center [default: 10 for 64, 1 for 32]
    #[arg(long)]
    step_ulps: Option<u32>,

    /// Format whose ULP sets the grid step [default: 64]
    #[arg(long, value_enum)]
    step_format: Option<StepFormat>,

    /// Output file [default: standard output]
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format [default: csv, json for linsys]
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,

    /// Seed for matrix generation and permutation tests [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Permutation rounds for correlation p-values [default: 10000]
    #[arg(long)]
    permutations: Option<usize>,

    /// Smallest condition number (linsys) [default: 1e1]
    #[arg(long)]
    kappa_min: Option<f64>,

    /// Largest condition number (linsys) [default: 1e12]
    #[arg(long)]
    kappa_max: Option<f64>,

    /// Matrix dimension (linsys) [default: 50]
    #[arg(long)]
    dim: Option<usize>,

    /// Number of systems (linsys) [default: 100]
    #[arg(long)]
    count: Option<usize>,
}

fn parse_binding(text: &str) -> Result<(String, f64)> {
    let (name, value) = text.split_once('=').ok_or_else(|| anyhow!("binding `{text}` is not NAME=VALUE"))?;
    let v = parse_float(value).ok_or_else(|| anyhow!("`{value}` is not a number"))?;
    if !v.is_finite() {
        bail!("input `{name}` must be finite");
    }
    Ok((name.trim().to_string(), v))
}

fn build_config(cli: Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("invalid configuration in {}", path.display()))?
        }
        None => RunConfig::default(),
    };
    match cli.command {
        Some(cmd) => c.command = cmd,
        None if cli.config.is_none() => bail!("no command given (eval, detect, trace, sweep or linsys)"),
        None => {}
    }
    // linsys takes no program, so a stray positional is a binding mistake
    let mut positional: Vec<String> = cli.program.into_iter().chain(cli.bindings).collect();
    if c.command != CommandKind::Linsys && !positional.is_empty() && !positional[0].contains('=') {
        c.program_path = Some(positional.remove(0));
    }
    for text in &positional {
        if c.command == CommandKind::Linsys {
            bail!("linsys takes no program or bindings (got `{text}`)");
        }
        let (name, v) = parse_binding(text)?;
        c.bindings.insert(name, v);
    }
    if let Some(s) = cli.strategy {
        c.strategy = s;
    }
    if let Some(v) = cli.perturb_results {
        c.perturb_results = v.into();
    }
    if let Some(v) = cli.perturb_inputs {
        c.perturb_inputs = v.into();
    }
    if let Some(v) = cli.perturb_constants {
        c.perturb_constants = v.into();
    }
    c.sweep.input = cli.input.or(c.sweep.input);
    c.sweep.points = cli.points.unwrap_or(c.sweep.points);
    c.sweep.step_ulps = cli.step_ulps.or(c.sweep.step_ulps);
    c.sweep.step_format = cli.step_format.unwrap_or(c.sweep.step_format);
    c.out = cli.out.or(c.out);
    c.format = cli.format.or(c.format);
    c.seed = cli.seed.unwrap_or(c.seed);
    c.permutation_rounds = cli.permutations.unwrap_or(c.permutation_rounds);
    c.linsys.kappa_min = cli.kappa_min.unwrap_or(c.linsys.kappa_min);
    c.linsys.kappa_max = cli.kappa_max.unwrap_or(c.linsys.kappa_max);
    c.linsys.dim = cli.dim.unwrap_or(c.linsys.dim);
    c.linsys.count = cli.count.unwrap_or(c.linsys.count);
    Ok(c)
}

/// Standard output that goes quiet once the reader hangs up (`| head`), so
/// the run still finishes with its real exit status.
struct QuietPipe<W> {
    inner: W,
    closed: bool,
}

impl<W: Write> QuietPipe<W> {
    fn guard<T>(&mut self, result: io::Result<T>, fallback: T) -> io::Result<T> {
        match result {
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {
                self.closed = true;
                Ok(fallback)
            }
            other => other,
        }
    }
}

impl<W: Write> Write for QuietPipe<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        if self.closed {
            return Ok(buf.len());
        }
        let r = self.inner.write(buf);
        self.guard(r, buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        if self.closed {
            return Ok(());
        }
        let r = self.inner.flush();
        self.guard(r, ())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let dump = cli.dump_config;
    let mut out = QuietPipe { inner: io::stdout().lock(), closed: false };
    let result = build_config(cli).and_then(|config| {
        if dump {
            writeln!(out, "{}", serde_json::to_string_pretty(&config)?)?;
            return Ok(Finding::Clean);
        }
        let finding = commands::run(&config, &mut out)?;
        out.flush()?;
        Ok(finding)
    });
    match result {
        Ok(Finding::Clean) => ExitCode::SUCCESS,
        Ok(Finding::Significant) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
