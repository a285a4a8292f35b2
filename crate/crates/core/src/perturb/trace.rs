use std::fmt;
use std::io::{Read, Write};

use serde::Serialize;

use super::AtomicOp;
use crate::ulp::{err_ulp, format_hex, parse_float, Divergence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Input,
    Constant,
    Op(AtomicOp),
}

impl SiteKind {
    pub fn label(&self) -> &'static str {
        match self {
            SiteKind::Input => "input",
            SiteKind::Constant => "constant",
            SiteKind::Op(op) => op.name(),
        }
    }

    fn from_label(label: &str) -> Option<SiteKind> {
        match label {
            "input" => Some(SiteKind::Input),
            "constant" => Some(SiteKind::Constant),
            other => AtomicOp::from_name(other).map(SiteKind::Op),
        }
    }
}

impl fmt::Display for SiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Why a site's value was not stepped as requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteNote {
    /// The operands fall outside the operation's mathematical domain.
    DomainError,
    /// NaN or infinite value; passed through unperturbed.
    NonFinite,
    /// Stepping would leave the finite range; value kept.
    OffsetOverflow,
    /// Exact zero result; kept.
    ExactZero,
}

/// One dynamic perturbation site.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub site_index: usize,
    pub kind: SiteKind,
    pub original: f64,
    pub perturbed: f64,
    pub ulp_diff: Divergence,
    pub condition_numbers: Vec<f64>,
    pub note: Option<SiteNote>,
}

impl TraceRecord {
    pub fn max_condition_number(&self) -> Option<f64> {
        self.condition_numbers.iter().copied().reduce(f64::max)
    }
}

const TRACE_HEADER: [&str; 6] =
    ["site_index", "op", "original", "perturbed", "ulp_diff", "max_condition_number"];

fn format_divergence(d: Divergence) -> String {
    match d {
        Divergence::Ulps(v) => format!("{v:?}"),
        Divergence::NonFinite => "non-finite".into(),
    }
}

/// Writes the trace as CSV. Values are hex floats so they round-trip exactly.
pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.site_index.to_string(),
            r.kind.label().to_string(),
            format_hex(r.original),
            format_hex(r.perturbed),
            format_divergence(r.ulp_diff),
            r.max_condition_number().map(|c| format!("{c:?}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A trace CSV row read back; condition numbers survive only as their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCsvRow {
    pub site_index: usize,
    pub kind: SiteKind,
    pub original: f64,
    pub perturbed: f64,
    pub ulp_diff: Divergence,
    pub max_condition_number: Option<f64>,
}

fn parse_special(text: &str) -> Option<f64> {
    match text {
        "nan" => Some(f64::NAN),
        "-nan" => Some(-f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        other => parse_float(other),
    }
}

pub fn read_trace_csv<R: Read>(input: R) -> Result<Vec<TraceCsvRow>, String> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |col: &str| format!("row {}: bad {col}", line + 1);
        let field = |i: usize| rec.get(i).unwrap_or("");
        let site_index = field(0).parse().map_err(|_| bad("site_index"))?;
        let kind = SiteKind::from_label(field(1)).ok_or_else(|| bad("op"))?;
        let original = parse_special(field(2)).ok_or_else(|| bad("original"))?;
        let perturbed = parse_special(field(3)).ok_or_else(|| bad("perturbed"))?;
        let ulp_diff = match field(4) {
            "non-finite" => Divergence::NonFinite,
            v => Divergence::Ulps(parse_special(v).ok_or_else(|| bad("ulp_diff"))?),
        };
        let max_condition_number = match field(5) {
            "" => None,
            v => Some(parse_special(v).ok_or_else(|| bad("max_condition_number"))?),
        };
        rows.push(TraceCsvRow { site_index, kind, original, perturbed, ulp_diff, max_condition_number });
    }
    Ok(rows)
}

/// A plain-run operation paired with its perturbed-run counterpart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignedSite {
    pub ordinal: usize,
    pub op: AtomicOp,
    pub plain: f64,
    pub perturbed: f64,
    /// ULP divergence of the perturbed value against the plain one.
    pub divergence: Divergence,
    pub max_condition_number: Option<f64>,
}

/// Pairs the operation sites of two runs in execution order. Pairing stops at
/// the first operation mismatch (the runs took different branches).
pub fn align_traces(plain: &[TraceRecord], perturbed: &[TraceRecord]) -> Vec<AlignedSite> {
    let ops = |t: &[TraceRecord]| -> Vec<(AtomicOp, TraceRecord)> {
        t.iter()
            .filter_map(|r| match r.kind {
                SiteKind::Op(op) => Some((op, r.clone())),
                _ => None,
            })
            .collect()
    };
    ops(plain)
        .into_iter()
        .zip(ops(perturbed))
        .take_while(|((a, _), (b, _))| a == b)
        .enumerate()
        .map(|(ordinal, ((op, p), (_, q)))| AlignedSite {
            ordinal,
            op,
            plain: p.perturbed,
            perturbed: q.perturbed,
            divergence: err_ulp(p.perturbed, q.perturbed),
            max_condition_number: q.max_condition_number(),
        })
        .collect()
}
