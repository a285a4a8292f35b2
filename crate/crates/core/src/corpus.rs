//! Bundled example programs with representative inputs.

use crate::expr::{bindings, parse, Bindings, ParseError, Program};

#[derive(Debug, Clone, Copy)]
pub struct CorpusEntry {
    pub name: &'static str,
    pub source: &'static str,
    /// An input that exercises the program's interesting region.
    pub sample: &'static [(&'static str, f64)],
    /// Whether the program is a catastrophic-cancellation kernel at `sample`.
    pub cancellation: bool,
}

impl CorpusEntry {
    pub fn program(&self) -> Result<Program, ParseError> {
        parse(self.source)
    }

    pub fn bindings(&self) -> Bindings {
        bindings(self.sample.iter().copied())
    }
}

macro_rules! entry {
    ($name:literal, [$(($var:literal, $val:expr)),*], $cancel:expr) => {
        CorpusEntry {
            name: $name,
            source: include_str!(concat!("../corpus/", $name, ".expr")),
            sample: &[$(($var, $val)),*],
            cancellation: $cancel,
        }
    };
}

pub const CORPUS: &[CorpusEntry] = &[
    entry!("legendre_q0_kernel", [("x", 0.9999999999999809)], true),
    entry!("legendre_q0", [("x", 0.9999999999999809)], true),
    entry!("sterbenz", [], false),
    entry!("masking_twin", [("a", 1.7)], true),
    entry!("branch_flip", [("x", 1.0)], false),
    entry!("one_minus_cos", [("x", 1e-7)], true),
    entry!("expm1_naive", [("x", 1e-10)], true),
    entry!("sqrt_difference", [("x", 1e12)], true),
    entry!("log1p_naive", [("x", 1e-12)], true),
    entry!("quadratic_root", [("a", 1.0), ("b", 1e8), ("c", 1.0)], true),
    entry!("sin_near_pi", [("x", std::f64::consts::PI)], true),
    entry!("compound_growth", [("r", 1e-9)], false),
    entry!("decibel", [("p", 0.0010000001)], true),
    entry!("hyperbolic_difference", [("x", 20.0)], true),
    entry!("tan_near_half_pi", [("x", std::f64::consts::FRAC_PI_2)], false),
    entry!("arc_sum", [("x", 0.9999999)], false),
    entry!("relative_gap", [("x", 1.0000001), ("y", 1.0)], true),
    entry!("lambert_w0_halley1", [("x", 1.0)], false),
    entry!("lambert_w0_halley6", [("x", 1.0)], false),
];

pub fn find(name: &str) -> Option<&'static CorpusEntry> {
    CORPUS.iter().find(|e| e.name == name)
}
