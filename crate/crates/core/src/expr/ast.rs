use std::fmt;

use crate::perturb::AtomicOp;
use crate::ulp::format_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Gt => ">",
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "==",
            Relation::Ne => "!=",
        }
    }

    /// Unordered operands (NaN) satisfy only `!=`.
    pub fn holds(self, ord: Option<std::cmp::Ordering>) -> bool {
        use std::cmp::Ordering::*;
        match (self, ord) {
            (Relation::Ne, None) => true,
            (_, None) => false,
            (Relation::Lt, Some(o)) => o == Less,
            (Relation::Gt, Some(o)) => o == Greater,
            (Relation::Le, Some(o)) => o != Greater,
            (Relation::Ge, Some(o)) => o != Less,
            (Relation::Eq, Some(o)) => o == Equal,
            (Relation::Ne, Some(o)) => o != Equal,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub lhs: Box<Expr>,
    pub relation: Relation,
    pub rhs: Box<Expr>,
}

/// Expression tree. `Var::slot` is the binding's position in the evaluation
/// environment (inputs first, then enclosing `let`s), filled in by the
/// resolver.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(f64),
    Var { name: String, slot: usize },
    Unary { op: AtomicOp, arg: Box<Expr> },
    Binary { op: AtomicOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { func: AtomicOp, args: Vec<Expr> },
    Let { name: String, bound: Box<Expr>, body: Box<Expr> },
    If { cond: Comparison, then_branch: Box<Expr>, else_branch: Box<Expr> },
}

/// A parsed program: declared inputs, body and the source it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub inputs: Vec<String>,
    pub body: Expr,
    pub source: String,
}

impl Program {
    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|n| n == name)
    }

    /// Structural equality ignoring the source text.
    pub fn same_structure(&self, other: &Program) -> bool {
        self.inputs == other.inputs && self.body == other.body
    }
}

fn write_literal(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v.is_sign_negative() || !v.is_finite() {
        // not expressible as a single literal token
        return write!(f, "{}", format_hex(v));
    }
    let shortest = format!("{v:?}");
    if shortest.parse::<f64>().map(f64::to_bits) == Ok(v.to_bits()) {
        f.write_str(&shortest)
    } else {
        f.write_str(&format_hex(v))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Literal(v) => write_literal(f, *v),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Unary { arg, .. } => write!(f, "-({arg})"),
            Expr::Binary { op, lhs, rhs } => {
                let sym = match op {
                    AtomicOp::Add => "+",
                    AtomicOp::Sub => "-",
                    AtomicOp::Mul => "*",
                    _ => "/",
                };
                write!(f, "({lhs} {sym} {rhs})")
            }
            Expr::Call { func, args } => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Expr::Let { name, bound, body } => write!(f, "let {name} = {bound};\n{body}"),
            Expr::If { cond, then_branch, else_branch } => write!(
                f,
                "(if {} {} {} then {then_branch} else {else_branch})",
                cond.lhs,
                cond.relation.symbol(),
                cond.rhs
            ),
        }
    }
}

/// Prints source that re-parses to the same tree, provided `let`s appear only
/// as the top-level statement chain (which is all the parser produces).
impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for name in &self.inputs {
            writeln!(f, "input {name};")?;
        }
        write!(f, "{}", self.body)
    }
}
