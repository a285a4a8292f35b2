//! Lexer and recursive-descent parser.
//!
//! ```text
//! program    := input_decl* stmt* expr
//! input_decl := "input" IDENT ";"
//! stmt       := "let" IDENT "=" expr ";"
//! expr       := "if" cmp "then" expr "else" expr | sum
//! cmp        := sum REL sum
//! sum        := prod (("+" | "-") prod)*
//! prod       := unary (("*" | "/") unary)*
//! unary      := "-" unary | atom
//! atom       := NUMBER | IDENT | FUNC "(" expr ("," expr)? ")" | "(" expr ")"
//! ```

use std::fmt;

use thiserror::Error;

use super::ast::{Comparison, Expr, Program, Relation};
use crate::perturb::AtomicOp;
use crate::ulp::parse_float;

const KEYWORDS: [&str; 5] = ["input", "let", "if", "then", "else"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    Arity { func: String, expected: usize, found: usize },
    UndefinedIdentifier(String),
    DuplicateBinding(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {kind}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::Syntax(msg) => write!(f, "syntax error: {msg}"),
            ParseErrorKind::Arity { func, expected, found } => {
                write!(f, "{func} takes {expected} argument(s), found {found}")
            }
            ParseErrorKind::UndefinedIdentifier(name) => write!(f, "undefined identifier `{name}`"),
            ParseErrorKind::DuplicateBinding(name) => write!(f, "`{name}` is already bound"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Ident(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Number(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    src: &'a [u8],
    at: usize,
    line: usize,
    column: usize,
}

const SYMBOLS: [&str; 15] = [
    "<=", ">=", "==", "!=", "<", ">", "=", "+", "-", "*", "/", "(", ")", ",", ";",
];

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { src: text.as_bytes(), at: 0, line: 1, column: 1 }
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, column: self.column }
    }

    fn bump(&mut self) {
        if self.src[self.at] == b'\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        self.at += 1;
    }

    fn peek_byte(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.at + ahead).copied()
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek_byte(0) {
            if c == b'#' {
                while matches!(self.peek_byte(0), Some(c) if c != b'\n') {
                    self.bump();
                }
            } else if c.is_ascii_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn error(&self, pos: Pos, msg: String) -> ParseError {
        ParseError { kind: ParseErrorKind::Syntax(msg), line: pos.line, column: pos.column }
    }

    fn tokenize(mut self) -> Result<Vec<(Tok, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia();
            let pos = self.pos();
            let Some(c) = self.peek_byte(0) else {
                out.push((Tok::Eof, pos));
                return Ok(out);
            };
            if c.is_ascii_digit() || (c == b'.' && matches!(self.peek_byte(1), Some(d) if d.is_ascii_digit())) {
                out.push((self.number(pos)?, pos));
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = self.at;
                while matches!(self.peek_byte(0), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.bump();
                }
                let word = std::str::from_utf8(&self.src[start..self.at]).expect("ascii");
                out.push((Tok::Ident(word.to_string()), pos));
            } else {
                let rest = &self.src[self.at..];
                let sym = SYMBOLS
                    .iter()
                    .find(|s| rest.starts_with(s.as_bytes()))
                    .ok_or_else(|| {
                        let ch = String::from_utf8_lossy(&rest[..utf8_len(c)]).into_owned();
                        self.error(pos, format!("unexpected character `{ch}`"))
                    })?;
                for _ in 0..sym.len() {
                    self.bump();
                }
                out.push((Tok::Sym(sym), pos));
            }
        }
    }

    fn number(&mut self, pos: Pos) -> Result<Tok, ParseError> {
        let start = self.at;
        let hex = self.peek_byte(0) == Some(b'0') && matches!(self.peek_byte(1), Some(b'x' | b'X'));
        if hex {
            self.bump();
            self.bump();
            while matches!(self.peek_byte(0), Some(c) if c.is_ascii_hexdigit() || c == b'.') {
                self.bump();
            }
            if matches!(self.peek_byte(0), Some(b'p' | b'P')) {
                self.bump();
                self.exponent_digits();
            }
        } else {
            while matches!(self.peek_byte(0), Some(c) if c.is_ascii_digit() || c == b'.') {
                self.bump();
            }
            if matches!(self.peek_byte(0), Some(b'e' | b'E')) {
                self.bump();
                self.exponent_digits();
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.at]).expect("ascii");
        match parse_float(text) {
            Some(v) if v.is_finite() => Ok(Tok::Number(v)),
            _ => Err(self.error(pos, format!("malformed number `{text}`"))),
        }
    }

    fn exponent_digits(&mut self) {
        if matches!(self.peek_byte(0), Some(b'+' | b'-')) {
            self.bump();
        }
        while matches!(self.peek_byte(0), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
    }
}

fn utf8_len(first: u8) -> usize {
    match first {
        0xF0..=0xFF => 4,
        0xE0..=0xEF => 3,
        0xC0..=0xDF => 2,
        _ => 1,
    }
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

type PResult<T> = Result<T, ParseError>;
type LetBinding = (String, Pos, Expr);
type ProgramParts = (Vec<(String, Pos)>, Vec<LetBinding>, Expr);

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: String) -> PResult<T> {
        let p = self.pos();
        Err(ParseError { kind: ParseErrorKind::Syntax(msg), line: p.line, column: p.column })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == kw)
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.is_sym(s) {
            self.advance();
            Ok(())
        } else {
            self.syntax(format!("expected `{s}`, found {}", self.peek()))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> PResult<()> {
        if self.is_keyword(kw) {
            self.advance();
            Ok(())
        } else {
            self.syntax(format!("expected `{kw}`, found {}", self.peek()))
        }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name)
                if !KEYWORDS.contains(&name.as_str()) && AtomicOp::from_name(&name).is_none() =>
            {
                self.advance();
                Ok((name, pos))
            }
            other => self.syntax(format!("expected identifier, found {other}")),
        }
    }

    fn program(&mut self) -> PResult<ProgramParts> {
        let mut inputs = Vec::new();
        while self.is_keyword("input") {
            self.advance();
            inputs.push(self.ident()?);
            self.expect_sym(";")?;
        }
        let mut lets = Vec::new();
        while self.is_keyword("let") {
            self.advance();
            let (name, pos) = self.ident()?;
            self.expect_sym("=")?;
            let bound = self.expr()?;
            self.expect_sym(";")?;
            lets.push((name, pos, bound));
        }
        let body = self.expr()?;
        if *self.peek() != Tok::Eof {
            return self.syntax(format!("unexpected {} after the result expression", self.peek()));
        }
        Ok((inputs, lets, body))
    }

    fn expr(&mut self) -> PResult<Expr> {
        if self.is_keyword("if") {
            self.advance();
            let lhs = self.sum()?;
            let relation = match self.peek() {
                Tok::Sym("<") => Relation::Lt,
                Tok::Sym(">") => Relation::Gt,
                Tok::Sym("<=") => Relation::Le,
                Tok::Sym(">=") => Relation::Ge,
                Tok::Sym("==") => Relation::Eq,
                Tok::Sym("!=") => Relation::Ne,
                other => return self.syntax(format!("expected a comparison operator, found {other}")),
            };
            self.advance();
            let rhs = self.sum()?;
            self.expect_keyword("then")?;
            let then_branch = self.expr()?;
            self.expect_keyword("else")?;
            let else_branch = self.expr()?;
            return Ok(Expr::If {
                cond: Comparison { lhs: Box::new(lhs), relation, rhs: Box::new(rhs) },
                then_branch: Box::new(then_branch),
                else_branch: Box::new(else_branch),
            });
        }
        self.sum()
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.prod()?;
        loop {
            let op = if self.is_sym("+") {
                AtomicOp::Add
            } else if self.is_sym("-") {
                AtomicOp::Sub
            } else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = self.prod()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn prod(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.is_sym("*") {
                AtomicOp::Mul
            } else if self.is_sym("/") {
                AtomicOp::Div
            } else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) };
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            self.advance();
            let arg = self.unary()?;
            return Ok(Expr::Unary { op: AtomicOp::Neg, arg: Box::new(arg) });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Number(v) => {
                self.advance();
                Ok(Expr::Literal(v))
            }
            Tok::Sym("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(func) = AtomicOp::from_name(&name).filter(|op| op.is_function()) {
                    self.advance();
                    return self.call(func, pos);
                }
                if KEYWORDS.contains(&name.as_str()) {
                    return self.syntax(format!("unexpected keyword `{name}`"));
                }
                self.advance();
                // slot resolved later, once the whole program parsed
                Ok(Expr::Var { name, slot: usize::MAX })
            }
            other => self.syntax(format!("expected an expression, found {other}")),
        }
    }

    fn call(&mut self, func: AtomicOp, pos: Pos) -> PResult<Expr> {
        self.expect_sym("(")?;
        let mut args = vec![self.expr()?];
        while self.is_sym(",") {
            self.advance();
            args.push(self.expr()?);
        }
        self.expect_sym(")")?;
        if args.len() != func.arity() {
            return Err(ParseError {
                kind: ParseErrorKind::Arity {
                    func: func.name().to_string(),
                    expected: func.arity(),
                    found: args.len(),
                },
                line: pos.line,
                column: pos.column,
            });
        }
        Ok(Expr::Call { func, args })
    }
}

/// Assigns environment slots to variable references.
fn resolve(expr: &mut Expr, scope: &mut Vec<String>) -> Result<(), String> {
    match expr {
        Expr::Literal(_) => Ok(()),
        Expr::Var { name, slot } => match scope.iter().rposition(|n| n == name) {
            Some(i) => {
                *slot = i;
                Ok(())
            }
            None => Err(name.clone()),
        },
        Expr::Unary { arg, .. } => resolve(arg, scope),
        Expr::Binary { lhs, rhs, .. } => {
            resolve(lhs, scope)?;
            resolve(rhs, scope)
        }
        Expr::Call { args, .. } => args.iter_mut().try_for_each(|a| resolve(a, scope)),
        Expr::Let { name, bound, body } => {
            resolve(bound, scope)?;
            scope.push(name.clone());
            let r = resolve(body, scope);
            scope.pop();
            r
        }
        Expr::If { cond, then_branch, else_branch } => {
            resolve(&mut cond.lhs, scope)?;
            resolve(&mut cond.rhs, scope)?;
            resolve(then_branch, scope)?;
            resolve(else_branch, scope)
        }
    }
}

pub fn parse(text: &str) -> Result<Program, ParseError> {
    let toks = Lexer::new(text).tokenize()?;
    let mut parser = Parser { toks, at: 0 };
    let (inputs, lets, body) = parser.program()?;

    let mut names: Vec<String> = Vec::new();
    let dup = |name: &str, pos: Pos| ParseError {
        kind: ParseErrorKind::DuplicateBinding(name.to_string()),
        line: pos.line,
        column: pos.column,
    };
    for (name, pos) in &inputs {
        if names.contains(name) {
            return Err(dup(name, *pos));
        }
        names.push(name.clone());
    }
    for (name, pos, _) in &lets {
        if names.contains(name) {
            return Err(dup(name, *pos));
        }
        names.push(name.clone());
    }

    let mut body = lets.into_iter().rev().fold(body, |acc, (name, _, bound)| Expr::Let {
        name,
        bound: Box::new(bound),
        body: Box::new(acc),
    });
    let mut scope: Vec<String> = inputs.iter().map(|(n, _)| n.clone()).collect();
    if let Err(name) = resolve(&mut body, &mut scope) {
        let (line, column) = locate_identifier(text, &name);
        return Err(ParseError { kind: ParseErrorKind::UndefinedIdentifier(name), line, column });
    }
    Ok(Program {
        inputs: inputs.into_iter().map(|(n, _)| n).collect(),
        body,
        source: text.to_string(),
    })
}

/// Position of the first reference to `name` that is not a declaration.
fn locate_identifier(text: &str, name: &str) -> (usize, usize) {
    let Ok(toks) = Lexer::new(text).tokenize() else {
        return (1, 1);
    };
    for (i, (tok, pos)) in toks.iter().enumerate() {
        let declared = i > 0 && matches!(&toks[i - 1].0, Tok::Ident(k) if k == "let" || k == "input");
        if matches!(tok, Tok::Ident(n) if n == name) && !declared {
            return (pos.line, pos.column);
        }
    }
    (1, 1)
}
