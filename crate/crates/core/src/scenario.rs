//! Scenario files: a small sectioned key-value format describing a linear
//! system, a perturbation, their certificates, probe points and tolerances.
//!
//! ```text
//! name = jiang
//!
//! [linear]
//! A = -1
//!
//! [perturbation]
//! f = jiang_arctan(0.2)
//!
//! [constants]
//! K = 1
//! alpha = 1
//! M = 1
//! gamma = 0.2
//! mu = pi/5
//! r = 1
//!
//! [probes]
//! times = [0, 1, 5, 10, 50]
//! states = lattice(-2, 2, 32)
//! ```
//!
//! Values are arithmetic expressions over numbers, `pi`, `e` and
//! `sqrt/exp/ln/sin/cos/tanh`, vectors `[a, b]`, matrices `[[a, b], [c, d]]`,
//! or built-ins with arguments. Brackets may span lines; `#` starts a comment.

use std::path::Path;

use nalgebra::DMatrix;

use crate::conjugacy::PicardConfig;
use crate::error::{Error, Result};
use crate::linear::{CoefficientMatrix, LinearSystem, ScalarFn};
use crate::nonlinear::{Builtin, ConjugacyProblem, Perturbation};
use crate::ode::IntegratorConfig;
use crate::report::{anchors, ReportEntry};
use crate::stability::QForm;
use crate::tolerances::Tolerances;

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Samples drawn when the perturbation certificate is falsified at load.
pub const CERTIFICATE_SAMPLES: usize = 512;

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Str(String),
    LBrack,
    RBrack,
    LParen,
    RParen,
    Comma,
    Eq,
    Plus,
    Minus,
    Star,
    Slash,
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    // newlines inside brackets or parentheses continue the current value
    let mut depth = 0i32;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let push = |out: &mut Vec<Token>, tok| {
            out.push(Token {
                tok,
                line: l0,
                col: c0,
            })
        };
        match c {
            '\n' => {
                if depth == 0 {
                    push(&mut out, Tok::Newline);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            c if c.is_whitespace() => {}
            '[' | '(' => {
                depth += 1;
                push(&mut out, if c == '[' { Tok::LBrack } else { Tok::LParen });
            }
            ']' | ')' => {
                depth -= 1;
                push(&mut out, if c == ']' { Tok::RBrack } else { Tok::RParen });
            }
            ',' => push(&mut out, Tok::Comma),
            '=' => push(&mut out, Tok::Eq),
            '+' => push(&mut out, Tok::Plus),
            '-' => push(&mut out, Tok::Minus),
            '*' => push(&mut out, Tok::Star),
            '/' => push(&mut out, Tok::Slash),
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    return Err(parse_error(l0, c0, "unterminated string"));
                }
                push(&mut out, Tok::Str(chars[start..j].iter().collect()));
                col += j + 1 - i;
                i = j + 1;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_digit() || chars[j] == '.') {
                    j += 1;
                }
                if j < chars.len() && (chars[j] == 'e' || chars[j] == 'E') {
                    let mut k = j + 1;
                    if k < chars.len() && (chars[k] == '+' || chars[k] == '-') {
                        k += 1;
                    }
                    if k < chars.len() && chars[k].is_ascii_digit() {
                        while k < chars.len() && chars[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v = s
                    .parse::<f64>()
                    .map_err(|_| parse_error(l0, c0, format!("malformed number '{s}'")))?;
                push(&mut out, Tok::Num(v));
                col += j - i;
                i = j;
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                push(&mut out, Tok::Ident(chars[i..j].iter().collect()));
                col += j - i;
                i = j;
                continue;
            }
            other => {
                return Err(parse_error(
                    l0,
                    c0,
                    format!("unexpected character '{other}'"),
                ))
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Token {
        tok: Tok::Newline,
        line,
        col,
    });
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

// ---------------------------------------------------------------- values

/// A parsed right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    Ident(String),
    List(Vec<Spanned>),
    Call { name: String, args: Vec<Spanned> },
}

/// A value with the position where it starts.
#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub value: Value,
    pub line: usize,
    pub col: usize,
}

impl Spanned {
    fn err(&self, message: impl Into<String>) -> Error {
        parse_error(self.line, self.col, message)
    }

    pub fn as_num(&self) -> Result<f64> {
        match self.value {
            Value::Num(v) => Ok(v),
            _ => Err(self.err("expected a number")),
        }
    }

    pub fn as_bool(&self) -> Result<bool> {
        match self.value {
            Value::Bool(b) => Ok(b),
            _ => Err(self.err("expected true or false")),
        }
    }

    pub fn as_vec(&self) -> Result<Vec<f64>> {
        match &self.value {
            Value::List(items) => items.iter().map(Spanned::as_num).collect(),
            _ => Err(self.err("expected a vector [a, b, ...]")),
        }
    }

    /// A matrix written row by row.
    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        let Value::List(rows) = &self.value else {
            return Err(self.err("expected a matrix [[a, b], [c, d]]"));
        };
        let rows: Vec<Vec<f64>> = rows.iter().map(Spanned::as_vec).collect::<Result<_>>()?;
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(self.err("matrix rows must be non-empty and of equal length"));
        }
        Ok(DMatrix::from_fn(n, rows[0].len(), |i, j| rows[i][j]))
    }

    fn call(&self) -> Option<(&str, &[Spanned])> {
        match &self.value {
            Value::Call { name, args } => Some((name, args)),
            _ => None,
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token> {
        let t = self.next();
        if t.tok == want {
            Ok(t)
        } else {
            Err(parse_error(t.line, t.col, format!("expected {what}")))
        }
    }

    fn value(&mut self) -> Result<Spanned> {
        if self.peek().tok == Tok::LBrack {
            let open = self.next();
            let mut items = Vec::new();
            while self.peek().tok != Tok::RBrack {
                items.push(self.value()?);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else if self.peek().tok != Tok::RBrack {
                    let t = self.peek();
                    return Err(parse_error(t.line, t.col, "expected ',' or ']'"));
                }
            }
            self.next();
            return Ok(Spanned {
                value: Value::List(items),
                line: open.line,
                col: open.col,
            });
        }
        self.expr()
    }

    fn arith(&self, op: &Token, a: Spanned, b: Spanned) -> Result<Spanned> {
        let (Value::Num(x), Value::Num(y)) = (&a.value, &b.value) else {
            return Err(parse_error(
                op.line,
                op.col,
                "arithmetic needs numeric operands",
            ));
        };
        let v = match op.tok {
            Tok::Plus => x + y,
            Tok::Minus => x - y,
            Tok::Star => x * y,
            _ => x / y,
        };
        Ok(Spanned {
            value: Value::Num(v),
            line: a.line,
            col: a.col,
        })
    }

    fn expr(&mut self) -> Result<Spanned> {
        let mut lhs = self.term()?;
        while matches!(self.peek().tok, Tok::Plus | Tok::Minus) {
            let op = self.next();
            let rhs = self.term()?;
            lhs = self.arith(&op, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Spanned> {
        let mut lhs = self.unary()?;
        while matches!(self.peek().tok, Tok::Star | Tok::Slash) {
            let op = self.next();
            let rhs = self.unary()?;
            lhs = self.arith(&op, lhs, rhs)?;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Spanned> {
        match self.peek().tok {
            Tok::Minus | Tok::Plus => {
                let op = self.next();
                let mut v = self.unary()?;
                match &mut v.value {
                    Value::Num(x) if op.tok == Tok::Minus => *x = -*x,
                    Value::Num(_) => {}
                    _ => return Err(parse_error(op.line, op.col, "sign applied to a non-number")),
                }
                v.line = op.line;
                v.col = op.col;
                Ok(v)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Spanned> {
        let t = self.next();
        let at = |value| Spanned {
            value,
            line: t.line,
            col: t.col,
        };
        match &t.tok {
            Tok::Num(v) => Ok(at(Value::Num(*v))),
            Tok::Str(s) => Ok(at(Value::Str(s.clone()))),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(Spanned {
                    line: t.line,
                    col: t.col,
                    ..v
                })
            }
            Tok::Ident(name) => {
                if self.peek().tok != Tok::LParen {
                    return Ok(at(match name.as_str() {
                        "pi" => Value::Num(std::f64::consts::PI),
                        "e" => Value::Num(std::f64::consts::E),
                        "true" => Value::Bool(true),
                        "false" => Value::Bool(false),
                        _ => Value::Ident(name.clone()),
                    }));
                }
                self.next();
                let mut args = Vec::new();
                while self.peek().tok != Tok::RParen {
                    args.push(self.value()?);
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else if self.peek().tok != Tok::RParen {
                        let p = self.peek();
                        return Err(parse_error(p.line, p.col, "expected ',' or ')'"));
                    }
                }
                self.next();
                let math: Option<fn(f64) -> f64> = match name.as_str() {
                    "sqrt" => Some(f64::sqrt),
                    "exp" => Some(f64::exp),
                    "ln" => Some(f64::ln),
                    "sin" => Some(f64::sin),
                    "cos" => Some(f64::cos),
                    "tanh" => Some(f64::tanh),
                    _ => None,
                };
                if let Some(f) = math {
                    if args.len() != 1 {
                        return Err(parse_error(
                            t.line,
                            t.col,
                            format!("{name} takes one argument"),
                        ));
                    }
                    return Ok(at(Value::Num(f(args[0].as_num()?))));
                }
                Ok(at(Value::Call {
                    name: name.clone(),
                    args,
                }))
            }
            _ => Err(parse_error(t.line, t.col, "expected a value")),
        }
    }
}

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: Spanned,
    pub line: usize,
    pub col: usize,
}

/// A parsed document: entries grouped by section (`""` before the first header).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub sections: Vec<(String, Vec<Entry>)>,
}

pub const SECTIONS: [&str; 5] = [
    "linear",
    "perturbation",
    "constants",
    "probes",
    "tolerances",
];

/// Parses the grammar without interpreting keys.
pub fn parse_document(text: &str) -> Result<Document> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut doc = Document {
        sections: vec![(String::new(), Vec::new())],
    };
    loop {
        let t = p.next();
        match &t.tok {
            Tok::Eof => break,
            Tok::Newline => continue,
            Tok::LBrack => {
                let name = match p.next() {
                    Token {
                        tok: Tok::Ident(n), ..
                    } => n,
                    bad => return Err(parse_error(bad.line, bad.col, "expected a section name")),
                };
                if !SECTIONS.contains(&name.as_str()) {
                    return Err(parse_error(
                        t.line,
                        t.col,
                        format!("unknown section [{name}]"),
                    ));
                }
                if doc.sections.iter().any(|(s, _)| *s == name) {
                    return Err(parse_error(
                        t.line,
                        t.col,
                        format!("duplicate section [{name}]"),
                    ));
                }
                p.expect(Tok::RBrack, "']'")?;
                p.expect(Tok::Newline, "end of line after section header")?;
                doc.sections.push((name, Vec::new()));
            }
            Tok::Ident(key) => {
                p.expect(Tok::Eq, "'='")?;
                let value = p.value()?;
                let end = p.next();
                if end.tok != Tok::Newline {
                    return Err(parse_error(end.line, end.col, "expected end of line"));
                }
                let entries = &mut doc.sections.last_mut().unwrap().1;
                if entries.iter().any(|e| e.key == *key) {
                    return Err(parse_error(t.line, t.col, format!("duplicate key '{key}'")));
                }
                entries.push(Entry {
                    key: key.clone(),
                    value,
                    line: t.line,
                    col: t.col,
                });
            }
            _ => return Err(parse_error(t.line, t.col, "expected a key or a [section]")),
        }
    }
    Ok(doc)
}

// ---------------------------------------------------------------- scenarios

/// Certificate constants as declared by the scenario.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Constants {
    #[serde(rename = "K")]
    pub k: f64,
    pub alpha: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub gamma: f64,
    pub mu: f64,
    /// smoothness order of `f` in `y`
    pub r: u32,
}

/// Sample points used by the suites.
#[derive(Debug, Clone, PartialEq)]
pub struct Probes {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `(t, η)` points for the Jacobian checks
    pub jacobian: Vec<(f64, Vec<f64>)>,
    /// initial states at `τ = 0` for the flow-conjugation checks
    pub trajectories: Vec<Vec<f64>>,
    /// time horizon of the flow-conjugation and Lyapunov checks
    pub horizon: f64,
    /// `ε` for the continuity budget
    pub continuity_eps: f64,
    /// number of random pairs for the continuity checks
    pub pairs: usize,
}

/// A loaded scenario: the problem plus everything the suites need.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub problem: ConjugacyProblem,
    pub constants: Constants,
    pub probes: Probes,
    pub tolerances: Tolerances,
    pub picard: PicardConfig,
    pub q: QForm,
    /// Golden file with reference values, relative to the scenario file.
    pub expected: Option<String>,
    /// Sampled certificate entries computed at load.
    pub certificate: Vec<ReportEntry>,
    pub seed: u64,
}

struct Section<'a> {
    name: &'a str,
    entries: &'a [Entry],
    used: Vec<bool>,
}

impl<'a> Section<'a> {
    fn new(doc: &'a Document, name: &'a str) -> Self {
        let entries = doc
            .sections
            .iter()
            .find(|(s, _)| s == name)
            .map(|(_, e)| e.as_slice())
            .unwrap_or(&[]);
        Self {
            name,
            entries,
            used: vec![false; entries.len()],
        }
    }

    fn get(&mut self, key: &str) -> Option<&'a Spanned> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.entries[i].value)
    }

    fn require(&mut self, key: &str, anchor: (usize, usize)) -> Result<&'a Spanned> {
        let name = self.name;
        self.get(key).ok_or_else(|| {
            let section = if name.is_empty() {
                String::from("top level")
            } else {
                format!("[{name}]")
            };
            parse_error(
                anchor.0,
                anchor.1,
                format!("missing key '{key}' in {section}"),
            )
        })
    }

    fn num_or(&mut self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), Spanned::as_num)
    }

    fn count_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => {
                let x = v.as_num()?;
                if x >= 0.0 && x.fract() == 0.0 {
                    Ok(x as usize)
                } else {
                    Err(v.err("expected a non-negative integer"))
                }
            }
        }
    }

    fn finish(&self) -> Result<()> {
        match self.entries.iter().zip(&self.used).find(|(_, u)| !**u) {
            Some((e, _)) => Err(parse_error(
                e.line,
                e.col,
                format!("unknown key '{}'", e.key),
            )),
            None => Ok(()),
        }
    }

    fn position(&self, doc_end: (usize, usize)) -> (usize, usize) {
        self.entries.first().map_or(doc_end, |e| (e.line, e.col))
    }
}

fn scalar_fn(v: &Spanned) -> Result<ScalarFn> {
    if let Value::Num(c) = v.value {
        return Ok(ScalarFn::Const(c));
    }
    match v.call() {
        Some(("osc", args)) if args.len() == 3 => Ok(ScalarFn::Osc {
            mean: args[0].as_num()?,
            amp: args[1].as_num()?,
            freq: args[2].as_num()?,
        }),
        _ => Err(v.err("diagonal entries are numbers or osc(mean, amp, freq)")),
    }
}

fn coefficient_matrix(v: &Spanned) -> Result<CoefficientMatrix> {
    match &v.value {
        Value::Num(a) => return Ok(CoefficientMatrix::scalar(*a)),
        Value::List(_) => {
            let m = v.as_matrix()?;
            if !m.is_square() {
                return Err(v.err("A must be square"));
            }
            return Ok(CoefficientMatrix::Constant(m));
        }
        _ => {}
    }
    match v.call() {
        Some(("diag", args)) if !args.is_empty() => {
            let d: Vec<ScalarFn> = args.iter().map(scalar_fn).collect::<Result<_>>()?;
            if d.iter().all(|s| matches!(s, ScalarFn::Const(_))) {
                let c: Vec<f64> = d.iter().map(|s| s.eval(0.0)).collect();
                Ok(CoefficientMatrix::Constant(DMatrix::from_diagonal(
                    &nalgebra::DVector::from_vec(c),
                )))
            } else {
                Ok(CoefficientMatrix::Diagonal(d))
            }
        }
        Some(("rot", args)) if args.len() == 2 => {
            Ok(CoefficientMatrix::rot(args[0].as_num()?, args[1].as_num()?))
        }
        _ => Err(v.err("A must be a number, a matrix, diag(...) or rot(a, b)")),
    }
}

fn builtin_field(v: &Spanned) -> Result<Builtin> {
    if v.value == Value::Ident("zero".into()) {
        return Ok(Builtin::Zero);
    }
    let one = |args: &[Spanned]| -> Result<f64> {
        match args {
            [a] => a.as_num(),
            _ => Err(v.err("expected exactly one argument")),
        }
    };
    match v.call() {
        Some(("zero", [])) => Ok(Builtin::Zero),
        Some(("jiang_arctan", args)) => Ok(Builtin::JiangArctan(one(args)?)),
        Some(("scaled_sin", args)) => Ok(Builtin::ScaledSin(one(args)?)),
        Some(("scaled_tanh", args)) => Ok(Builtin::ScaledTanh(one(args)?)),
        Some(("constant_shift", args)) => {
            let c = match args {
                [a] if matches!(a.value, Value::List(_)) => a.as_vec()?,
                _ => args.iter().map(Spanned::as_num).collect::<Result<_>>()?,
            };
            if c.is_empty() {
                return Err(v.err("constant_shift needs at least one component"));
            }
            Ok(Builtin::ConstantShift(c))
        }
        _ => Err(v.err(
            "f must be zero, jiang_arctan(c), scaled_sin(c), scaled_tanh(c) or constant_shift(...)",
        )),
    }
}

/// `k` evenly spaced values per axis on `[lo, hi]`, all combinations in `n` dimensions.
pub fn lattice(lo: f64, hi: f64, k: usize, n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = match k {
        0 => return Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..k)
            .map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64)
            .collect(),
    };
    let total = k.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let v = axis[idx % k];
                    idx /= k;
                    v
                })
                .collect()
        })
        .collect()
}

fn states(v: &Spanned, n: usize) -> Result<Vec<Vec<f64>>> {
    if let Some((name, args)) = v.call() {
        return match (name, args) {
            ("lattice", [lo, hi, k]) => {
                let k = k.as_num()?;
                if !(k >= 1.0 && k.fract() == 0.0) {
                    return Err(v.err("lattice count must be a positive integer"));
                }
                Ok(lattice(lo.as_num()?, hi.as_num()?, k as usize, n))
            }
            _ => Err(v.err("state lists are vectors of states or lattice(lo, hi, k)")),
        };
    }
    let Value::List(items) = &v.value else {
        return Err(v.err("expected a list of states"));
    };
    items
        .iter()
        .map(|item| {
            let s = match item.value {
                Value::Num(x) if n == 1 => vec![x],
                _ => item.as_vec()?,
            };
            if s.len() != n {
                return Err(item.err(format!("state has dimension {}, expected {n}", s.len())));
            }
            Ok(s)
        })
        .collect()
}

fn rejected(inequality: &str, detail: String) -> Error {
    Error::CertificateRejected {
        inequality: inequality.into(),
        detail,
    }
}

impl Scenario {
    /// Parses and constructs a scenario, sampling its certificates with `seed`.
    pub fn from_text(text: &str, seed: u64) -> Result<Self> {
        let doc = parse_document(text)?;
        let end = text.lines().count().max(1);
        let end = (end, 1);

        let mut top = Section::new(&doc, "");
        let name = match top.get("name") {
            None => String::from("scenario"),
            Some(v) => match &v.value {
                Value::Ident(s) | Value::Str(s) => s.clone(),
                _ => return Err(v.err("name must be an identifier or a string")),
            },
        };
        let expected = match top.get("expected") {
            None => None,
            Some(v) => match &v.value {
                Value::Str(s) => Some(s.clone()),
                _ => return Err(v.err("expected must be a quoted path")),
            },
        };
        top.finish()?;

        let mut lin = Section::new(&doc, "linear");
        let a = coefficient_matrix(lin.require("A", lin.position(end))?)?;
        lin.finish()?;
        let n = a.dim();

        let mut cons = Section::new(&doc, "constants");
        let at = cons.position(end);
        let k = cons.require("K", at)?.as_num()?;
        let alpha = cons.require("alpha", at)?.as_num()?;
        let m = cons.require("M", at)?.as_num()?;
        let gamma = cons.require("gamma", at)?.as_num()?;
        let mu = cons.require("mu", at)?.as_num()?;
        let r = cons.count_or("r", 1)? as u32;
        let t_max = cons.num_or("t_max", 50.0)?;
        let q = match cons.get("Q") {
            None => QForm::scalar(1.0, n),
            Some(v) => match v.value {
                Value::Num(c) => QForm::scalar(c, n),
                _ => {
                    let qm = v.as_matrix()?;
                    if qm.nrows() != n || !qm.is_square() {
                        return Err(v.err(format!("Q must be {n}×{n}")));
                    }
                    QForm::Constant(qm)
                }
            },
        };
        cons.finish()?;

        let mut pert = Section::new(&doc, "perturbation");
        let field_value = pert.require("f", pert.position(end))?;
        let field = builtin_field(field_value)?;
        let fd_fallback = pert.get("fd_fallback").map_or(Ok(true), Spanned::as_bool)?;
        pert.finish()?;
        if let Builtin::ConstantShift(c) = &field {
            if c.len() != n {
                return Err(field_value.err(format!(
                    "constant_shift has {} components, A is {n}×{n}",
                    c.len()
                )));
            }
        }

        let mut tol = Section::new(&doc, "tolerances");
        let dflt = IntegratorConfig::default();
        let cfg = IntegratorConfig {
            rtol: tol.num_or("rtol", dflt.rtol)?,
            atol: tol.num_or("atol", dflt.atol)?,
            h_init: tol.num_or("h_init", dflt.h_init)?,
            h_max: tol.num_or("h_max", dflt.h_max)?,
            max_steps: tol.count_or("max_steps", dflt.max_steps)?,
        };
        let pd = PicardConfig::default();
        let picard = PicardConfig {
            tol_fix: tol.num_or("tol_fix", pd.tol_fix)?,
            max_iter: tol.count_or("max_iter", pd.max_iter)?,
            grid_pts: tol.count_or("grid_pts", pd.grid_pts)?,
        };
        picard.validate()?;
        let td = Tolerances::default();
        let tolerances = Tolerances {
            eps_cert: tol.num_or("eps_cert", td.eps_cert)?,
            uas: tol.num_or("uas", td.uas)?,
            num: tol.num_or("num", td.num)?,
            equiv: tol.num_or("equiv", td.equiv)?,
            inv: tol.num_or("inv", td.inv)?,
            conj: tol.num_or("conj", td.conj)?,
            rel: tol.num_or("rel", td.rel)?,
            jac: tol.num_or("jac", td.jac)?,
            eq: tol.num_or("eq", td.eq)?,
            lyap: tol.num_or("lyap", td.lyap)?,
            fd: tol.num_or("fd", td.fd)?,
        }
        .from_env();
        tol.finish()?;

        let mut pr = Section::new(&doc, "probes");
        let times = pr
            .get("times")
            .map_or(Ok(vec![0.0, 1.0, 5.0, 10.0, 50.0]), Spanned::as_vec)?;
        let probe_states = match pr.get("states") {
            Some(v) => states(v, n)?,
            None => lattice(-1.0, 1.0, 4, n),
        };
        let jt = pr
            .get("jacobian_times")
            .map_or(Ok(Vec::new()), Spanned::as_vec)?;
        let js = pr
            .get("jacobian_states")
            .map_or(Ok(Vec::new()), |v| states(v, n))?;
        let trajectories = match pr.get("trajectories") {
            Some(v) => states(v, n)?,
            None => spread(&probe_states, 5),
        };
        let horizon = pr.num_or("horizon", 20.0)?;
        let continuity_eps = pr.num_or("continuity_eps", 0.1)?;
        let pairs = pr.count_or("pairs", 64)?;
        pr.finish()?;
        for &t in times.iter().chain(&jt) {
            if !(0.0..=t_max).contains(&t) {
                return Err(rejected(
                    "0 ≤ t ≤ t_max",
                    format!("probe time {t} outside [0, {t_max}]"),
                ));
            }
        }
        let probes = Probes {
            times,
            jacobian: jt
                .iter()
                .flat_map(|&t| js.iter().map(move |s| (t, s.clone())))
                .collect(),
            states: probe_states,
            trajectories,
            horizon,
            continuity_eps,
            pairs,
        };

        let linear = LinearSystem::new(a, m, k, alpha)?;
        let mut perturbation = Perturbation::builtin(field, gamma, mu, r)?;
        if !fd_fallback {
            perturbation = perturbation.without_fd_fallback();
        }
        let mut problem = ConjugacyProblem::new(linear, perturbation, cfg, t_max)?;
        problem.picard = picard;

        let mut scenario = Self {
            name,
            problem,
            constants: Constants {
                k,
                alpha,
                m,
                gamma,
                mu,
                r,
            },
            probes,
            tolerances,
            picard,
            q,
            expected,
            certificate: Vec::new(),
            seed,
        };
        scenario.certificate = scenario.sample_certificate();
        Ok(scenario)
    }

    /// Reads a scenario file; the name defaults to the file stem.
    pub fn load(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut s = Self::from_text(&text, seed)?;
        if !text.lines().any(|l| l.trim_start().starts_with("name")) {
            if let Some(stem) = path.file_stem() {
                s.name = stem.to_string_lossy().into_owned();
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    /// Radius of the smallest origin-centred box holding every probe state.
    pub fn probe_radius(&self) -> f64 {
        self.probes
            .states
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0)
    }

    fn sample_certificate(&self) -> Vec<ReportEntry> {
        let p = &self.problem;
        let tol = &self.tolerances;
        let t_max = p.t_max;
        let times: Vec<f64> = (0..=200).map(|i| t_max * i as f64 / 200.0).collect();
        let mut pairs = Vec::new();
        for &t in &[0.0, 1.0, 5.0, 10.0, t_max] {
            for &s in &[0.0, 0.5, 1.0, 5.0] {
                if s <= t {
                    pairs.push((t, s));
                }
            }
        }
        let mut out = vec![
            p.linear.verify_bound(&times, tol.eps_cert),
            p.linear.verify_uas(&pairs, &p.cfg, tol.uas),
            ReportEntry::at_most(
                "linear.alpha_le_m",
                anchors::ALPHA_LE_M,
                self.constants.alpha,
                self.constants.m,
            ),
            ReportEntry::below(
                "conjugacy.contraction_hypothesis",
                anchors::CONTRACTION_HYP,
                p.q(),
                1.0,
            ),
        ];
        out.extend(p.pert.verify(
            self.dim(),
            t_max,
            2.0 * self.probe_radius(),
            CERTIFICATE_SAMPLES,
            self.seed,
            tol.eps_cert,
            tol.fd,
        ));
        out
    }
}

/// Up to `k` states spread evenly through `states`.
fn spread(states: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    if states.len() <= k {
        return states.to_vec();
    }
    (0..k)
        .map(|i| states[i * (states.len() - 1) / (k - 1)].clone())
        .collect()
}

/// Parses a scenario with the default seed.
pub fn load_scenario(text: &str) -> Result<Scenario> {
    Scenario::from_text(text, DEFAULT_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    const JIANG: &str = "name = jiang\n[linear]\nA = -1\n[perturbation]\nf = jiang_arctan(0.2)\n\
        [constants]\nK = 1\nalpha = 1\nM = 1\ngamma = 0.2\nmu = pi/5\n";

    #[test]
    fn expressions() {
        let d = parse_document("x = -2*(1+0.5)/3\ny = sqrt(4) - e^0\n").unwrap_err();
        assert!(
            matches!(
                d,
                Error::Parse {
                    line: 2,
                    column: 16,
                    ..
                }
            ),
            "{d}"
        );
        let d = parse_document("x = -2*(1+0.5)/3 # c\nv = [1,\n  2e-1, ]\n").unwrap();
        let e = &d.sections[0].1;
        assert_eq!(e[0].value.as_num().unwrap(), -1.0);
        assert_eq!(e[1].value.as_vec().unwrap(), vec![1.0, 0.2]);
    }

    #[test]
    fn loads_jiang() {
        let s = load_scenario(JIANG).unwrap();
        assert_eq!(s.name, "jiang");
        assert!((s.constants.mu - std::f64::consts::PI / 5.0).abs() < 1e-15);
        assert!(s.certificate.iter().all(|e| e.pass), "{:?}", s.certificate);
        assert_eq!(s.probes.trajectories.len(), 4);
    }

    #[test]
    fn errors_carry_positions() {
        let bad = JIANG.replace("A = -1", "A = [[1, 2], [3]]");
        match load_scenario(&bad) {
            Err(Error::Parse {
                line: 3, column: 5, ..
            }) => {}
            other => panic!("{other:?}"),
        }
        let bad = JIANG.replace("gamma = 0.2", "gamma = 2");
        match load_scenario(&bad) {
            Err(Error::CertificateRejected { inequality, .. }) => {
                assert_eq!(inequality, "Kγ/α < 1")
            }
            other => panic!("{other:?}"),
        }
        let bad = JIANG.replace("M = 1", "M = 1\nN = 2");
        assert!(matches!(
            load_scenario(&bad),
            Err(Error::Parse {
                line: 10,
                column: 1,
                ..
            })
        ));
    }

    #[test]
    fn lattice_covers_box() {
        let l = lattice(-1.0, 1.0, 3, 2);
        assert_eq!(l.len(), 9);
        assert_eq!(l[0], vec![-1.0, -1.0]);
        assert_eq!(l[8], vec![1.0, 1.0]);
    }
}
