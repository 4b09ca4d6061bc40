//! Reader and writer for system description files.
//!
//! ```text
//! # comment
//! [system]
//! a = 1
//! b = 2
//! c = -2
//! ap = 0.75
//! bp = 3/2
//! cp = 0
//! app = 3
//! bpp = 6
//! cpp = -6
//!
//! [initial]
//! x0 = 1
//! y0 = 0.75
//!
//! [run]
//! steps = 1000
//! transient = 500
//! tol = 1e-9
//! seed = 0
//! ```
//!
//! Values are arithmetic expressions over `+ - * /`, parentheses and
//! `sqrt(..)`. Integer and decimal literals are exact (`0.75` is `3/4`); a
//! literal with an exponent (`1e-9`, `1.7320508075688772e0`) is a double.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::scalar::{Rational, Scalar, ScalarError};
use crate::system::{PlanarSystem, PARAM_NAMES};

const MAX_NESTING: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("unknown section `[{0}]`")]
    UnknownSection(String),
    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error(transparent)]
    Arithmetic(#[from] ScalarError),
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSettings {
    pub steps: Option<u64>,
    pub transient: Option<u64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemSpec {
    pub system: PlanarSystem,
    pub initial: Option<(Scalar, Scalar)>,
    pub run: Option<RunSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Section {
    System,
    Initial,
    Run,
}

impl Section {
    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::System => &PARAM_NAMES,
            Section::Initial => &["x0", "y0"],
            Section::Run => &["steps", "transient", "tol", "seed"],
        }
    }
}

struct Entry {
    value: Scalar,
    line: usize,
    column: usize,
}

pub fn parse_spec_bytes(bytes: &[u8]) -> Result<SystemSpec, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_spec(text),
        Err(e) => {
            let before = &bytes[..e.valid_up_to()];
            let line = before.iter().filter(|b| **b == b'\n').count() + 1;
            let line_start = before.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
            let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
            Err(ParseError { line, column, kind: ParseErrorKind::InvalidUtf8 })
        }
    }
}

pub fn parse_spec(text: &str) -> Result<SystemSpec, ParseError> {
    let mut current: Option<Section> = None;
    let mut seen: HashMap<Section, (usize, HashMap<&'static str, Entry>)> = HashMap::new();
    let mut last_line = 1;

    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let content = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let col_of = |byte_off: usize| content[..byte_off].chars().count() + 1;

        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return Err(err(line_no, col_of(indent), ParseErrorKind::Syntax("expected `]`".into())));
            };
            let name = name.trim();
            let section = match name {
                "system" => Section::System,
                "initial" => Section::Initial,
                "run" => Section::Run,
                other => return Err(err(line_no, col_of(indent), ParseErrorKind::UnknownSection(other.into()))),
            };
            if seen.contains_key(&section) {
                return Err(err(
                    line_no,
                    col_of(indent),
                    ParseErrorKind::Syntax(format!("section `[{name}]` appears twice")),
                ));
            }
            seen.insert(section, (line_no, HashMap::new()));
            current = Some(section);
            continue;
        }

        let Some(eq) = content.find('=') else {
            return Err(err(line_no, col_of(indent), ParseErrorKind::Syntax("expected `key = expression`".into())));
        };
        let key = content[..eq].trim();
        let Some(section) = current else {
            return Err(err(line_no, col_of(indent), ParseErrorKind::Syntax("key outside of a section".into())));
        };
        let Some(&key) = section.keys().iter().find(|k| **k == key) else {
            return Err(err(line_no, col_of(indent), ParseErrorKind::UnknownKey(key.into())));
        };
        let entries = &mut seen.get_mut(&section).expect("section registered").1;
        if entries.contains_key(key) {
            return Err(err(line_no, col_of(indent), ParseErrorKind::DuplicateKey(key.into())));
        }
        let expr_src = &content[eq + 1..];
        let value = eval_expr(expr_src, line_no, col_of(eq + 1))?;
        entries.insert(key, Entry { value, line: line_no, column: col_of(indent) });
    }

    let Some((sys_line, sys_entries)) = seen.remove(&Section::System) else {
        return Err(err(last_line, 1, ParseErrorKind::MissingKey("[system]".into())));
    };
    let mut params = [Scalar::ZERO; 9];
    for (slot, name) in params.iter_mut().zip(PARAM_NAMES) {
        *slot = sys_entries.get(name).ok_or_else(|| err(sys_line, 1, ParseErrorKind::MissingKey(name.into())))?.value;
    }

    let initial = match seen.remove(&Section::Initial) {
        None => None,
        Some((line, entries)) => {
            let get = |k: &str| {
                entries.get(k).map(|e| e.value).ok_or_else(|| err(line, 1, ParseErrorKind::MissingKey(k.into())))
            };
            Some((get("x0")?, get("y0")?))
        }
    };

    let run = match seen.remove(&Section::Run) {
        None => None,
        Some((_, entries)) => {
            let mut run = RunSettings::default();
            if let Some(e) = entries.get("steps") {
                run.steps = Some(count_value(e, "steps", 1)?);
            }
            if let Some(e) = entries.get("transient") {
                run.transient = Some(count_value(e, "transient", 0)?);
            }
            if let Some(e) = entries.get("seed") {
                run.seed = Some(count_value(e, "seed", 0)?);
            }
            if let Some(e) = entries.get("tol") {
                let tol = e.value.to_f64();
                if tol <= 0.0 {
                    return Err(err(
                        e.line,
                        e.column,
                        ParseErrorKind::InvalidValue { key: "tol".into(), reason: "must be positive".into() },
                    ));
                }
                run.tol = Some(tol);
            }
            Some(run)
        }
    };

    Ok(SystemSpec { system: PlanarSystem::from_array(params), initial, run })
}

fn count_value(e: &Entry, key: &str, min: u64) -> Result<u64, ParseError> {
    let invalid = |reason: String| err(e.line, e.column, ParseErrorKind::InvalidValue { key: key.into(), reason });
    let r = e.value.as_rational().filter(Rational::is_integer).ok_or_else(|| invalid("expected an integer".into()))?;
    let n = u64::try_from(r.numer()).map_err(|_| invalid("out of range".into()))?;
    if n < min {
        return Err(invalid(format!("must be at least {min}")));
    }
    Ok(n)
}

fn err(line: usize, column: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, column, kind }
}

/// Evaluates a single expression, e.g. `(6 - 3*sqrt(3))`.
pub fn parse_expr(src: &str) -> Result<Scalar, ParseError> {
    if src.contains('\n') {
        return Err(err(1, 1, ParseErrorKind::Syntax("expression spans several lines".into())));
    }
    eval_expr(src, 1, 1)
}

fn eval_expr(src: &str, line: usize, first_col: usize) -> Result<Scalar, ParseError> {
    let mut p = ExprParser { chars: src.chars().collect(), pos: 0, line, first_col, depth: 0 };
    p.skip_ws();
    if p.peek().is_none() {
        return Err(p.error(ParseErrorKind::Syntax("missing expression".into())));
    }
    let v = p.expr()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(ParseErrorKind::Syntax(format!("unexpected `{c}`"))));
    }
    Ok(v)
}

struct ExprParser {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    first_col: usize,
    depth: usize,
}

impl ExprParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn error_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        err(self.line, self.first_col + pos, kind)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        self.error_at(self.pos, kind)
    }

    fn arith(&self, pos: usize, r: Result<Scalar, ScalarError>) -> Result<Scalar, ParseError> {
        r.map_err(|e| self.error_at(pos, ParseErrorKind::Arithmetic(e)))
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_NESTING {
            return Err(self.error(ParseErrorKind::Syntax("expression nested too deeply".into())));
        }
        Ok(())
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<Scalar, ParseError> {
        self.enter()?;
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            let op_pos = self.pos;
            match self.peek() {
                Some('+') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = self.arith(op_pos, acc.add(&rhs))?;
                }
                Some('-') => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = self.arith(op_pos, acc.sub(&rhs))?;
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(acc)
    }

    // term := factor (('*'|'/') factor)*
    fn term(&mut self) -> Result<Scalar, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            let op_pos = self.pos;
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = self.arith(op_pos, acc.mul(&rhs))?;
                }
                Some('/') => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = self.arith(op_pos, acc.div(&rhs))?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    // factor := NUMBER | '-' factor | '(' expr ')' | 'sqrt' '(' expr ')'
    fn factor(&mut self) -> Result<Scalar, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error(ParseErrorKind::Syntax("unexpected end of expression".into()))),
            Some('-') => {
                self.pos += 1;
                self.enter()?;
                let v = self.factor()?;
                self.depth -= 1;
                self.arith(start, v.neg())
            }
            Some('(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let ident: String = self.chars[start..self.pos].iter().collect();
                if ident != "sqrt" {
                    return Err(self.error_at(start, ParseErrorKind::Syntax(format!("unknown identifier `{ident}`"))));
                }
                self.skip_ws();
                self.expect('(')?;
                let v = self.expr()?;
                self.expect(')')?;
                self.arith(start, v.sqrt())
            }
            Some(c) => Err(self.error(ParseErrorKind::Syntax(format!("unexpected `{c}`")))),
        }
    }

    fn expect(&mut self, want: char) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(want) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self.peek().map_or("end of expression".to_string(), |c| format!("`{c}`"));
            Err(self.error(ParseErrorKind::Syntax(format!("expected `{want}`, found {found}"))))
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Scalar, ParseError> {
        let start = self.pos;
        self.digits();
        let int_end = self.pos;
        let mut frac = (int_end, int_end);
        if self.peek() == Some('.') {
            self.pos += 1;
            let f0 = self.pos;
            self.digits();
            frac = (f0, self.pos);
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return Err(self.error(ParseErrorKind::Syntax("malformed exponent".into())));
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            let v: f64 = text
                .parse()
                .map_err(|_| self.error_at(start, ParseErrorKind::Syntax(format!("malformed number `{text}`"))))?;
            return self.arith(start, Scalar::approx(v));
        }
        let int_digits: String = self.chars[start..int_end].iter().collect();
        let frac_digits: String = self.chars[frac.0..frac.1].iter().collect();
        Ok(exact_decimal(&int_digits, &frac_digits))
    }
}

/// `int.frac` as an exact rational, or a degraded double when it does not fit.
fn exact_decimal(int_digits: &str, frac_digits: &str) -> Scalar {
    let all = format!("{int_digits}{frac_digits}");
    let exact = all.parse::<i128>().ok().and_then(|num| {
        let den = 10i128.checked_pow(u32::try_from(frac_digits.len()).ok()?)?;
        Rational::new(num, den)
    });
    match exact {
        Some(r) => Scalar::Exact(r),
        None => {
            let v: f64 = format!("{int_digits}.{frac_digits}0").parse().unwrap_or(f64::MAX);
            Scalar::Approx { value: v.min(f64::MAX), degraded: true }
        }
    }
}

/// Writes a value so that [`parse_expr`] reads it back unchanged.
pub fn format_scalar(s: &Scalar) -> String {
    match s {
        Scalar::Exact(r) => r.to_string(),
        Scalar::Approx { value, .. } => format!("{value:.16e}"),
    }
}

pub fn format_spec(spec: &SystemSpec) -> String {
    let mut out = String::from("[system]\n");
    for (name, value) in PARAM_NAMES.iter().zip(spec.system.to_array()) {
        let _ = writeln!(out, "{name} = {}", format_scalar(&value));
    }
    if let Some((x0, y0)) = &spec.initial {
        let _ = write!(out, "\n[initial]\nx0 = {}\ny0 = {}\n", format_scalar(x0), format_scalar(y0));
    }
    if let Some(run) = &spec.run {
        out.push_str("\n[run]\n");
        if let Some(v) = run.steps {
            let _ = writeln!(out, "steps = {v}");
        }
        if let Some(v) = run.transient {
            let _ = writeln!(out, "transient = {v}");
        }
        if let Some(v) = run.tol {
            let _ = writeln!(out, "tol = {v:.16e}");
        }
        if let Some(v) = run.seed {
            let _ = writeln!(out, "seed = {v}");
        }
    }
    out
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_spec(self))
    }
}
