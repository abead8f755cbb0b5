//! Potential expressions: a tiny arithmetic language over `x`, its parser,
//! a canonical printer and jet evaluation.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := ('-')? power
//! power  := atom ('^' uint)?
//! atom   := number | 'x' | func '(' expr ')' | '(' expr ')'
//! func   := exp | sin | cos | cosh | sinh
//! ```

use std::fmt;

use thiserror::Error;

use crate::jet::Jet2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Cosh,
    Sinh,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Self::Exp,
            "sin" => Self::Sin,
            "cos" => Self::Cos,
            "cosh" => Self::Cosh,
            "sinh" => Self::Sinh,
            _ => return None,
        })
    }

    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Sin => "sin",
            Self::Cos => "cos",
            Self::Cosh => "cosh",
            Self::Sinh => "sinh",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected character {found:?} at offset {offset}, expected {expected}")]
    UnexpectedChar { offset: usize, found: char, expected: &'static str },
    #[error("unexpected end of input at offset {offset}, expected {expected}")]
    UnexpectedEnd { offset: usize, expected: &'static str },
    #[error("unknown identifier {name:?} at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("malformed number at offset {offset}")]
    InvalidNumber { offset: usize },
    #[error("exponent at offset {offset} must be a non-negative integer")]
    NonIntegerExponent { offset: usize },
}

impl ParseError {
    /// Byte offset of the offending input.
    #[must_use]
    pub fn offset(&self) -> usize {
        match self {
            Self::UnexpectedChar { offset, .. }
            | Self::UnexpectedEnd { offset, .. }
            | Self::UnknownIdentifier { offset, .. }
            | Self::InvalidNumber { offset }
            | Self::NonIntegerExponent { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("non-finite potential value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuiltinError {
    #[error("unknown builtin potential {0:?}")]
    Unknown(String),
    #[error("builtin {name:?} requires parameter {param:?}")]
    MissingParameter { name: String, param: &'static str },
    #[error("parameter {param:?} must be finite")]
    NonFiniteParameter { param: &'static str },
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self { src, bytes: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.src[self.pos..].chars().next() {
            Some(found) => ParseError::UnexpectedChar { offset: self.pos, found, expected },
            None => ParseError::UnexpectedEnd { offset: self.pos, expected },
        }
    }

    fn expect(&mut self, b: u8, expected: &'static str) -> Result<(), ParseError> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            Ok(Expr::Neg(Box::new(self.power()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        match self.bytes.get(start) {
            None => return Err(self.unexpected("integer exponent")),
            Some(b) if b.is_ascii_digit() => {}
            Some(b'-' | b'.') => return Err(ParseError::NonIntegerExponent { offset: start }),
            Some(_) => return Err(self.unexpected("integer exponent")),
        }
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if matches!(self.bytes.get(self.pos), Some(b'.' | b'e' | b'E')) {
            return Err(ParseError::NonIntegerExponent { offset: start });
        }
        let n: u32 = self.src[start..self.pos]
            .parse()
            .map_err(|_| ParseError::NonIntegerExponent { offset: start })?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::InvalidNumber { offset: start });
        }
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                return Err(ParseError::InvalidNumber { offset: start });
            }
        }
        let value: f64 = self.src[start..self.pos]
            .parse()
            .map_err(|_| ParseError::InvalidNumber { offset: start })?;
        if !value.is_finite() {
            return Err(ParseError::InvalidNumber { offset: start });
        }
        Ok(Expr::Const(value))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b) if b.is_ascii_digit() || b == b'.' => self.number(),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')', "')'")?;
                Ok(e)
            }
            Some(b) if b.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if name == "x" {
                    return Ok(Expr::Var);
                }
                let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownIdentifier {
                    offset: start,
                    name: name.to_string(),
                })?;
                self.expect(b'(', "'(' after function name")?;
                let arg = self.expr()?;
                self.expect(b')', "')'")?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(self.unexpected("number, 'x', function or '('")),
        }
    }
}

/// Parses an expression in `x`.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src);
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected("operator or end of input"));
    }
    Ok(e)
}

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Self::Add(..) | Self::Sub(..) => 1,
            Self::Mul(..) | Self::Div(..) => 2,
            Self::Neg(_) => 3,
            Self::Const(c) if c.is_sign_negative() => 3,
            Self::Pow(..) => 4,
            Self::Const(_) | Self::Var | Self::Call(..) => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.write_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Self::Const(c) if c.is_sign_negative() => write!(f, "-{}", -c),
            Self::Const(c) => write!(f, "{c}"),
            Self::Var => write!(f, "x"),
            Self::Add(a, b) => binary(f, a, " + ", b, 1),
            Self::Sub(a, b) => binary(f, a, " - ", b, 1),
            Self::Mul(a, b) => binary(f, a, "*", b, 2),
            Self::Div(a, b) => binary(f, a, "/", b, 2),
            Self::Neg(a) => {
                write!(f, "-")?;
                a.write_at(f, 4)
            }
            Self::Pow(a, n) => {
                a.write_at(f, 5)?;
                write!(f, "^{n}")
            }
            Self::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_at(f, 0)?;
                write!(f, ")")
            }
        }
    }

    fn eval_f64(&self, x: f64) -> f64 {
        match self {
            Self::Const(c) => *c,
            Self::Var => x,
            Self::Add(a, b) => a.eval_f64(x) + b.eval_f64(x),
            Self::Sub(a, b) => a.eval_f64(x) - b.eval_f64(x),
            Self::Mul(a, b) => a.eval_f64(x) * b.eval_f64(x),
            Self::Div(a, b) => {
                let d = b.eval_f64(x);
                if d == 0.0 {
                    f64::NAN
                } else {
                    a.eval_f64(x) / d
                }
            }
            Self::Neg(a) => -a.eval_f64(x),
            Self::Pow(a, n) => a.eval_f64(x).powi(*n as i32),
            Self::Call(func, a) => {
                let t = a.eval_f64(x);
                match func {
                    Func::Exp => t.exp(),
                    Func::Sin => t.sin(),
                    Func::Cos => t.cos(),
                    Func::Cosh => t.cosh(),
                    Func::Sinh => t.sinh(),
                }
            }
        }
    }

    fn eval_jet(&self, x: f64) -> Jet2 {
        match self {
            Self::Const(c) => Jet2::constant(*c),
            Self::Var => Jet2::variable(x),
            Self::Add(a, b) => a.eval_jet(x) + b.eval_jet(x),
            Self::Sub(a, b) => a.eval_jet(x) - b.eval_jet(x),
            Self::Mul(a, b) => a.eval_jet(x) * b.eval_jet(x),
            Self::Div(a, b) => {
                let d = b.eval_jet(x);
                if d.v == 0.0 {
                    Jet2::constant(f64::NAN)
                } else {
                    a.eval_jet(x) / d
                }
            }
            Self::Neg(a) => -a.eval_jet(x),
            Self::Pow(a, n) => a.eval_jet(x).powi(*n),
            Self::Call(func, a) => {
                let t = a.eval_jet(x);
                match func {
                    Func::Exp => t.exp(),
                    Func::Sin => t.sin(),
                    Func::Cos => t.cos(),
                    Func::Cosh => t.cosh(),
                    Func::Sinh => t.sinh(),
                }
            }
        }
    }

    fn has_zero_divisor(&self, x: f64) -> bool {
        match self {
            Self::Const(_) | Self::Var => false,
            Self::Add(a, b) | Self::Sub(a, b) | Self::Mul(a, b) => {
                a.has_zero_divisor(x) || b.has_zero_divisor(x)
            }
            Self::Div(a, b) => {
                b.eval_f64(x) == 0.0 || a.has_zero_divisor(x) || b.has_zero_divisor(x)
            }
            Self::Neg(a) | Self::Pow(a, _) | Self::Call(_, a) => a.has_zero_divisor(x),
        }
    }
}

fn binary(f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, level: u8) -> fmt::Result {
    a.write_at(f, level)?;
    write!(f, "{op}")?;
    b.write_at(f, level + 1)
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

/// A potential `v(x)` given by an expression.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialModel {
    expr: Expr,
}

impl PotentialModel {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        Ok(Self { expr: parse(src)? })
    }

    #[must_use]
    pub fn from_expr(expr: Expr) -> Self {
        Self { expr }
    }

    /// Named potentials: `harmonic`, `quartic`, `double_well`, and
    /// `tilted_double_well` which needs the tilt `c`.
    pub fn builtin(name: &str, c: Option<f64>) -> Result<Self, BuiltinError> {
        let src = match name {
            "harmonic" => "x^2".to_string(),
            "quartic" => "x^4".to_string(),
            "double_well" => "(x^2 - 1)^2".to_string(),
            "tilted_double_well" => {
                let c = c.ok_or_else(|| BuiltinError::MissingParameter {
                    name: name.to_string(),
                    param: "c",
                })?;
                if !c.is_finite() {
                    return Err(BuiltinError::NonFiniteParameter { param: "c" });
                }
                if c < 0.0 {
                    format!("(x^2 - 1)^2 - {}*x", -c)
                } else {
                    format!("(x^2 - 1)^2 + {c}*x")
                }
            }
            other => return Err(BuiltinError::Unknown(other.to_string())),
        };
        Ok(Self::parse(&src).expect("builtin sources are valid"))
    }

    #[must_use]
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// `v(x)`; NaN where the expression is undefined.
    #[must_use]
    pub fn value(&self, x: f64) -> f64 {
        self.expr.eval_f64(x)
    }

    /// `(v, v', v'')` at `x`; NaN components where undefined.
    #[must_use]
    pub fn jet(&self, x: f64) -> Jet2 {
        self.expr.eval_jet(x)
    }

    pub fn try_jet(&self, x: f64) -> Result<Jet2, EvalError> {
        if self.expr.has_zero_divisor(x) {
            return Err(EvalError::DivisionByZero { x });
        }
        let j = self.jet(x);
        if j.is_finite() {
            Ok(j)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    pub fn try_value(&self, x: f64) -> Result<f64, EvalError> {
        self.try_jet(x).map(|j| j.v)
    }

    /// Checks the potential is finite on `n + 1` equispaced points of `[a, b]`.
    pub fn check_finite_on(&self, a: f64, b: f64, n: usize) -> Result<(), EvalError> {
        let n = n.max(1);
        for i in 0..=n {
            self.try_jet(a + (b - a) * i as f64 / n as f64)?;
        }
        Ok(())
    }
}

impl fmt::Display for PotentialModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn double_well_value() {
        let m = PotentialModel::parse("(x^2-1)^2").unwrap();
        assert_eq!(m.value(0.0), 1.0);
        assert_eq!(m.value(1.0), 0.0);
        let j = m.jet(0.5);
        assert!((j.d1 - 4.0 * 0.5 * (0.25 - 1.0)).abs() < 1e-15);
        assert!((j.d2 - (12.0 * 0.25 - 4.0)).abs() < 1e-14);
    }

    #[test]
    fn dangling_caret_reports_offset_two() {
        let err = parse("x^").unwrap_err();
        assert_eq!(err.offset(), 2);
    }

    #[test]
    fn error_offsets() {
        assert_eq!(parse("x^2.5").unwrap_err(), ParseError::NonIntegerExponent { offset: 2 });
        assert_eq!(parse("x^-1").unwrap_err(), ParseError::NonIntegerExponent { offset: 2 });
        assert!(matches!(parse("2*y").unwrap_err(), ParseError::UnknownIdentifier { offset: 2, .. }));
        assert!(matches!(parse("(x+1").unwrap_err(), ParseError::UnexpectedEnd { offset: 4, .. }));
        assert!(matches!(parse("x x").unwrap_err(), ParseError::UnexpectedChar { offset: 2, .. }));
        assert!(matches!(parse("--x").unwrap_err(), ParseError::UnexpectedChar { offset: 1, .. }));
        assert!(matches!(parse("").unwrap_err(), ParseError::UnexpectedEnd { offset: 0, .. }));
        assert!(matches!(parse("1e").unwrap_err(), ParseError::InvalidNumber { offset: 0 }));
    }

    #[test]
    fn unary_minus_binds_looser_than_power() {
        let m = PotentialModel::parse("-x^2").unwrap();
        assert_eq!(m.value(3.0), -9.0);
        let m = PotentialModel::parse("2*-x + 1e-1").unwrap();
        assert!((m.value(1.0) + 1.9).abs() < 1e-15);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let m = PotentialModel::parse("1/x").unwrap();
        assert_eq!(m.try_value(0.0), Err(EvalError::DivisionByZero { x: 0.0 }));
        assert!(m.value(0.0).is_nan());
        assert!(m.try_value(2.0).is_ok());
    }

    #[test]
    fn builtins() {
        let t = PotentialModel::builtin("tilted_double_well", Some(0.1)).unwrap();
        assert!((t.value(2.0) - (9.0 + 0.2)).abs() < 1e-14);
        let t = PotentialModel::builtin("tilted_double_well", Some(-0.25)).unwrap();
        assert!((t.value(2.0) - (9.0 - 0.5)).abs() < 1e-14);
        assert!(PotentialModel::builtin("tilted_double_well", None).is_err());
        assert!(PotentialModel::builtin("morse", None).is_err());
        assert_eq!(PotentialModel::builtin("quartic", None).unwrap().value(2.0), 16.0);
    }

    #[test]
    fn printer_examples() {
        let cases = [
            ("(x^2-1)^2", "(x^2 - 1)^2"),
            ("x-(x-1)", "x - (x - 1)"),
            ("x/(x*2)", "x/(x*2)"),
            ("-(-x)", "-(-x)"),
            ("cosh(x)^2", "cosh(x)^2"),
            ("(-x)^2", "(-x)^2"),
            ("1/cosh(x)^2", "1/cosh(x)^2"),
        ];
        for (src, want) in cases {
            assert_eq!(parse(src).unwrap().to_string(), want);
        }
        let neg = Expr::Mul(Box::new(Expr::Const(-0.5)), Box::new(Expr::Var));
        let reparsed = parse(&neg.to_string()).unwrap();
        assert_eq!(reparsed.to_string(), neg.to_string());
        assert_eq!(reparsed.eval_f64(3.0), -1.5);
    }
}
