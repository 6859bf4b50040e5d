//! Analytic-function expressions in `z` (alias `lambda`) and `h`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := "-" unary | power
//! power   := primary ("^" INTEGER)*
//! primary := NUMBER | NUMBER "i" | "i" | "z" | "lambda" | "h"
//!          | "exp" "(" expr ")" | "(" expr ")"
//! ```
//!
//! Whitespace is ignored. Exponents are integer literals in `0..=64`.

use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

pub const MAX_EXPONENT: u32 = 64;
/// Denominators with smaller modulus are rejected at evaluation time.
pub const DIVISION_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variable {
    /// The spectral variable, written `z` or `lambda`.
    Lambda,
    H,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FuncExpr {
    Var(Variable),
    Const(Complex64),
    Add(Box<FuncExpr>, Box<FuncExpr>),
    Sub(Box<FuncExpr>, Box<FuncExpr>),
    Mul(Box<FuncExpr>, Box<FuncExpr>),
    Div(Box<FuncExpr>, Box<FuncExpr>),
    IntPow(Box<FuncExpr>, u32),
    Exp(Box<FuncExpr>),
    Neg(Box<FuncExpr>),
    Paren(Box<FuncExpr>),
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("parse error at byte {offset}: expected {}, found {found}", .expected.join(" | "))]
pub struct ParseError {
    pub offset: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("division by a denominator of modulus {0:e}")]
    DivisionNearZero(f64),
    #[error("unbound variable `{0}`")]
    UnboundVariable(&'static str),
}

/// Values for the free variables of an expression.
#[derive(Clone, Copy, Debug, Default)]
pub struct Bindings {
    pub lambda: Option<Complex64>,
    pub h: Option<Complex64>,
}

impl Bindings {
    pub fn lambda(z: Complex64) -> Self {
        Bindings {
            lambda: Some(z),
            h: None,
        }
    }

    pub fn h(h: f64) -> Self {
        Bindings {
            lambda: None,
            h: Some(Complex64::new(h, 0.0)),
        }
    }
}

impl FuncExpr {
    pub fn parse(src: &str) -> Result<FuncExpr, ParseError> {
        parse_expr(src)
    }

    pub fn eval(&self, b: &Bindings) -> Result<Complex64, EvalError> {
        Ok(match self {
            FuncExpr::Var(Variable::Lambda) => b.lambda.ok_or(EvalError::UnboundVariable("z"))?,
            FuncExpr::Var(Variable::H) => b.h.ok_or(EvalError::UnboundVariable("h"))?,
            FuncExpr::Const(c) => *c,
            FuncExpr::Add(l, r) => l.eval(b)? + r.eval(b)?,
            FuncExpr::Sub(l, r) => l.eval(b)? - r.eval(b)?,
            FuncExpr::Mul(l, r) => l.eval(b)? * r.eval(b)?,
            FuncExpr::Div(l, r) => {
                let num = l.eval(b)?;
                let den = r.eval(b)?;
                if den.norm() < DIVISION_FLOOR {
                    return Err(EvalError::DivisionNearZero(den.norm()));
                }
                num / den
            }
            FuncExpr::IntPow(base, e) => base.eval(b)?.powu(*e),
            FuncExpr::Exp(x) => x.eval(b)?.exp(),
            FuncExpr::Neg(x) => -x.eval(b)?,
            FuncExpr::Paren(x) => x.eval(b)?,
        })
    }

    /// Evaluates with only the spectral variable bound.
    pub fn eval_at(&self, z: Complex64) -> Result<Complex64, EvalError> {
        self.eval(&Bindings::lambda(z))
    }

    pub fn uses(&self, var: Variable) -> bool {
        match self {
            FuncExpr::Var(v) => *v == var,
            FuncExpr::Const(_) => false,
            FuncExpr::Add(l, r) | FuncExpr::Sub(l, r) | FuncExpr::Mul(l, r) | FuncExpr::Div(l, r) => {
                l.uses(var) || r.uses(var)
            }
            FuncExpr::IntPow(x, _) | FuncExpr::Exp(x) | FuncExpr::Neg(x) | FuncExpr::Paren(x) => x.uses(var),
        }
    }

    fn is_atom(&self) -> bool {
        matches!(self, FuncExpr::Var(_) | FuncExpr::Exp(_) | FuncExpr::Paren(_))
            || matches!(self, FuncExpr::Const(c) if c.re >= 0.0 && c.im >= 0.0 && (c.re == 0.0 || c.im == 0.0))
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &FuncExpr) -> fmt::Result {
    if e.is_atom() {
        write!(f, "{e}")
    } else {
        write!(f, "({e})")
    }
}

impl fmt::Display for FuncExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncExpr::Var(Variable::Lambda) => write!(f, "z"),
            FuncExpr::Var(Variable::H) => write!(f, "h"),
            FuncExpr::Const(c) => {
                if c.im == 0.0 && c.re >= 0.0 {
                    write!(f, "{:?}", c.re)
                } else if c.re == 0.0 && c.im >= 0.0 {
                    write!(f, "{:?}i", c.im)
                } else {
                    write!(f, "({:?}+{:?}i)", c.re, c.im)
                }
            }
            FuncExpr::Add(l, r) | FuncExpr::Sub(l, r) | FuncExpr::Mul(l, r) | FuncExpr::Div(l, r) => {
                let op = match self {
                    FuncExpr::Add(..) => "+",
                    FuncExpr::Sub(..) => "-",
                    FuncExpr::Mul(..) => "*",
                    _ => "/",
                };
                write_operand(f, l)?;
                write!(f, " {op} ")?;
                write_operand(f, r)
            }
            FuncExpr::IntPow(x, e) => {
                write_operand(f, x)?;
                write!(f, "^{e}")
            }
            FuncExpr::Exp(x) => write!(f, "exp({x})"),
            FuncExpr::Neg(x) => {
                write!(f, "-")?;
                write_operand(f, x)
            }
            FuncExpr::Paren(x) => write!(f, "({x})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(f64),
    Real(f64),
    Imag(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Int(x) | Tok::Real(x) => format!("number {x}"),
            Tok::Imag(x) => format!("imaginary literal {x}i"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match ch {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                let mut j = i;
                let mut integral = true;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'.' {
                    integral = false;
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        integral = false;
                        while k < bytes.len() && bytes[k].is_ascii_digit() {
                            k += 1;
                        }
                        j = k;
                    }
                }
                let text = &src[i..j];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    expected: vec!["number".into()],
                    found: format!("`{text}`"),
                })?;
                i = j;
                if i < bytes.len() && bytes[i] == b'i' && !ident_continues(bytes, i + 1) {
                    i += 1;
                    out.push((start, Tok::Imag(value)));
                } else if integral {
                    out.push((start, Tok::Int(value)));
                } else {
                    out.push((start, Tok::Real(value)));
                }
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i;
                while ident_continues(bytes, j) {
                    j += 1;
                }
                out.push((start, Tok::Ident(src[i..j].to_string())));
                i = j;
                continue;
            }
            _ => {
                let found = src[i..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    expected: vec!["expression".into()],
                    found: format!("`{found}`"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

fn ident_continues(bytes: &[u8], i: usize) -> bool {
    i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<FuncExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = FuncExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = FuncExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<FuncExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = FuncExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = FuncExpr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<FuncExpr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(FuncExpr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<FuncExpr, ParseError> {
        let mut base = self.primary()?;
        while *self.peek() == Tok::Caret {
            self.bump();
            match self.peek().clone() {
                Tok::Int(v) if v <= MAX_EXPONENT as f64 => {
                    self.bump();
                    base = FuncExpr::IntPow(Box::new(base), v as u32);
                }
                _ => return Err(self.error(&["integer exponent in 0..=64"])),
            }
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<FuncExpr, ParseError> {
        const EXPECTED: &[&str] = &["number", "`z`", "`lambda`", "`h`", "`i`", "`exp`", "`(`", "`-`"];
        let tok = self.peek().clone();
        match tok {
            Tok::Int(v) | Tok::Real(v) => {
                self.bump();
                Ok(FuncExpr::Const(Complex64::new(v, 0.0)))
            }
            Tok::Imag(v) => {
                self.bump();
                Ok(FuncExpr::Const(Complex64::new(0.0, v)))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(FuncExpr::Paren(Box::new(inner)))
            }
            Tok::Ident(name) => match name.as_str() {
                "z" | "lambda" => {
                    self.bump();
                    Ok(FuncExpr::Var(Variable::Lambda))
                }
                "h" => {
                    self.bump();
                    Ok(FuncExpr::Var(Variable::H))
                }
                "i" => {
                    self.bump();
                    Ok(FuncExpr::Const(Complex64::new(0.0, 1.0)))
                }
                "exp" => {
                    self.bump();
                    if *self.peek() != Tok::LParen {
                        return Err(self.error(&["`(`"]));
                    }
                    self.bump();
                    let inner = self.expr()?;
                    self.expect_rparen()?;
                    Ok(FuncExpr::Exp(Box::new(inner)))
                }
                _ => Err(self.error(EXPECTED)),
            },
            _ => Err(self.error(EXPECTED)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&["`)`", "operator"]))
        }
    }
}

/// Parses `src` into an expression tree.
pub fn parse_expr(src: &str) -> Result<FuncExpr, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(&["operator", "end of input"]));
    }
    Ok(e)
}

pub fn eval_expr(f: &FuncExpr, bindings: &Bindings) -> Result<Complex64, EvalError> {
    f.eval(bindings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Box<FuncExpr> {
        Box::new(FuncExpr::Var(Variable::Lambda))
    }

    fn k(v: f64) -> Box<FuncExpr> {
        Box::new(FuncExpr::Const(Complex64::new(v, 0.0)))
    }

    #[test]
    fn parses_examples() {
        assert_eq!(parse_expr("z^2").unwrap(), FuncExpr::IntPow(z(), 2));
        assert_eq!(
            parse_expr("exp(z) - 1").unwrap(),
            FuncExpr::Sub(Box::new(FuncExpr::Exp(z())), k(1.0))
        );
        assert_eq!(
            parse_expr("2+h").unwrap(),
            FuncExpr::Add(k(2.0), Box::new(FuncExpr::Var(Variable::H)))
        );
    }

    #[test]
    fn precedence_and_associativity() {
        // -z^2 is -(z^2)
        assert_eq!(
            parse_expr("-z^2").unwrap(),
            FuncExpr::Neg(Box::new(FuncExpr::IntPow(z(), 2)))
        );
        // 1-2-3 is (1-2)-3
        let v = parse_expr("1 - 2 - 3").unwrap().eval(&Bindings::default()).unwrap();
        assert_eq!(v, Complex64::new(-4.0, 0.0));
        let v = parse_expr("8/2/2").unwrap().eval(&Bindings::default()).unwrap();
        assert_eq!(v, Complex64::new(2.0, 0.0));
        let v = parse_expr("2*3^2").unwrap().eval(&Bindings::default()).unwrap();
        assert_eq!(v, Complex64::new(18.0, 0.0));
    }

    #[test]
    fn complex_literals() {
        let v = parse_expr("1+2.5i").unwrap().eval(&Bindings::default()).unwrap();
        assert_eq!(v, Complex64::new(1.0, 2.5));
        let v = parse_expr("i*i").unwrap().eval(&Bindings::default()).unwrap();
        assert_eq!(v, Complex64::new(-1.0, 0.0));
        let v = parse_expr("1e-3").unwrap().eval(&Bindings::default()).unwrap();
        assert_eq!(v, Complex64::new(1e-3, 0.0));
    }

    #[test]
    fn evaluation_examples() {
        let sq = parse_expr("z^2").unwrap();
        assert_eq!(sq.eval_at(Complex64::new(1.0, 1.0)).unwrap(), Complex64::new(0.0, 2.0));
        let e = parse_expr("exp(lambda)").unwrap();
        assert_eq!(e.eval_at(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn evaluation_errors() {
        let f = parse_expr("1/(z-1)").unwrap();
        assert!(matches!(
            f.eval_at(Complex64::new(1.0, 0.0)),
            Err(EvalError::DivisionNearZero(_))
        ));
        let g = parse_expr("z + h").unwrap();
        assert_eq!(g.eval(&Bindings::h(0.5)), Err(EvalError::UnboundVariable("z")));
    }

    #[test]
    fn parse_errors_report_offsets() {
        let err = parse_expr("z + * 2").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_expr("z^2.5").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse_expr("z^65").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse_expr("exp z").unwrap_err();
        assert_eq!(err.offset, 4);
        let err = parse_expr("(z + 1").unwrap_err();
        assert_eq!(err.offset, 6);
        assert!(err.expected.iter().any(|e| e == "`)`"));
        let err = parse_expr("sin(z)").unwrap_err();
        assert_eq!(err.offset, 0);
        let err = parse_expr("z $").unwrap_err();
        assert_eq!(err.offset, 2);
        let err = parse_expr("z z").unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn display_reparses_to_same_value() {
        for src in ["z^2", "exp(z) - 1", "-(z+1)^3 / (2 - z)", "1.5i*z - -h", "2^2^3"] {
            let e = parse_expr(src).unwrap();
            let again = parse_expr(&e.to_string()).unwrap();
            let b = Bindings {
                lambda: Some(Complex64::new(0.3, -0.7)),
                h: Some(Complex64::new(0.25, 0.0)),
            };
            assert_eq!(e.eval(&b).unwrap(), again.eval(&b).unwrap(), "{src} -> {e}");
        }
    }
}
