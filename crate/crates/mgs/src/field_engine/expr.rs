//! Closed-form scalar expressions in the chart coordinates x1, x2, x3.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Add(FieldExpr, FieldExpr),
    Sub(FieldExpr, FieldExpr),
    Mul(FieldExpr, FieldExpr),
    Div(FieldExpr, FieldExpr),
    Pow(FieldExpr, i32),
    Neg(FieldExpr),
    Call(Func, FieldExpr),
}

/// Immutable expression tree; clones share structure.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldExpr(Arc<Node>);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("{what} at ({}, {}, {})", point[0], point[1], point[2])]
    Domain { what: String, point: [f64; 3] },
}

impl FieldExpr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(n: Node) -> Self {
        FieldExpr(Arc::new(n))
    }

    pub fn constant(c: f64) -> Self {
        Self::wrap(Node::Const(c))
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    /// Coordinate x^{i+1} (0-based axis).
    pub fn var(i: usize) -> Self {
        assert!(i < 3);
        Self::wrap(Node::Var(i))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if n == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if c != 0.0 || n > 0 {
                return Self::constant(c.powi(n));
            }
        }
        Self::wrap(Node::Pow(self.clone(), n))
    }

    pub fn call(f: Func, arg: &FieldExpr) -> Self {
        if let Some(c) = arg.as_const() {
            let v = match f {
                Func::Sin => Some(c.sin()),
                Func::Cos => Some(c.cos()),
                Func::Exp => Some(c.exp()),
                Func::Tan if c.cos() != 0.0 => Some(c.tan()),
                Func::Log if c > 0.0 => Some(c.ln()),
                Func::Sqrt if c >= 0.0 => Some(c.sqrt()),
                _ => None,
            };
            if let Some(v) = v.filter(|v| v.is_finite()) {
                return Self::constant(v);
            }
        }
        Self::wrap(Node::Call(f, arg.clone()))
    }

    pub fn sin(&self) -> Self {
        Self::call(Func::Sin, self)
    }
    pub fn cos(&self) -> Self {
        Self::call(Func::Cos, self)
    }
    pub fn exp(&self) -> Self {
        Self::call(Func::Exp, self)
    }
    pub fn ln(&self) -> Self {
        Self::call(Func::Log, self)
    }
    pub fn sqrt(&self) -> Self {
        Self::call(Func::Sqrt, self)
    }

    /// Exact partial derivative along axis i (0-based).
    pub fn diff(&self, i: usize) -> FieldExpr {
        match &*self.0 {
            Node::Const(_) => Self::zero(),
            Node::Var(j) => Self::constant(if *j == i { 1.0 } else { 0.0 }),
            Node::Add(a, b) => a.diff(i) + b.diff(i),
            Node::Sub(a, b) => a.diff(i) - b.diff(i),
            Node::Neg(a) => -a.diff(i),
            Node::Mul(a, b) => a.diff(i) * b + a * b.diff(i),
            Node::Div(a, b) => {
                let da = a.diff(i);
                let db = b.diff(i);
                da / b - a * db / b.powi(2)
            }
            Node::Pow(a, n) => Self::constant(*n as f64) * a.powi(n - 1) * a.diff(i),
            Node::Call(f, a) => {
                let da = a.diff(i);
                if da.is_zero() {
                    return Self::zero();
                }
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => -a.sin(),
                    Func::Tan => Self::one() / a.cos().powi(2),
                    Func::Exp => a.exp(),
                    Func::Log => Self::one() / a,
                    Func::Sqrt => Self::one() / (Self::constant(2.0) * a.sqrt()),
                };
                outer * da
            }
        }
    }

    /// Evaluate at a point; domain violations are reported, never NaN.
    pub fn eval(&self, p: &[f64; 3]) -> Result<f64, EvalError> {
        let err = |what: &str| EvalError::Domain { what: what.to_string(), point: *p };
        let v = match &*self.0 {
            Node::Const(c) => *c,
            Node::Var(j) => p[*j],
            Node::Add(a, b) => a.eval(p)? + b.eval(p)?,
            Node::Sub(a, b) => a.eval(p)? - b.eval(p)?,
            Node::Neg(a) => -a.eval(p)?,
            Node::Mul(a, b) => a.eval(p)? * b.eval(p)?,
            Node::Div(a, b) => {
                let d = b.eval(p)?;
                if d == 0.0 {
                    return Err(err("division by zero"));
                }
                a.eval(p)? / d
            }
            Node::Pow(a, n) => {
                let x = a.eval(p)?;
                if x == 0.0 && *n < 0 {
                    return Err(err("negative power of zero"));
                }
                x.powi(*n)
            }
            Node::Call(f, a) => {
                let x = a.eval(p)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Tan => {
                        if x.cos().abs() < 1e-300 {
                            return Err(err("tan pole"));
                        }
                        x.tan()
                    }
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(err("log of non-positive value"));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(err("sqrt of negative value"));
                        }
                        x.sqrt()
                    }
                }
            }
        };
        if !v.is_finite() {
            return Err(err("non-finite value"));
        }
        Ok(v)
    }

    /// Number of nodes counted as a tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match &*self.0 {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => 1 + a.size() + b.size(),
            Node::Pow(a, _) | Node::Neg(a) | Node::Call(_, a) => 1 + a.size(),
        }
    }

    fn precedence(&self) -> u8 {
        match &*self.0 {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Pow(..) => 3,
            Node::Const(c) if *c < 0.0 => 4,
            Node::Neg(_) => 4,
            _ => 5,
        }
    }
}

fn add(a: &FieldExpr, b: &FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => FieldExpr::constant(x + y),
        (Some(0.0), _) => b.clone(),
        (_, Some(0.0)) => a.clone(),
        _ => FieldExpr::wrap(Node::Add(a.clone(), b.clone())),
    }
}

fn sub(a: &FieldExpr, b: &FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => FieldExpr::constant(x - y),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a.clone(),
        _ => FieldExpr::wrap(Node::Sub(a.clone(), b.clone())),
    }
}

fn mul(a: &FieldExpr, b: &FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => FieldExpr::constant(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => FieldExpr::zero(),
        (Some(1.0), _) => b.clone(),
        (_, Some(1.0)) => a.clone(),
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => FieldExpr::wrap(Node::Mul(a.clone(), b.clone())),
    }
}

fn div(a: &FieldExpr, b: &FieldExpr) -> FieldExpr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => FieldExpr::constant(x / y),
        (Some(0.0), _) => FieldExpr::zero(),
        (_, Some(1.0)) => a.clone(),
        _ => FieldExpr::wrap(Node::Div(a.clone(), b.clone())),
    }
}

fn neg(a: &FieldExpr) -> FieldExpr {
    match &*a.0 {
        Node::Const(c) => FieldExpr::constant(-c),
        Node::Neg(inner) => inner.clone(),
        _ => FieldExpr::wrap(Node::Neg(a.clone())),
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $f:ident) => {
        impl $tr<FieldExpr> for FieldExpr {
            type Output = FieldExpr;
            fn $m(self, rhs: FieldExpr) -> FieldExpr {
                $f(&self, &rhs)
            }
        }
        impl $tr<&FieldExpr> for FieldExpr {
            type Output = FieldExpr;
            fn $m(self, rhs: &FieldExpr) -> FieldExpr {
                $f(&self, rhs)
            }
        }
        impl $tr<FieldExpr> for &FieldExpr {
            type Output = FieldExpr;
            fn $m(self, rhs: FieldExpr) -> FieldExpr {
                $f(self, &rhs)
            }
        }
        impl $tr<&FieldExpr> for &FieldExpr {
            type Output = FieldExpr;
            fn $m(self, rhs: &FieldExpr) -> FieldExpr {
                $f(self, rhs)
            }
        }
        impl $tr<f64> for FieldExpr {
            type Output = FieldExpr;
            fn $m(self, rhs: f64) -> FieldExpr {
                $f(&self, &FieldExpr::constant(rhs))
            }
        }
        impl $tr<f64> for &FieldExpr {
            type Output = FieldExpr;
            fn $m(self, rhs: f64) -> FieldExpr {
                $f(self, &FieldExpr::constant(rhs))
            }
        }
    };
}

binop!(Add, add, add);
binop!(Sub, sub, sub);
binop!(Mul, mul, mul);
binop!(Div, div, div);

impl Neg for FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        neg(&self)
    }
}

impl Neg for &FieldExpr {
    type Output = FieldExpr;
    fn neg(self) -> FieldExpr {
        neg(self)
    }
}

impl From<f64> for FieldExpr {
    fn from(c: f64) -> Self {
        FieldExpr::constant(c)
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Operands at the same precedence on the right get parentheses so
        // the printed form reparses to the same tree.
        let paren = |e: &FieldExpr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match &*self.0 {
            Node::Const(c) => write!(f, "{c}"),
            Node::Var(j) => write!(f, "x{}", j + 1),
            Node::Add(a, b) => {
                paren(a, 1, f)?;
                write!(f, " + ")?;
                paren(b, 2, f)
            }
            Node::Sub(a, b) => {
                paren(a, 1, f)?;
                write!(f, " - ")?;
                paren(b, 2, f)
            }
            Node::Mul(a, b) => {
                paren(a, 2, f)?;
                write!(f, "*")?;
                paren(b, 3, f)
            }
            Node::Div(a, b) => {
                paren(a, 2, f)?;
                write!(f, "/")?;
                paren(b, 3, f)
            }
            Node::Pow(a, n) => {
                paren(a, 4, f)?;
                write!(f, "^{n}")
            }
            Node::Neg(a) => {
                write!(f, "-")?;
                paren(a, 4, f)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn syntax(&self, offset: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { offset, message: message.into() }
    }

    fn expr(&mut self) -> Result<FieldExpr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.peek() {
            match c {
                b'+' => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = lhs + rhs;
                }
                b'-' => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    lhs = lhs - rhs;
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<FieldExpr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(c) = self.peek() {
            match c {
                b'*' => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = lhs * rhs;
                }
                b'/' => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    lhs = lhs / rhs;
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<FieldExpr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            if self.bytes.get(self.pos) == Some(&b'-') {
                self.pos += 1;
            }
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let text = &self.src[start..self.pos];
            let n: i32 = text.parse().map_err(|_| self.syntax(start, "expected an integer exponent"))?;
            return Ok(base.powi(n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<FieldExpr, ParseError> {
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.syntax(self.pos, "unexpected end of input")),
        };
        let start = self.pos;
        if c == b'-' {
            self.pos += 1;
            return Ok(-self.base()?);
        }
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.syntax(self.pos, "expected ')'"));
            }
            self.pos += 1;
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let name = &self.src[start..self.pos];
            match name {
                "x1" => return Ok(FieldExpr::var(0)),
                "x2" => return Ok(FieldExpr::var(1)),
                "x3" => return Ok(FieldExpr::var(2)),
                _ => {}
            }
            let func = Func::from_name(name)
                .ok_or_else(|| ParseError::UnknownIdentifier { offset: start, name: name.to_string() })?;
            if self.peek() != Some(b'(') {
                return Err(self.syntax(self.pos, format!("expected '(' after {name}")));
            }
            self.pos += 1;
            let arg = self.expr()?;
            if self.peek() != Some(b')') {
                return Err(self.syntax(self.pos, "expected ')'"));
            }
            self.pos += 1;
            return Ok(FieldExpr::call(func, &arg));
        }
        Err(self.syntax(start, format!("unexpected character '{}'", c as char)))
    }

    fn number(&mut self) -> Result<FieldExpr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            while p.pos < p.bytes.len() && p.bytes[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
        };
        digits(self);
        if self.bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            digits(self);
        }
        if matches!(self.bytes.get(self.pos), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let before = self.pos;
            digits(self);
            if self.pos == before {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(FieldExpr::constant)
            .map_err(|_| self.syntax(start, format!("bad number '{text}'")))
    }
}

/// Parse the expression grammar
/// `expr := term (('+'|'-') term)*`, `term := factor (('*'|'/') factor)*`,
/// `factor := base ('^' integer)?`,
/// `base := number | x1 | x2 | x3 | func '(' expr ')' | '(' expr ')' | '-' base`.
pub fn parse(src: &str) -> Result<FieldExpr, ParseError> {
    let mut p = Parser { src, bytes: src.as_bytes(), pos: 0 };
    let e = p.expr()?;
    if let Some(c) = p.peek() {
        return Err(p.syntax(p.pos, format!("unexpected '{}'", c as char)));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_values() {
        let e = parse("x2*sin(x1) + 3").unwrap();
        let v = e.eval(&[std::f64::consts::FRAC_PI_2, 2.0, 0.0]).unwrap();
        assert!((v - 5.0).abs() < 1e-15);
        let e = parse("x1^2 - -x3").unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 2.0]).unwrap(), 11.0);
        let e = parse("-x1^2").unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0]).unwrap(), 9.0);
        let e = parse("2^-1 + 1e-1").unwrap();
        assert!((e.eval(&[0.0; 3]).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(
            parse("foo(x1)").unwrap_err(),
            ParseError::UnknownIdentifier { offset: 0, name: "foo".into() }
        );
        assert_eq!(parse("x1 + * 2").unwrap_err().offset(), 5);
        assert_eq!(parse("(x1").unwrap_err().offset(), 3);
        assert!(parse("").is_err());
    }

    #[test]
    fn round_trip() {
        for s in ["x1 - (x2 - x3)", "x1/(x2*x3)", "(x1 + 1)^3", "-(x1 + x2)", "x1*-3", "exp(-x1)*cos(x2/2)"] {
            let e = parse(s).unwrap();
            let again = parse(&e.to_string()).unwrap();
            assert_eq!(e, again, "{s} -> {e}");
        }
    }

    #[test]
    fn derivatives() {
        assert_eq!(parse("x1*x2").unwrap().diff(0).to_string(), "x2");
        assert_eq!(parse("exp(x3)").unwrap().diff(2).eval(&[0.0; 3]).unwrap(), 1.0);
        let lb = parse("log(exp(x1*x3))").unwrap().diff(0).diff(2);
        for p in [[0.1, 0.2, 0.3], [1.0, -1.0, 0.5]] {
            assert!((lb.eval(&p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(parse("log(x1)").unwrap().eval(&[0.0; 3]).is_err());
        assert!(parse("1/x1").unwrap().eval(&[0.0; 3]).is_err());
        assert!(parse("sqrt(x1)").unwrap().eval(&[-1.0, 0.0, 0.0]).is_err());
    }
}
