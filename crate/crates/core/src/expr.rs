//! A small arithmetic grammar for coefficient fields such as `V(x)`.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number ['pi'] | 'pi' | 'x' | 'y' | 'r'
//!         | ('exp' | 'ln') '(' expr ')' | '(' expr ')'
//! ```
//!
//! `x` and `y` are ambient coordinates and `r = sqrt(x² + y²)`. A number
//! directly followed by `pi` denotes that multiple of π, so `6pi` is 6π.

use crate::{Error, Result};
use std::fmt;

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    R,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Ln(Box<Expr>),
}

/// Value together with its gradient in `(x, y)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; 2],
}

impl Dual {
    fn cst(v: f64) -> Self {
        Dual { v, d: [0.0; 2] }
    }
    fn scale(self, s: f64) -> [f64; 2] {
        [self.d[0] * s, self.d[1] * s]
    }
}

impl Expr {
    /// Parses an expression string.
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { s: src.as_bytes(), i: 0 };
        p.ws();
        if p.i >= p.s.len() {
            return Err(p.err("empty expression"));
        }
        let e = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(e)
    }

    /// The constant expression `c`.
    pub fn constant(c: f64) -> Expr {
        Expr::Num(c)
    }

    /// Evaluates at an ambient point.
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        self.eval_grad(p).v
    }

    /// Evaluates value and gradient by forward differentiation.
    pub fn eval_grad(&self, p: [f64; 2]) -> Dual {
        use Expr::*;
        match self {
            Num(c) => Dual::cst(*c),
            X => Dual { v: p[0], d: [1.0, 0.0] },
            Y => Dual { v: p[1], d: [0.0, 1.0] },
            R => {
                let r = p[0].hypot(p[1]);
                if r == 0.0 {
                    Dual::cst(0.0)
                } else {
                    Dual { v: r, d: [p[0] / r, p[1] / r] }
                }
            }
            Neg(a) => {
                let a = a.eval_grad(p);
                Dual { v: -a.v, d: a.scale(-1.0) }
            }
            Add(a, b) => {
                let (a, b) = (a.eval_grad(p), b.eval_grad(p));
                Dual { v: a.v + b.v, d: [a.d[0] + b.d[0], a.d[1] + b.d[1]] }
            }
            Sub(a, b) => {
                let (a, b) = (a.eval_grad(p), b.eval_grad(p));
                Dual { v: a.v - b.v, d: [a.d[0] - b.d[0], a.d[1] - b.d[1]] }
            }
            Mul(a, b) => {
                let (a, b) = (a.eval_grad(p), b.eval_grad(p));
                Dual {
                    v: a.v * b.v,
                    d: [a.d[0] * b.v + a.v * b.d[0], a.d[1] * b.v + a.v * b.d[1]],
                }
            }
            Div(a, b) => {
                let (a, b) = (a.eval_grad(p), b.eval_grad(p));
                let q = a.v / b.v;
                Dual {
                    v: q,
                    d: [(a.d[0] - q * b.d[0]) / b.v, (a.d[1] - q * b.d[1]) / b.v],
                }
            }
            Pow(a, b) => {
                let (a, b) = (a.eval_grad(p), b.eval_grad(p));
                if b.d == [0.0, 0.0] {
                    let v = a.v.powf(b.v);
                    let s = if b.v == 0.0 { 0.0 } else { b.v * a.v.powf(b.v - 1.0) };
                    Dual { v, d: a.scale(s) }
                } else {
                    let v = a.v.powf(b.v);
                    let la = a.v.ln();
                    Dual {
                        v,
                        d: [
                            v * (b.d[0] * la + b.v * a.d[0] / a.v),
                            v * (b.d[1] * la + b.v * a.d[1] / a.v),
                        ],
                    }
                }
            }
            Exp(a) => {
                let a = a.eval_grad(p);
                let v = a.v.exp();
                Dual { v, d: a.scale(v) }
            }
            Ln(a) => {
                let a = a.eval_grad(p);
                Dual { v: a.v.ln(), d: a.scale(1.0 / a.v) }
            }
        }
    }

    /// True when the expression does not depend on the point.
    pub fn is_constant(&self) -> bool {
        use Expr::*;
        match self {
            Num(_) => true,
            X | Y | R => false,
            Neg(a) | Exp(a) | Ln(a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => a.is_constant() && b.is_constant(),
        }
    }

    fn prec(&self) -> u8 {
        use Expr::*;
        match self {
            Add(..) | Sub(..) => 1,
            Mul(..) | Div(..) => 2,
            Neg(..) => 3,
            Pow(..) => 4,
            _ => 5,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Expr::*;
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, min: u8| -> fmt::Result {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Num(c) => {
                if *c < 0.0 {
                    write!(f, "({c:?})")
                } else {
                    write!(f, "{c:?}")
                }
            }
            X => write!(f, "x"),
            Y => write!(f, "y"),
            R => write!(f, "r"),
            Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, 4)
            }
            Add(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " + ")?;
                wrap(f, b, 2)
            }
            Sub(a, b) => {
                wrap(f, a, 1)?;
                write!(f, " - ")?;
                wrap(f, b, 2)
            }
            Mul(a, b) => {
                wrap(f, a, 2)?;
                write!(f, " * ")?;
                wrap(f, b, 3)
            }
            Div(a, b) => {
                wrap(f, a, 2)?;
                write!(f, " / ")?;
                wrap(f, b, 3)
            }
            Pow(a, b) => {
                wrap(f, a, 5)?;
                write!(f, "^")?;
                wrap(f, b, 4)
            }
            Exp(a) => write!(f, "exp({a})"),
            Ln(a) => write!(f, "ln({a})"),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse { line: 1, col: self.i + 1, message: msg.to_string() }
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn keyword(&mut self, kw: &str) -> bool {
        self.ws();
        let k = kw.as_bytes();
        if self.s[self.i..].starts_with(k) {
            let next = self.s.get(self.i + k.len());
            if next.is_none_or(|c| !c.is_ascii_alphanumeric() && *c != b'_') {
                self.i += k.len();
                return true;
            }
        }
        false
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.i += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.i += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.i += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.i += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.i += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let e = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(e)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of expression")),
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.i += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_digit() || self.s[self.i] == b'.') {
                    self.i += 1;
                }
                if self.i < self.s.len() && (self.s[self.i] == b'e' || self.s[self.i] == b'E') {
                    let save = self.i;
                    self.i += 1;
                    if self.i < self.s.len() && (self.s[self.i] == b'+' || self.s[self.i] == b'-') {
                        self.i += 1;
                    }
                    if self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                            self.i += 1;
                        }
                    } else {
                        self.i = save;
                    }
                }
                let txt = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                let v: f64 = txt.parse().map_err(|_| {
                    Error::Parse { line: 1, col: start + 1, message: format!("bad number '{txt}'") }
                })?;
                if self.s[self.i..].starts_with(b"pi") {
                    self.i += 2;
                    return Ok(Expr::Num(v * std::f64::consts::PI));
                }
                Ok(Expr::Num(v))
            }
            Some(_) => {
                for (kw, ctor) in [("exp", Expr::Exp as fn(Box<Expr>) -> Expr), ("ln", Expr::Ln)] {
                    if self.keyword(kw) {
                        if self.peek() != Some(b'(') {
                            return Err(self.err("expected '(' after function name"));
                        }
                        self.i += 1;
                        let e = self.expr()?;
                        if self.peek() != Some(b')') {
                            return Err(self.err("expected ')'"));
                        }
                        self.i += 1;
                        return Ok(ctor(Box::new(e)));
                    }
                }
                if self.keyword("pi") {
                    return Ok(Expr::Num(std::f64::consts::PI));
                }
                if self.keyword("x") {
                    return Ok(Expr::X);
                }
                if self.keyword("y") {
                    return Ok(Expr::Y);
                }
                if self.keyword("r") {
                    return Ok(Expr::R);
                }
                Err(self.err("unknown token"))
            }
        }
    }
}

/// Parses a positive real that may carry a `pi` suffix, as in `40pi`.
pub fn parse_pi_literal(s: &str) -> Result<f64> {
    let e = Expr::parse(s)?;
    if !e.is_constant() {
        return Err(Error::Parse { line: 1, col: 1, message: format!("'{s}' is not a constant") });
    }
    Ok(e.eval([0.0, 0.0]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pi_literals() {
        assert!((parse_pi_literal("6pi").unwrap() - 6.0 * PI).abs() < 1e-15);
        assert!((parse_pi_literal("40pi").unwrap() - 40.0 * PI).abs() < 1e-13);
        assert!((parse_pi_literal("pi").unwrap() - PI).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_powers() {
        let e = Expr::parse("1 + 2*x^2 - y/4").unwrap();
        assert!((e.eval([3.0, 8.0]) - (1.0 + 18.0 - 2.0)).abs() < 1e-14);
        let e = Expr::parse("2^3^2").unwrap();
        assert_eq!(e.eval([0.0, 0.0]), 512.0);
        let e = Expr::parse("-x^2").unwrap();
        assert_eq!(e.eval([3.0, 0.0]), -9.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let e = Expr::parse("exp(0.3*x - y^2) * (2 + x*y) + ln(2 + r^2)").unwrap();
        let p = [0.3, -0.4];
        let g = e.eval_grad(p);
        let h = 1e-6;
        for k in 0..2 {
            let mut a = p;
            let mut b = p;
            a[k] += h;
            b[k] -= h;
            let fd = (e.eval(a) - e.eval(b)) / (2.0 * h);
            assert!((fd - g.d[k]).abs() < 1e-8, "{k}: {fd} vs {}", g.d[k]);
        }
    }

    #[test]
    fn errors_carry_column() {
        match Expr::parse("1 + * x") {
            Err(Error::Parse { col, .. }) => assert_eq!(col, 5),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("(1 + x").is_err());
    }

    #[test]
    fn display_round_trip() {
        for s in ["1 + 2*x^2 - y/4", "exp(-(x^2 + y^2))", "2^-1", "-(x - y)*3", "x - (y - 1)", "1/(2/x)"] {
            let e = Expr::parse(s).unwrap();
            let t = e.to_string();
            let f = Expr::parse(&t).unwrap();
            assert_eq!(e, f, "{s} -> {t}");
            assert_eq!(t, f.to_string());
        }
    }
}
