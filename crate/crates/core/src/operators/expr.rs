//! Closed-form expressions in `x`, `y2 … yn`, `t` and named parameters.
//!
//! Grammar: `+ − * / ^`, unary minus, parentheses, numbers, and the calls
//! `sqrt exp log sin cos abs`. `^` is right-associative and binds tighter than
//! unary minus, so `-x^2` is `-(x^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    /// Tangential coordinate, 0-based (`y2` is `Y(0)`).
    Y(usize),
    T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sqrt => v.sqrt(),
            Func::Exp => v.exp(),
            Func::Log => v.ln(),
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Abs => v.abs(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `src` for dimension `n`. Identifiers other than the coordinates,
    /// `pi` and the functions must appear in `params`.
    pub fn parse(src: &str, n: usize, params: &[(&str, f64)]) -> Result<Self> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0, n, params, len: src.len() };
        let e = p.expr(0)?;
        if p.pos < p.tokens.len() {
            return Err(Error::Expression { column: p.tokens[p.pos].1 + 1, message: "unexpected trailing input".into() });
        }
        Ok(e)
    }

    pub fn eval(&self, x: f64, y: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y(i)) => y[*i],
            Expr::Var(Var::T) => t,
            Expr::Neg(e) => -e.eval(x, y, t),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y, t), b.eval(x, y, t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call(f, e) => f.apply(e.eval(x, y, t)),
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == Var::T,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on_t(),
            Expr::Bin(_, a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::Y(i)) => write!(f, "y{}", i + 2),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Bin(op, a, b) => {
                let s = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({a} {s} {b})")
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse()
                .map_err(|_| Error::Expression { column: start + 1, message: format!("bad number {text:?}") })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^".contains(c) {
            out.push((Tok::Op(c), i));
            i += 1;
        } else if c == '(' {
            out.push((Tok::LParen, i));
            i += 1;
        } else if c == ')' {
            out.push((Tok::RParen, i));
            i += 1;
        } else {
            return Err(Error::Expression { column: i + 1, message: format!("unexpected character {c:?}") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    n: usize,
    params: &'a [(&'a str, f64)],
    len: usize,
}

impl Parser<'_> {
    fn column(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.len, |t| t.1) + 1
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Expression { column: self.column(), message: message.into() }
    }

    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr> {
        let mut lhs = self.prefix()?;
        while let Some(Tok::Op(c)) = self.peek() {
            let op = *c;
            let (l_bp, r_bp, bin) = match op {
                '+' => (1, 2, BinOp::Add),
                '-' => (1, 2, BinOp::Sub),
                '*' => (3, 4, BinOp::Mul),
                '/' => (3, 4, BinOp::Div),
                '^' => (8, 7, BinOp::Pow),
                _ => unreachable!(),
            };
            if l_bp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(r_bp)?;
            lhs = Expr::Bin(bin, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Expr::Num(v)),
            Some(Tok::Op('-')) => Ok(Expr::Neg(Box::new(self.expr(5)?))),
            Some(Tok::Op('+')) => self.expr(5),
            Some(Tok::LParen) => {
                let e = self.expr(0)?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    _ => {
                        self.pos -= 1;
                        Err(self.err("expected ')'"))
                    }
                }
            }
            Some(Tok::Ident(name)) => self.ident(name),
            _ => {
                self.pos -= 1;
                Err(self.err("expected a value"))
            }
        }
    }

    fn ident(&mut self, name: String) -> Result<Expr> {
        if let Some(func) = Func::from_name(&name) {
            if self.next() != Some(Tok::LParen) {
                self.pos -= 1;
                return Err(self.err(format!("expected '(' after {name}")));
            }
            let arg = self.expr(0)?;
            if self.next() != Some(Tok::RParen) {
                self.pos -= 1;
                return Err(self.err("expected ')'"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        match name.as_str() {
            "x" => return Ok(Expr::Var(Var::X)),
            "t" => return Ok(Expr::Var(Var::T)),
            "pi" => return Ok(Expr::Num(std::f64::consts::PI)),
            _ => {}
        }
        if let Some(k) = name.strip_prefix('y').and_then(|d| d.parse::<usize>().ok()) {
            if k >= 2 && k <= self.n {
                return Ok(Expr::Var(Var::Y(k - 2)));
            }
            self.pos -= 1;
            return Err(self.err(format!("{name} is not a coordinate for n = {}", self.n)));
        }
        if let Some((_, v)) = self.params.iter().find(|(p, _)| *p == name) {
            return Ok(Expr::Num(*v));
        }
        self.pos -= 1;
        Err(self.err(format!("unknown identifier {name:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str) -> f64 {
        Expr::parse(src, 3, &[("v", 2.0)]).unwrap().eval(4.0, &[1.5, -1.0], 0.5)
    }

    #[test]
    fn precedence_and_calls() {
        assert_eq!(ev("1 + 2 * 3"), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2"), 512.0);
        assert_eq!(ev("-x^2"), -16.0);
        assert_eq!(ev("(1 + 2) * 3"), 9.0);
        assert_eq!(ev("sqrt(x) + v * t"), 3.0);
        assert_eq!(ev("y2 * y3"), -1.5);
        assert_eq!(ev("exp(0) - 1e-1"), 0.9);
        assert_eq!(ev("x / 2 / 2"), 1.0);
        assert_eq!(ev("2 * -t"), -1.0);
    }

    #[test]
    fn errors_carry_columns() {
        let err = Expr::parse("x + * 2", 2, &[]).unwrap_err();
        assert!(matches!(err, Error::Expression { column: 5, .. }), "{err}");
        assert!(Expr::parse("y3", 2, &[]).is_err());
        assert!(Expr::parse("foo(x)", 2, &[]).is_err());
        assert!(Expr::parse("(x", 2, &[]).is_err());
        assert!(Expr::parse("x $", 2, &[]).is_err());
    }

    #[test]
    fn display_round_trips() {
        let e = Expr::parse("x^2 + 2*(1+v)*x*t - sqrt(y2)", 2, &[("v", 1.0)]).unwrap();
        let back = Expr::parse(&e.to_string(), 2, &[]).unwrap();
        assert_eq!(e.eval(0.3, &[0.2], 0.7), back.eval(0.3, &[0.2], 0.7));
        assert!(e.depends_on_t());
    }
}
