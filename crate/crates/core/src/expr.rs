//! A small expression language for scalar fields on exponential coordinates.
//!
//! Grammar (precedence low to high): `+ -` < `* /` < unary `-` < `^`.
//! Variables are `x1..xn` in layer order (layer 1 first); `^` takes an
//! integer literal exponent so symbolic differentiation stays total.
//! Functions: `exp log sqrt sin cos abs` (unary), `min max` (binary).
//!
//! `parse(print(e))` is structurally the identity on canonical trees, which
//! the integration tests exercise on a fixed corpus.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Sin,
    Cos,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }

    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }
}

/// Expression tree over coordinates `x1..xn` (internally 0-based `Var`).
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Vec<Expr>),
}

impl Expr {
    /// Largest variable index used, if any (0-based).
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Num(_) => None,
            Expr::Var(i) => Some(*i),
            Expr::Neg(a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                match (a.max_var(), b.max_var()) {
                    (Some(x), Some(y)) => Some(x.max(y)),
                    (x, y) => x.or(y),
                }
            }
            Expr::Pow(a, _) => a.max_var(),
            Expr::Call(_, args) => args.iter().filter_map(|a| a.max_var()).max(),
        }
    }

    pub fn check_dimension(&self, n: usize) -> Result<()> {
        match self.max_var() {
            Some(v) if v >= n => Err(Error::DimensionMismatch { expected: n, got: v + 1 }),
            _ => Ok(()),
        }
    }

    /// IEEE evaluation; `abs`/`min`/`max` are evaluated exactly.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        Ok(match self {
            Expr::Num(c) => *c,
            Expr::Var(i) => {
                if *i >= x.len() {
                    return Err(Error::DimensionMismatch { expected: x.len(), got: *i + 1 });
                }
                x[*i]
            }
            Expr::Neg(a) => -a.evaluate(x)?,
            Expr::Add(a, b) => a.evaluate(x)? + b.evaluate(x)?,
            Expr::Sub(a, b) => a.evaluate(x)? - b.evaluate(x)?,
            Expr::Mul(a, b) => a.evaluate(x)? * b.evaluate(x)?,
            Expr::Div(a, b) => a.evaluate(x)? / b.evaluate(x)?,
            Expr::Pow(a, k) => a.evaluate(x)?.powi(*k),
            Expr::Call(f, args) => {
                let a0 = args[0].evaluate(x)?;
                match f {
                    Func::Exp => a0.exp(),
                    Func::Log => {
                        if a0 <= 0.0 {
                            return Err(Error::Domain(format!("log of non-positive value {a0}")));
                        }
                        a0.ln()
                    }
                    Func::Sqrt => {
                        if a0 < 0.0 {
                            return Err(Error::Domain(format!("sqrt of negative value {a0}")));
                        }
                        a0.sqrt()
                    }
                    Func::Abs => a0.abs(),
                    Func::Sin => a0.sin(),
                    Func::Cos => a0.cos(),
                    Func::Min => a0.min(args[1].evaluate(x)?),
                    Func::Max => a0.max(args[1].evaluate(x)?),
                }
            }
        })
    }

    /// Exact symbolic derivative with respect to coordinate `v` (0-based),
    /// simplified by constant folding. Nonsmooth nodes (`abs`, `min`, `max`)
    /// whose arguments depend on `v` are rejected.
    pub fn differentiate(&self, v: usize) -> Result<Expr> {
        let d = match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.differentiate(v)?),
            Expr::Add(a, b) => add(a.differentiate(v)?, b.differentiate(v)?),
            Expr::Sub(a, b) => sub(a.differentiate(v)?, b.differentiate(v)?),
            Expr::Mul(a, b) => add(
                mul(a.differentiate(v)?, (**b).clone()),
                mul((**a).clone(), b.differentiate(v)?),
            ),
            Expr::Div(a, b) => {
                let num = sub(
                    mul(a.differentiate(v)?, (**b).clone()),
                    mul((**a).clone(), b.differentiate(v)?),
                );
                div(num, Expr::Pow(b.clone(), 2))
            }
            Expr::Pow(a, k) => {
                let da = a.differentiate(v)?;
                if *k == 0 {
                    Expr::Num(0.0)
                } else {
                    let lower = if *k == 1 { Expr::Num(1.0) } else { pow((**a).clone(), k - 1) };
                    mul(mul(Expr::Num(*k as f64), lower), da)
                }
            }
            Expr::Call(f, args) => {
                let da: Vec<Expr> =
                    args.iter().map(|a| a.differentiate(v)).collect::<Result<_>>()?;
                match f {
                    Func::Abs | Func::Min | Func::Max => {
                        if da.iter().all(is_zero) {
                            Expr::Num(0.0)
                        } else {
                            return Err(Error::Nonsmooth(format!(
                                "{} is not differentiable in x{}",
                                f.name(),
                                v + 1
                            )));
                        }
                    }
                    Func::Exp => mul(self.clone(), da.into_iter().next().unwrap()),
                    Func::Log => div(da.into_iter().next().unwrap(), args[0].clone()),
                    Func::Sqrt => div(
                        da.into_iter().next().unwrap(),
                        mul(Expr::Num(2.0), self.clone()),
                    ),
                    Func::Sin => mul(
                        Expr::Call(Func::Cos, args.clone()),
                        da.into_iter().next().unwrap(),
                    ),
                    Func::Cos => neg(mul(
                        Expr::Call(Func::Sin, args.clone()),
                        da.into_iter().next().unwrap(),
                    )),
                }
            }
        };
        Ok(d)
    }

    /// Substitutes `subs[i]` for variable `i`. Used to compose a field with
    /// the polynomial group product (left translation).
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Num(c) => Expr::Num(*c),
            Expr::Var(i) => subs[*i].clone(),
            Expr::Neg(a) => neg(a.substitute(subs)),
            Expr::Add(a, b) => add(a.substitute(subs), b.substitute(subs)),
            Expr::Sub(a, b) => sub(a.substitute(subs), b.substitute(subs)),
            Expr::Mul(a, b) => mul(a.substitute(subs), b.substitute(subs)),
            Expr::Div(a, b) => div(a.substitute(subs), b.substitute(subs)),
            Expr::Pow(a, k) => pow(a.substitute(subs), *k),
            Expr::Call(f, args) => {
                Expr::Call(*f, args.iter().map(|a| a.substitute(subs)).collect())
            }
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(c) if *c == 1.0)
}

// Folding constructors keep derivative output readable.

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(c) => Expr::Num(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x * y);
    }
    // constants lead: exp(2*x1)' prints as 2*exp(2*x1)
    if matches!(b, Expr::Num(_)) && !matches!(a, Expr::Num(_)) {
        return Expr::Mul(Box::new(b), Box::new(a));
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow(a: Expr, k: i32) -> Expr {
    match k {
        0 => Expr::Num(1.0),
        1 => a,
        _ => Expr::Pow(Box::new(a), k),
    }
}

// ---------------------------------------------------------------------------
// Printing (canonical form)
// ---------------------------------------------------------------------------

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Pow(..) => 4,
        Expr::Num(c) if *c < 0.0 => 3,
        _ => 5,
    }
}

fn fmt_at(e: &Expr, min_prec: u8, out: &mut String) {
    let prec = precedence(e);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match e {
        Expr::Num(c) => out.push_str(&format!("{c}")),
        Expr::Var(i) => out.push_str(&format!("x{}", i + 1)),
        Expr::Neg(a) => {
            out.push('-');
            fmt_at(a, 4, out);
        }
        Expr::Add(a, b) => {
            fmt_at(a, 1, out);
            out.push_str(" + ");
            fmt_at(b, 2, out);
        }
        Expr::Sub(a, b) => {
            fmt_at(a, 1, out);
            out.push_str(" - ");
            fmt_at(b, 2, out);
        }
        Expr::Mul(a, b) => {
            fmt_at(a, 2, out);
            out.push('*');
            fmt_at(b, 3, out);
        }
        Expr::Div(a, b) => {
            fmt_at(a, 2, out);
            out.push('/');
            fmt_at(b, 3, out);
        }
        Expr::Pow(a, k) => {
            fmt_at(a, 5, out);
            if *k < 0 {
                out.push_str(&format!("^({k})"));
            } else {
                out.push_str(&format!("^{k}"));
            }
        }
        Expr::Call(f, args) => {
            out.push_str(f.name());
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                fmt_at(a, 0, out);
            }
            out.push(')');
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        fmt_at(self, 0, &mut s);
        f.write_str(&s)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

/// Parses an expression; errors are annotated with the byte offset.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text, bytes: text.as_bytes(), pos: 0 };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(Error::Syntax {
            offset: p.pos,
            message: format!("unexpected `{}`", p.rest_preview()),
        });
    }
    Ok(e)
}

impl<'a> Parser<'a> {
    fn rest_preview(&self) -> String {
        self.src[self.pos..].chars().take(8).collect()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.pos,
                message: format!("expected `{}`", c as char),
            })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                let rhs = self.term()?;
                acc = Expr::Add(Box::new(acc), Box::new(rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                acc = Expr::Sub(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = Expr::Mul(Box::new(acc), Box::new(rhs));
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = Expr::Div(Box::new(acc), Box::new(rhs));
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        self.skip_ws();
        if self.eat(b'-') {
            let inner = self.unary()?;
            // Fold a negated literal so `-1.5` round-trips as a number.
            return Ok(match inner {
                Expr::Num(c) => Expr::Num(-c),
                other => Expr::Neg(Box::new(other)),
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let parens = self.eat(b'(');
            self.skip_ws();
            let sign = if self.eat(b'-') { -1i32 } else { 1 };
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(Error::Syntax {
                    offset: self.pos,
                    message: "expected integer exponent".into(),
                });
            }
            let digits = &self.src[start..self.pos];
            let k: i32 = digits.parse().map_err(|_| Error::Syntax {
                offset: start,
                message: format!("exponent `{digits}` out of range"),
            })?;
            if parens {
                self.skip_ws();
                self.expect(b')')?;
            }
            return Ok(Expr::Pow(Box::new(base), sign * k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        self.skip_ws();
        match self.peek() {
            None => Err(Error::Syntax { offset: self.pos, message: "unexpected end of input".into() }),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.skip_ws();
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(c) => Err(Error::Syntax {
                offset: self.pos,
                message: format!("unexpected `{}`", c as char),
            }),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.peek() == Some(b'e') || self.peek() == Some(b'E') {
            let mark = self.pos;
            self.pos += 1;
            if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
                self.pos += 1;
            }
            if self.peek().is_some_and(|c| c.is_ascii_digit()) {
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Syntax { offset: start, message: format!("bad number `{text}`") })
    }

    fn identifier(&mut self) -> Result<Expr> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if let Some(rest) = name.strip_prefix('x') {
            if !rest.is_empty() && rest.bytes().all(|c| c.is_ascii_digit()) {
                let idx: usize = rest.parse().map_err(|_| Error::Syntax {
                    offset: start,
                    message: format!("bad variable `{name}`"),
                })?;
                if idx == 0 {
                    return Err(Error::UnknownIdentifier { name: name.into(), offset: start });
                }
                return Ok(Expr::Var(idx - 1));
            }
        }
        if let Some(f) = Func::from_name(name) {
            self.skip_ws();
            self.expect(b'(')?;
            let mut args = vec![self.expr()?];
            self.skip_ws();
            while self.eat(b',') {
                args.push(self.expr()?);
                self.skip_ws();
            }
            self.expect(b')')?;
            if args.len() != f.arity() {
                return Err(Error::Syntax {
                    offset: start,
                    message: format!("{} takes {} argument(s), got {}", f.name(), f.arity(), args.len()),
                });
            }
            return Ok(Expr::Call(f, args));
        }
        Err(Error::UnknownIdentifier { name: name.into(), offset: start })
    }
}
