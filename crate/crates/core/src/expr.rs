//! Scalar expressions over parameter (`u1..un`) and ambient (`x1..xN`)
//! variables.
//!
//! Grammar, loosest to tightest:
//!
//! ```text
//! sum      := product (('+' | '-') product)*
//! product  := unary (('*' | '/') unary)*
//! unary    := '-' unary | power
//! power    := atom ('^' exponent)?
//! exponent := '-'* (NUMBER | '(' constant-expr ')') ('^' exponent)?
//! atom     := NUMBER | IDENT | FUNC '(' sum ')' | '(' sum ')'
//! ```
//!
//! Exponents are folded to a literal at parse time and must be integers or
//! half-integers. Functions are `sin`, `cos`, `exp`, `sqrt`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::jets::{pow_taylor, Jet, JetError, JetSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

fn syntax<T>(offset: usize, message: impl Into<String>) -> Result<T, ExprError> {
    Err(ExprError::Syntax {
        offset,
        message: message.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_SUM,
            BinOp::Mul | BinOp::Div => PREC_PRODUCT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Var(String),
    Num(f64),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Base raised to a literal integer or half-integer exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

const PREC_SUM: u8 = 1;
const PREC_PRODUCT: u8 = 2;
const PREC_UNARY: u8 = 3;
const PREC_POWER: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    pub fn num(v: f64) -> Self {
        Expr::Num(v)
    }

    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    /// Every variable name referenced, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(name) => out.push(name.clone()),
            Expr::Num(_) => {}
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Var(_) | Expr::Call(..) => PREC_ATOM,
            Expr::Num(v) if *v >= 0.0 && !(*v == 0.0 && v.is_sign_negative()) => PREC_ATOM,
            Expr::Num(_) => PREC_UNARY,
            Expr::Neg(_) => PREC_UNARY,
            Expr::Pow(..) => PREC_POWER,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let paren = self.precedence() < min;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Var(name) => f.write_str(name)?,
            Expr::Num(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)?
                } else {
                    write!(f, "{v}")?
                }
            }
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.write_prec(f, PREC_UNARY)?;
            }
            Expr::Binary(op, a, b) => {
                let p = op.precedence();
                a.write_prec(f, p)?;
                write!(f, " {} ", op.symbol())?;
                b.write_prec(f, p + 1)?;
            }
            Expr::Pow(base, exp) => {
                base.write_prec(f, PREC_ATOM)?;
                write!(f, "^{exp}")?;
            }
            Expr::Call(func, arg) => {
                write!(f, "{}(", func.name())?;
                arg.write_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

impl std::str::FromStr for Expr {
    type Err = ExprError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

pub fn parse(src: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        let msg = match p.src[p.pos] {
            b')' => "unbalanced `)`".to_string(),
            c if c.is_ascii_alphanumeric() || c == b'.' || c == b'(' => {
                "expected an operator (implicit multiplication is not allowed)".to_string()
            }
            c => format!("unexpected character `{}`", char::from(c)),
        };
        return syntax(p.pos, msg);
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.product()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let start = self.pos;
        let exp = self.exponent()?;
        if !(2.0 * exp).is_finite() || (2.0 * exp).fract() != 0.0 {
            return syntax(
                start,
                format!("exponent {exp} must be an integer or half-integer"),
            );
        }
        Ok(Expr::Pow(Box::new(base), exp))
    }

    fn exponent(&mut self) -> Result<f64, ExprError> {
        let mut sign = 1.0;
        while self.eat(b'-') {
            sign = -sign;
        }
        let at = self.peek().map(|_| self.pos).unwrap_or(self.src.len());
        let mut value = match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.sum()?;
                if !self.eat(b')') {
                    return syntax(self.pos, "expected `)`");
                }
                if !inner.variables().is_empty() {
                    return syntax(at, "exponent must be a numeric literal");
                }
                match eval_real(&inner, &NoVars) {
                    Ok(v) if v.is_finite() => v,
                    _ => return syntax(at, "exponent does not evaluate to a finite number"),
                }
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number()?,
            Some(_) => return syntax(at, "exponent must be a numeric literal"),
            None => return syntax(at, "missing exponent"),
        };
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let inner_at = self.pos;
            let inner = self.exponent()?;
            value = match Value::pow(&value, inner) {
                Ok(v) if v.is_finite() => v,
                _ => return syntax(inner_at, "exponent does not evaluate to a finite number"),
            };
        }
        Ok(sign * value)
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && s[i].is_ascii_digit() {
            i += 1;
        }
        if i < s.len() && s[i] == b'.' {
            i += 1;
            while i < s.len() && s[i].is_ascii_digit() {
                i += 1;
            }
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or("");
        let value: f64 = match text.parse() {
            Ok(v) => v,
            Err(_) => return syntax(start, format!("malformed number `{text}`")),
        };
        if !value.is_finite() {
            return syntax(start, format!("number `{text}` is out of range"));
        }
        self.pos = i;
        Ok(value)
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let at = match self.peek() {
            Some(_) => self.pos,
            None => return syntax(self.src.len(), "unexpected end of input"),
        };
        let c = self.src[at];
        if c == b'(' {
            self.pos += 1;
            let inner = self.sum()?;
            if !self.eat(b')') {
                let pos = self.peek().map(|_| self.pos).unwrap_or(self.src.len());
                return syntax(pos, "unbalanced `(`");
            }
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == b'.' {
            return Ok(Expr::Num(self.number()?));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let name = self.ident().to_string();
            if self.peek() == Some(b'(') {
                let Some(func) = Func::from_name(&name) else {
                    return syntax(at, format!("unknown function `{name}`"));
                };
                self.pos += 1;
                let arg = self.sum()?;
                if !self.eat(b')') {
                    let pos = self.peek().map(|_| self.pos).unwrap_or(self.src.len());
                    return syntax(pos, "unbalanced `(`");
                }
                return Ok(Expr::Call(func, Box::new(arg)));
            }
            if Func::from_name(&name).is_some() {
                return syntax(at, format!("function `{name}` needs an argument list"));
            }
            return Ok(Expr::Var(name));
        }
        match c {
            b'+' | b'*' | b'/' | b'^' => {
                syntax(at, format!("dangling operator `{}`", char::from(c)))
            }
            b')' => syntax(at, "unbalanced `)`"),
            _ => syntax(at, format!("unexpected character `{}`", char::from(c))),
        }
    }
}

/// Scalar types an expression can be evaluated over.
pub trait Value: Sized + Clone {
    fn add(&self, other: &Self) -> Result<Self, ExprError>;
    fn sub(&self, other: &Self) -> Result<Self, ExprError>;
    fn mul(&self, other: &Self) -> Result<Self, ExprError>;
    fn div(&self, other: &Self) -> Result<Self, ExprError>;
    fn neg(&self) -> Self;
    fn pow(&self, p: f64) -> Result<Self, ExprError>;
    fn call(&self, func: Func) -> Result<Self, ExprError>;
}

impl Value for f64 {
    fn add(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self + other)
    }
    fn sub(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self - other)
    }
    fn mul(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self * other)
    }
    fn div(&self, other: &Self) -> Result<Self, ExprError> {
        if *other == 0.0 {
            return Err(JetError::DivisionByZero.into());
        }
        Ok(self / other)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn pow(&self, p: f64) -> Result<Self, ExprError> {
        Ok(pow_taylor(*self, p, 0)?[0])
    }
    fn call(&self, func: Func) -> Result<Self, ExprError> {
        Ok(match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Sqrt => {
                if *self <= 0.0 {
                    return Err(JetError::DomainError {
                        func: "sqrt",
                        value: *self,
                    }
                    .into());
                }
                self.sqrt()
            }
        })
    }
}

impl Value for Jet {
    fn add(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self.arith(other, crate::jets::ArithOp::Add)?)
    }
    fn sub(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self.arith(other, crate::jets::ArithOp::Sub)?)
    }
    fn mul(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self.arith(other, crate::jets::ArithOp::Mul)?)
    }
    fn div(&self, other: &Self) -> Result<Self, ExprError> {
        Ok(self.checked_div(other)?)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn pow(&self, p: f64) -> Result<Self, ExprError> {
        Ok(Jet::pow(self, p)?)
    }
    fn call(&self, func: Func) -> Result<Self, ExprError> {
        Ok(match func {
            Func::Sin => self.sin(),
            Func::Cos => self.cos(),
            Func::Exp => self.exp(),
            Func::Sqrt => self.sqrt()?,
        })
    }
}

/// Variable bindings for evaluation.
pub trait Env {
    type Value: Value;
    fn lookup(&self, name: &str) -> Option<Self::Value>;
    fn constant(&self, c: f64) -> Self::Value;
}

struct NoVars;

impl Env for NoVars {
    type Value = f64;
    fn lookup(&self, _: &str) -> Option<f64> {
        None
    }
    fn constant(&self, c: f64) -> f64 {
        c
    }
}

impl Env for HashMap<String, f64> {
    type Value = f64;
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
    fn constant(&self, c: f64) -> f64 {
        c
    }
}

/// Jet-valued bindings; literals are lifted into `space`.
#[derive(Debug, Clone)]
pub struct JetEnv {
    pub space: JetSpace,
    pub vars: HashMap<String, Jet>,
}

impl Env for JetEnv {
    type Value = Jet;
    fn lookup(&self, name: &str) -> Option<Jet> {
        self.vars.get(name).cloned()
    }
    fn constant(&self, c: f64) -> Jet {
        self.space.constant(c)
    }
}

/// Positional bindings for the scenario naming convention: `u<k>` resolves to
/// `params[k-1]` and `x<k>` to `ambient[k-1]`.
pub struct Coords<'a, V> {
    pub params: &'a [V],
    pub ambient: &'a [V],
    pub lift: &'a dyn Fn(f64) -> V,
}

/// Parses `u<k>` / `x<k>` into the prefix and a zero-based index.
pub fn coordinate_index(name: &str) -> Option<(char, usize)> {
    let mut chars = name.chars();
    let prefix = chars.next()?;
    if prefix != 'u' && prefix != 'x' {
        return None;
    }
    let digits = chars.as_str();
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    let k: usize = digits.parse().ok()?;
    Some((prefix, k - 1))
}

impl<V: Value> Env for Coords<'_, V> {
    type Value = V;
    fn lookup(&self, name: &str) -> Option<V> {
        let (prefix, idx) = coordinate_index(name)?;
        let slot = if prefix == 'u' {
            self.params
        } else {
            self.ambient
        };
        slot.get(idx).cloned()
    }
    fn constant(&self, c: f64) -> V {
        (self.lift)(c)
    }
}

pub fn eval<E: Env>(expr: &Expr, env: &E) -> Result<E::Value, ExprError> {
    Ok(match expr {
        Expr::Var(name) => env
            .lookup(name)
            .ok_or_else(|| ExprError::UnknownVariable(name.clone()))?,
        Expr::Num(v) => env.constant(*v),
        Expr::Neg(e) => eval(e, env)?.neg(),
        Expr::Binary(op, a, b) => {
            let a = eval(a, env)?;
            let b = eval(b, env)?;
            match op {
                BinOp::Add => a.add(&b)?,
                BinOp::Sub => a.sub(&b)?,
                BinOp::Mul => a.mul(&b)?,
                BinOp::Div => a.div(&b)?,
            }
        }
        Expr::Pow(base, p) => eval(base, env)?.pow(*p)?,
        Expr::Call(func, arg) => eval(arg, env)?.call(*func)?,
    })
}

pub fn eval_real<E: Env<Value = f64>>(expr: &Expr, env: &E) -> Result<f64, ExprError> {
    eval(expr, env)
}
