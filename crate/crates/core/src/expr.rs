//! Density-form rate expressions.
//!
//! A rate is a small arithmetic tree over literals, local densities `a1..aL`,
//! parameter-field values `b1..bP`, the four arithmetic operators and
//! `min`/`max`. Division is only accepted when the divisor is bounded away from
//! zero (a positive literal, or `max` with a positive literal arm), which keeps
//! every accepted expression locally Lipschitz on the nonnegative orthant.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateExpr {
    Lit(f64),
    /// Density of local state `l` (zero-based).
    Density(usize),
    /// Value of parameter field `p` (zero-based).
    Param(usize),
    Neg(Box<RateExpr>),
    Bin(BinOp, Box<RateExpr>, Box<RateExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprErrorKind {
    Syntax(String),
    UnknownVariable(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExprError {
    pub offset: usize,
    pub kind: ExprErrorKind,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprErrorKind::Syntax(m) => write!(f, "{m} (offset {})", self.offset),
            ExprErrorKind::UnknownVariable(v) => {
                write!(f, "unknown variable `{v}` (offset {})", self.offset)
            }
        }
    }
}

impl std::error::Error for ExprError {}

#[allow(clippy::should_implement_trait)]
impl RateExpr {
    pub fn lit(v: f64) -> Self {
        RateExpr::Lit(v)
    }

    pub fn density(l: usize) -> Self {
        RateExpr::Density(l)
    }

    pub fn param(p: usize) -> Self {
        RateExpr::Param(p)
    }

    /// Negation; literals are folded so that `-(2)` and `-2` build the same tree.
    pub fn negate(e: RateExpr) -> Self {
        match e {
            RateExpr::Lit(v) => RateExpr::Lit(-v),
            other => RateExpr::Neg(Box::new(other)),
        }
    }

    pub fn bin(op: BinOp, l: RateExpr, r: RateExpr) -> Self {
        RateExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn add(l: RateExpr, r: RateExpr) -> Self {
        Self::bin(BinOp::Add, l, r)
    }

    pub fn sub(l: RateExpr, r: RateExpr) -> Self {
        Self::bin(BinOp::Sub, l, r)
    }

    pub fn mul(l: RateExpr, r: RateExpr) -> Self {
        Self::bin(BinOp::Mul, l, r)
    }

    pub fn div(l: RateExpr, r: RateExpr) -> Self {
        Self::bin(BinOp::Div, l, r)
    }

    pub fn min(l: RateExpr, r: RateExpr) -> Self {
        Self::bin(BinOp::Min, l, r)
    }

    pub fn max(l: RateExpr, r: RateExpr) -> Self {
        Self::bin(BinOp::Max, l, r)
    }

    /// Evaluates the expression at the given densities and parameter values.
    ///
    /// Indices are not bounds-checked beyond slice indexing; validate the
    /// owning network first.
    pub fn eval(&self, densities: &[f64], params: &[f64]) -> f64 {
        match self {
            RateExpr::Lit(v) => *v,
            RateExpr::Density(l) => densities[*l],
            RateExpr::Param(p) => params[*p],
            RateExpr::Neg(e) => -e.eval(densities, params),
            RateExpr::Bin(op, l, r) => {
                let a = l.eval(densities, params);
                let b = r.eval(densities, params);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Min => a.min(b),
                    BinOp::Max => a.max(b),
                }
            }
        }
    }

    /// Same as [`eval`](Self::eval) but reads densities and parameters from one
    /// concatenated argument vector `(a_1..a_L, b_1..b_P)`.
    pub fn eval_joint(&self, num_states: usize, z: &[f64]) -> f64 {
        let (a, b) = z.split_at(num_states);
        self.eval(a, b)
    }

    pub fn visit<F: FnMut(&RateExpr)>(&self, f: &mut F) {
        f(self);
        match self {
            RateExpr::Neg(e) => e.visit(f),
            RateExpr::Bin(_, l, r) => {
                l.visit(f);
                r.visit(f);
            }
            _ => {}
        }
    }

    /// Largest zero-based density index referenced, if any.
    pub fn max_density_index(&self) -> Option<usize> {
        let mut m = None;
        self.visit(&mut |e| {
            if let RateExpr::Density(l) = e {
                m = Some(m.map_or(*l, |x: usize| x.max(*l)));
            }
        });
        m
    }

    pub fn max_param_index(&self) -> Option<usize> {
        let mut m = None;
        self.visit(&mut |e| {
            if let RateExpr::Param(p) = e {
                m = Some(m.map_or(*p, |x: usize| x.max(*p)));
            }
        });
        m
    }

    /// Divisions whose divisor is not bounded away from zero.
    pub fn unguarded_divisions(&self) -> Vec<String> {
        let mut bad = Vec::new();
        self.visit(&mut |e| {
            if let RateExpr::Bin(BinOp::Div, _, d) = e {
                if !d.is_guarded_divisor() {
                    bad.push(d.to_string());
                }
            }
        });
        bad
    }

    fn is_guarded_divisor(&self) -> bool {
        match self {
            RateExpr::Lit(v) => *v > 0.0,
            RateExpr::Bin(BinOp::Max, l, r) => {
                matches!(**l, RateExpr::Lit(v) if v > 0.0) || matches!(**r, RateExpr::Lit(v) if v > 0.0)
            }
            _ => false,
        }
    }

    /// Conservative check that the value is nonnegative for nonnegative inputs.
    pub fn is_nonnegative(&self) -> bool {
        match self {
            RateExpr::Lit(v) => *v >= 0.0,
            RateExpr::Density(_) | RateExpr::Param(_) => true,
            RateExpr::Neg(_) => false,
            RateExpr::Bin(op, l, r) => match op {
                BinOp::Add | BinOp::Mul | BinOp::Div | BinOp::Min => l.is_nonnegative() && r.is_nonnegative(),
                BinOp::Max => l.is_nonnegative() || r.is_nonnegative(),
                BinOp::Sub => false,
            },
        }
    }

    /// Conservative structural check that the expression is identically zero
    /// whenever density `l` is zero (other inputs arbitrary and nonnegative).
    pub fn vanishes_when_zero(&self, l: usize) -> bool {
        match self {
            RateExpr::Lit(v) => *v == 0.0,
            RateExpr::Density(k) => *k == l,
            RateExpr::Param(_) => false,
            RateExpr::Neg(e) => e.vanishes_when_zero(l),
            RateExpr::Bin(op, a, b) => {
                let (va, vb) = (a.vanishes_when_zero(l), b.vanishes_when_zero(l));
                match op {
                    BinOp::Add | BinOp::Sub | BinOp::Max => va && vb,
                    BinOp::Mul => va || vb,
                    BinOp::Div => va,
                    BinOp::Min => (va && vb) || (va && b.is_nonnegative()) || (vb && a.is_nonnegative()),
                }
            }
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            RateExpr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            RateExpr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            RateExpr::Neg(_) => 3,
            RateExpr::Lit(v) if v.is_sign_negative() => 4,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            f.write_str("(")?;
            self.fmt_prec(f, 0)?;
            return f.write_str(")");
        }
        match self {
            RateExpr::Lit(v) if v.is_sign_negative() => write!(f, "(-{:?})", -v),
            RateExpr::Lit(v) => write!(f, "{v:?}"),
            RateExpr::Density(l) => write!(f, "a{}", l + 1),
            RateExpr::Param(p) => write!(f, "b{}", p + 1),
            RateExpr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_prec(f, 3)
            }
            RateExpr::Bin(op, l, r) => match op {
                BinOp::Min | BinOp::Max => {
                    f.write_str(if *op == BinOp::Min { "min(" } else { "max(" })?;
                    l.fmt_prec(f, 0)?;
                    f.write_str(", ")?;
                    r.fmt_prec(f, 0)?;
                    f.write_str(")")
                }
                BinOp::Add | BinOp::Sub => {
                    l.fmt_prec(f, 1)?;
                    f.write_str(if *op == BinOp::Add { " + " } else { " - " })?;
                    r.fmt_prec(f, 2)
                }
                BinOp::Mul | BinOp::Div => {
                    l.fmt_prec(f, 2)?;
                    f.write_str(if *op == BinOp::Mul { " * " } else { " / " })?;
                    r.fmt_prec(f, 3)
                }
            },
        }
    }
}

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Resolves identifiers other than the positional `aN`/`bN` forms.
pub trait Scope {
    fn resolve(&self, name: &str) -> Option<RateExpr>;
}

/// A scope that only knows the positional variables.
pub struct Positional;

impl Scope for Positional {
    fn resolve(&self, _name: &str) -> Option<RateExpr> {
        None
    }
}

/// Parses an infix rate expression such as `c * min(a2, 1)`.
///
/// `a<k>` and `b<k>` (k >= 1) are always recognised as the k-th density and
/// parameter; any other identifier goes through `scope`.
pub fn parse_expr(src: &str, scope: &dyn Scope) -> Result<RateExpr, ExprError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
        scope,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    scope: &'a dyn Scope,
}

impl Parser<'_> {
    fn syntax(&self, msg: &str) -> ExprError {
        ExprError {
            offset: self.pos,
            kind: ExprErrorKind::Syntax(msg.to_string()),
        }
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

    fn expect(&mut self, c: u8) -> Result<(), ExprError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<RateExpr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = RateExpr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<RateExpr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = RateExpr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<RateExpr, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(RateExpr::negate(self.unary()?))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<RateExpr, ExprError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of expression")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(c) => Err(self.syntax(&format!("unexpected character `{}`", c as char))),
        }
    }

    fn number(&mut self) -> Result<RateExpr, ExprError> {
        let start = self.pos;
        let b = self.bytes;
        let digits = |pos: &mut usize| {
            while *pos < b.len() && b[*pos].is_ascii_digit() {
                *pos += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < b.len() && b[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let mut p = self.pos + 1;
            if p < b.len() && (b[p] == b'+' || b[p] == b'-') {
                p += 1;
            }
            if p < b.len() && b[p].is_ascii_digit() {
                self.pos = p;
                digits(&mut self.pos);
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>().map(RateExpr::Lit).map_err(|_| ExprError {
            offset: start,
            kind: ExprErrorKind::Syntax(format!("malformed number `{text}`")),
        })
    }

    fn ident(&mut self) -> Result<RateExpr, ExprError> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if name == "min" || name == "max" {
            self.expect(b'(')?;
            let l = self.expr()?;
            self.expect(b',')?;
            let r = self.expr()?;
            self.expect(b')')?;
            let op = if name == "min" { BinOp::Min } else { BinOp::Max };
            return Ok(RateExpr::bin(op, l, r));
        }
        if let Some(e) = positional(name) {
            return Ok(e);
        }
        self.scope.resolve(name).ok_or_else(|| ExprError {
            offset: start,
            kind: ExprErrorKind::UnknownVariable(name.to_string()),
        })
    }
}

fn positional(name: &str) -> Option<RateExpr> {
    let (head, rest) = name.split_at(1);
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) || rest.starts_with('0') {
        return None;
    }
    let k: usize = rest.parse().ok()?;
    match head {
        "a" => Some(RateExpr::Density(k - 1)),
        "b" => Some(RateExpr::Param(k - 1)),
        _ => None,
    }
}
