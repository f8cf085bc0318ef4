//! Closed-form expressions over named real variables.
//!
//! Expressions are parsed from conventional infix text, evaluated in real
//! arithmetic (non-finite intermediates are errors), and differentiated
//! symbolically. Trees are immutable; subtrees are shared through `Arc`, so
//! cloning is cheap and derivative trees can reuse their operands.

mod diff;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use parse::parse;

/// Errors raised while parsing or evaluating an expression.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unknown identifier '{name}' at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("unknown function '{name}' at position {pos}")]
    UnknownFunction { name: String, pos: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("no binding for variable '{0}'")]
    MissingBinding(String),
}

/// Elementary functions recognized by the grammar.
///
/// `Sign` never appears in user input by convention but is produced by
/// differentiating `abs`; the parser accepts it so serialized derivatives
/// round-trip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> Result<f64, ExprError> {
        match self {
            Func::Sin => Ok(v.sin()),
            Func::Cos => Ok(v.cos()),
            Func::Tan => Ok(v.tan()),
            Func::Exp => Ok(v.exp()),
            Func::Log if v <= 0.0 => Err(ExprError::Domain(format!("log of non-positive value {v}"))),
            Func::Log => Ok(v.ln()),
            Func::Sqrt if v < 0.0 => Err(ExprError::Domain(format!("sqrt of negative value {v}"))),
            Func::Sqrt => Ok(v.sqrt()),
            Func::Abs => Ok(v.abs()),
            Func::Sign if v > 0.0 => Ok(1.0),
            Func::Sign if v < 0.0 => Ok(-1.0),
            Func::Sign => Ok(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Arc<str>),
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

fn pow_checked(base: f64, exp: f64) -> Result<f64, ExprError> {
    if exp.fract() == 0.0 && exp.abs() <= 64.0 {
        return Ok(base.powi(exp as i32));
    }
    if base < 0.0 {
        return Err(ExprError::Domain(format!(
            "negative base {base} raised to non-integer power {exp}"
        )));
    }
    Ok(base.powf(exp))
}

fn finite(v: f64, what: &str) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::Domain(format!("{what} produced a non-finite value")))
    }
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Arc::from(name))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Evaluates with a lookup closure for variables.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<f64, ExprError>
    where
        F: Fn(&str) -> Option<f64>,
    {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(name) => {
                return lookup(name).ok_or_else(|| ExprError::MissingBinding(name.to_string()))
            }
            Expr::Neg(a) => -a.eval_with(lookup)?,
            Expr::Add(a, b) => finite(a.eval_with(lookup)? + b.eval_with(lookup)?, "addition")?,
            Expr::Sub(a, b) => finite(a.eval_with(lookup)? - b.eval_with(lookup)?, "subtraction")?,
            Expr::Mul(a, b) => {
                finite(a.eval_with(lookup)? * b.eval_with(lookup)?, "multiplication")?
            }
            Expr::Div(a, b) => {
                let num = a.eval_with(lookup)?;
                let den = b.eval_with(lookup)?;
                if den == 0.0 {
                    return Err(ExprError::Domain("division by zero".into()));
                }
                finite(num / den, "division")?
            }
            Expr::Pow(a, b) => {
                let base = a.eval_with(lookup)?;
                let exp = b.eval_with(lookup)?;
                finite(pow_checked(base, exp)?, "power")?
            }
            Expr::Call(f, a) => finite(f.apply(a.eval_with(lookup)?)?, f.name())?,
        };
        Ok(v)
    }

    /// Evaluates with explicit `(name, value)` bindings.
    pub fn eval(&self, bindings: &[(&str, f64)]) -> Result<f64, ExprError> {
        self.eval_with(&|name: &str| {
            bindings
                .iter()
                .find(|(n, _)| *n == name)
                .map(|&(_, v)| v)
        })
    }

    /// Fast path for expressions over `x` and `y`.
    pub fn eval_xy(&self, x: f64, y: f64) -> Result<f64, ExprError> {
        self.eval_with(&|name: &str| match name {
            "x" => Some(x),
            "y" => Some(y),
            _ => None,
        })
    }

    /// Fast path for univariate expressions in `t`.
    pub fn eval_t(&self, t: f64) -> Result<f64, ExprError> {
        self.eval_with(&|name: &str| if name == "t" { Some(t) } else { None })
    }

    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(n) => {
                out.insert(n.to_string());
            }
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, var: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(n) => &**n == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(var) || b.depends_on(var)
            }
        }
    }

    /// False when the tree contains `abs` or `sign`, whose derivatives are
    /// not continuous everywhere.
    pub fn is_smooth(&self) -> bool {
        match self {
            Expr::Const(_) | Expr::Var(_) => true,
            Expr::Call(Func::Abs | Func::Sign, _) => false,
            Expr::Neg(a) | Expr::Call(_, a) => a.is_smooth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.is_smooth() && b.is_smooth()
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Replaces every occurrence of `var` by `replacement`, simplifying as it
    /// rebuilds.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        self.substitute_all(&[(var, replacement)])
    }

    /// Simultaneous substitution; replacements are not themselves rewritten.
    pub fn substitute_all(&self, subs: &[(&str, &Expr)]) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(n) => match subs.iter().find(|(v, _)| *v == &**n) {
                Some((_, r)) => (*r).clone(),
                None => self.clone(),
            },
            Expr::Neg(a) => neg(a.substitute_all(subs)),
            Expr::Add(a, b) => add(a.substitute_all(subs), b.substitute_all(subs)),
            Expr::Sub(a, b) => sub(a.substitute_all(subs), b.substitute_all(subs)),
            Expr::Mul(a, b) => mul(a.substitute_all(subs), b.substitute_all(subs)),
            Expr::Div(a, b) => div(a.substitute_all(subs), b.substitute_all(subs)),
            Expr::Pow(a, b) => pow(a.substitute_all(subs), b.substitute_all(subs)),
            Expr::Call(f, a) => call(*f, a.substitute_all(subs)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min_prec: u8) -> fmt::Result {
    if e.precedence() < min_prec {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Serializes back to grammar text. Parenthesization follows the tree
/// exactly, so `parse(e.to_string())` rebuilds the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let binary = |f: &mut fmt::Formatter<'_>, a: &Expr, op: &str, b: &Expr, p: u8| {
            write_operand(f, a, p)?;
            write!(f, " {op} ")?;
            write_operand(f, b, p + 1)
        };
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(n) => write!(f, "{n}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_operand(f, a, 4)
            }
            Expr::Add(a, b) => binary(f, a, "+", b, 1),
            Expr::Sub(a, b) => binary(f, a, "-", b, 1),
            Expr::Mul(a, b) => binary(f, a, "*", b, 2),
            Expr::Div(a, b) => binary(f, a, "/", b, 2),
            Expr::Pow(a, b) => {
                write_operand(f, a, 5)?;
                write!(f, "^")?;
                write_operand(f, b, 4)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

// Simplifying constructors: constant folding and 0/1 identities only.

fn fold(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

fn is_const(e: &Expr, c: f64) -> bool {
    matches!(e, Expr::Const(v) if *v == c)
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => (*inner).clone(),
        other => Expr::Neg(Arc::new(other)),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => fold(x + y).unwrap_or_else(|| Expr::Add(a.into(), b.into())),
        _ if is_const(&a, 0.0) => b,
        _ if is_const(&b, 0.0) => a,
        _ => Expr::Add(Arc::new(a), Arc::new(b)),
    }
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => fold(x - y).unwrap_or_else(|| Expr::Sub(a.into(), b.into())),
        _ if is_const(&b, 0.0) => a,
        _ if is_const(&a, 0.0) => neg(b),
        _ => Expr::Sub(Arc::new(a), Arc::new(b)),
    }
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => fold(x * y).unwrap_or_else(|| Expr::Mul(a.into(), b.into())),
        _ if is_const(&a, 0.0) || is_const(&b, 0.0) => Expr::Const(0.0),
        _ if is_const(&a, 1.0) => b,
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, -1.0) => neg(b),
        _ if is_const(&b, -1.0) => neg(a),
        _ => Expr::Mul(Arc::new(a), Arc::new(b)),
    }
}

pub fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) if *y != 0.0 => {
            fold(x / y).unwrap_or_else(|| Expr::Div(a.into(), b.into()))
        }
        _ if is_const(&b, 1.0) => a,
        _ if is_const(&a, 0.0) && !is_const(&b, 0.0) => Expr::Const(0.0),
        _ => Expr::Div(Arc::new(a), Arc::new(b)),
    }
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Const(x), Expr::Const(y)) => match pow_checked(*x, *y).ok().and_then(fold) {
            Some(c) => c,
            None => Expr::Pow(a.into(), b.into()),
        },
        _ if is_const(&b, 0.0) => Expr::Const(1.0),
        _ if is_const(&b, 1.0) => a,
        _ => Expr::Pow(Arc::new(a), Arc::new(b)),
    }
}

pub fn call(f: Func, a: Expr) -> Expr {
    if let Expr::Const(c) = a {
        if let Some(v) = f.apply(c).ok().and_then(fold) {
            return v;
        }
    }
    Expr::Call(f, Arc::new(a))
}
