//! Symbolic coefficient functions.
//!
//! Every coefficient of a connection, frame or curve is an [`Expr`]: a small
//! immutable tree over named variables. The engine supports parsing from the
//! text grammar, printing back to re-parseable text, IEEE evaluation, exact
//! symbolic differentiation, a bounded simplifier and an equality test that
//! falls back to random sampling when the simplifier cannot decide.

mod equal;
mod number;
mod parse;
mod print;
mod simplify;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use equal::{expr_equal, Confidence, EqualityError, EqualityVerdict, Sampler};
pub use number::Number;
pub use parse::{parse_expr, ParseError};
pub use simplify::simplify;

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Ln,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::Sin, Func::Cos, Func::Exp, Func::Ln];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Ln => "ln",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Number),
    Var(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Func(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("ln of non-positive argument {0}")]
    LnDomain(f64),
    #[error("no value for variable `{0}`")]
    MissingVariable(String),
}

/// The set of identifiers an expression may reference.
///
/// Base variables are `x1..x<m>`, fiber variables `y1..y<n>`; anything else
/// (a curve parameter `t`, two-fold coordinates `u1`, `v1`, ...) is an extra
/// symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolUniverse {
    base_dim: usize,
    fiber_dim: usize,
    extra: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UniverseError {
    #[error("dimensions must be positive (got base {0}, fiber {1})")]
    ZeroDimension(usize, usize),
    #[error("symbol `{0}` is not a valid identifier")]
    BadSymbol(String),
    #[error("symbol `{0}` collides with a function or coordinate name")]
    Collision(String),
}

fn parse_indexed(name: &str, prefix: char) -> Option<usize> {
    let digits = name.strip_prefix(prefix)?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl SymbolUniverse {
    pub fn new(base_dim: usize, fiber_dim: usize) -> Result<Self, UniverseError> {
        Self::with_extra(base_dim, fiber_dim, std::iter::empty::<String>())
    }

    pub fn with_extra<I, S>(base_dim: usize, fiber_dim: usize, extra: I) -> Result<Self, UniverseError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if base_dim == 0 || fiber_dim == 0 {
            return Err(UniverseError::ZeroDimension(base_dim, fiber_dim));
        }
        let mut universe = SymbolUniverse { base_dim, fiber_dim, extra: BTreeSet::new() };
        for name in extra {
            universe.add_extra(name.into())?;
        }
        Ok(universe)
    }

    /// A universe with no `x`/`y` coordinates, only the given names.
    pub fn symbols<I, S>(names: I) -> Result<Self, UniverseError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut universe = SymbolUniverse { base_dim: 0, fiber_dim: 0, extra: BTreeSet::new() };
        for name in names {
            universe.add_extra(name.into())?;
        }
        Ok(universe)
    }

    fn add_extra(&mut self, name: String) -> Result<(), UniverseError> {
        if !is_identifier(&name) {
            return Err(UniverseError::BadSymbol(name));
        }
        if Func::from_name(&name).is_some() || self.contains(&name) {
            return Err(UniverseError::Collision(name));
        }
        self.extra.insert(name);
        Ok(())
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn extra(&self) -> &BTreeSet<String> {
        &self.extra
    }

    pub fn base_var(i: usize) -> String {
        format!("x{i}")
    }

    pub fn fiber_var(p: usize) -> String {
        format!("y{p}")
    }

    /// 1-based index when `name` is one of this universe's base variables.
    pub fn base_index(&self, name: &str) -> Option<usize> {
        parse_indexed(name, 'x').filter(|&i| i <= self.base_dim)
    }

    pub fn fiber_index(&self, name: &str) -> Option<usize> {
        parse_indexed(name, 'y').filter(|&p| p <= self.fiber_dim)
    }

    pub fn is_fiber(&self, name: &str) -> bool {
        self.fiber_index(name).is_some()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.base_index(name).is_some() || self.fiber_index(name).is_some() || self.extra.contains(name)
    }

    pub fn base_vars(&self) -> Vec<String> {
        (1..=self.base_dim).map(Self::base_var).collect()
    }

    pub fn fiber_vars(&self) -> Vec<String> {
        (1..=self.fiber_dim).map(Self::fiber_var).collect()
    }

    pub fn check(&self, e: &Expr) -> Result<(), ExprError> {
        match e.free_vars().into_iter().find(|v| !self.contains(v)) {
            Some(v) => Err(ExprError::UnknownVariable(v)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Variable values for evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment(BTreeMap<String, f64>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (S, f64)>>(iter: T) -> Self {
        Assignment(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl From<Number> for Expr {
    fn from(n: Number) -> Self {
        Expr::Const(n)
    }
}

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(Number::ZERO)
    }

    pub fn one() -> Expr {
        Expr::Const(Number::ONE)
    }

    pub fn int(v: i64) -> Expr {
        Expr::Const(Number::int(v))
    }

    pub fn num(v: Number) -> Expr {
        Expr::Const(v)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, n: i64) -> Expr {
        Expr::Pow(Box::new(a), n)
    }

    pub fn func(f: Func, a: Expr) -> Expr {
        Expr::Func(f, Box::new(a))
    }

    /// Left-associated sum; the zero constant for an empty iterator.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().reduce(Expr::add).unwrap_or_else(Expr::zero)
    }

    pub fn as_const(&self) -> Option<Number> {
        match self {
            Expr::Const(n) => Some(*n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const().is_some_and(Number::is_zero)
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => a.depends_on(name),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(name) || b.depends_on(name)
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<f64, EvalError> {
        self.eval_with(&|name| a.get(name))
    }

    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Const(n) => n.to_f64(),
            Expr::Var(v) => lookup(v).ok_or_else(|| EvalError::MissingVariable(v.clone()))?,
            Expr::Neg(a) => -a.eval_with(lookup)?,
            Expr::Add(a, b) => a.eval_with(lookup)? + b.eval_with(lookup)?,
            Expr::Sub(a, b) => a.eval_with(lookup)? - b.eval_with(lookup)?,
            Expr::Mul(a, b) => a.eval_with(lookup)? * b.eval_with(lookup)?,
            Expr::Div(a, b) => {
                let num = a.eval_with(lookup)?;
                let den = b.eval_with(lookup)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval_with(lookup)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                number::powi_f64(base, *n)
            }
            Expr::Func(f, a) => {
                let x = a.eval_with(lookup)?;
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Ln if x <= 0.0 => return Err(EvalError::LnDomain(x)),
                    Func::Ln => x.ln(),
                }
            }
        })
    }

    /// Raw symbolic partial derivative, before simplification.
    fn derivative_raw(&self, var: &str) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => {
                if v == var {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            _ if !self.depends_on(var) => Expr::zero(),
            Expr::Neg(a) => Expr::neg(a.derivative_raw(var)),
            Expr::Add(a, b) => Expr::add(a.derivative_raw(var), b.derivative_raw(var)),
            Expr::Sub(a, b) => Expr::sub(a.derivative_raw(var), b.derivative_raw(var)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.derivative_raw(var), (**b).clone()),
                Expr::mul((**a).clone(), b.derivative_raw(var)),
            ),
            Expr::Div(a, b) => Expr::div(
                Expr::sub(
                    Expr::mul(a.derivative_raw(var), (**b).clone()),
                    Expr::mul((**a).clone(), b.derivative_raw(var)),
                ),
                Expr::pow((**b).clone(), 2),
            ),
            Expr::Pow(a, n) => Expr::mul(
                Expr::mul(Expr::int(*n), Expr::pow((**a).clone(), n - 1)),
                a.derivative_raw(var),
            ),
            Expr::Func(f, a) => {
                let inner = a.derivative_raw(var);
                let arg = (**a).clone();
                match f {
                    Func::Sin => Expr::mul(Expr::func(Func::Cos, arg), inner),
                    Func::Cos => Expr::mul(Expr::neg(Expr::func(Func::Sin, arg)), inner),
                    Func::Exp => Expr::mul(Expr::func(Func::Exp, arg), inner),
                    Func::Ln => Expr::div(inner, arg),
                }
            }
        }
    }

    /// Simplified symbolic partial derivative with respect to `var`.
    pub fn derivative(&self, var: &str) -> Expr {
        simplify(&self.derivative_raw(var))
    }

    /// Replaces every occurrence of the given variables.
    pub fn substitute(&self, map: &BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Expr::Neg(a) => Expr::neg(a.substitute(map)),
            Expr::Add(a, b) => Expr::add(a.substitute(map), b.substitute(map)),
            Expr::Sub(a, b) => Expr::sub(a.substitute(map), b.substitute(map)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(map), b.substitute(map)),
            Expr::Div(a, b) => Expr::div(a.substitute(map), b.substitute(map)),
            Expr::Pow(a, n) => Expr::pow(a.substitute(map), *n),
            Expr::Func(f, a) => Expr::func(*f, a.substitute(map)),
        }
    }

    pub fn substitute_one(&self, var: &str, value: Expr) -> Expr {
        let map = BTreeMap::from([(var.to_string(), value)]);
        self.substitute(&map)
    }

    /// Bounds `(min, max)` on the total polynomial degree in the variables
    /// selected by `is_tracked`. `None` if some tracked variable appears
    /// non-polynomially; `Some(None)` for an identically zero constant.
    pub fn degree_bounds(&self, is_tracked: &dyn Fn(&str) -> bool) -> Option<Option<(u32, u32)>> {
        let free = |e: &Expr| !e.free_vars().iter().any(|v| is_tracked(v));
        Some(match self {
            Expr::Const(n) if n.is_zero() => None,
            Expr::Const(_) => Some((0, 0)),
            Expr::Var(v) => Some(if is_tracked(v) { (1, 1) } else { (0, 0) }),
            Expr::Neg(a) => a.degree_bounds(is_tracked)?,
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                match (a.degree_bounds(is_tracked)?, b.degree_bounds(is_tracked)?) {
                    (None, x) | (x, None) => x,
                    (Some((a0, a1)), Some((b0, b1))) => Some((a0.min(b0), a1.max(b1))),
                }
            }
            Expr::Mul(a, b) => match (a.degree_bounds(is_tracked)?, b.degree_bounds(is_tracked)?) {
                (None, _) | (_, None) => None,
                (Some((a0, a1)), Some((b0, b1))) => Some((a0 + b0, a1 + b1)),
            },
            Expr::Div(a, b) if free(b) => a.degree_bounds(is_tracked)?,
            Expr::Pow(a, n) if *n >= 0 => {
                let n = u32::try_from(*n).ok()?;
                a.degree_bounds(is_tracked)?.map(|(lo, hi)| (lo * n, hi * n))
            }
            _ if free(self) => Some((0, 0)),
            _ => return None,
        })
    }
}

/// Expression compiled against a fixed variable layout for repeated evaluation.
#[derive(Debug, Clone)]
pub struct Compiled(Node);

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Pow(Box<Node>, i64),
    Func(Func, Box<Node>),
}

impl Compiled {
    pub fn new(e: &Expr, slots: &[String]) -> Result<Compiled, ExprError> {
        fn go(e: &Expr, slots: &[String]) -> Result<Node, ExprError> {
            let bin = |op, a: &Expr, b: &Expr| -> Result<Node, ExprError> {
                Ok(Node::Bin(op, Box::new(go(a, slots)?), Box::new(go(b, slots)?)))
            };
            Ok(match e {
                Expr::Const(n) => Node::Const(n.to_f64()),
                Expr::Var(v) => Node::Slot(
                    slots.iter().position(|s| s == v).ok_or_else(|| ExprError::UnknownVariable(v.clone()))?,
                ),
                Expr::Neg(a) => Node::Neg(Box::new(go(a, slots)?)),
                Expr::Add(a, b) => bin('+', a, b)?,
                Expr::Sub(a, b) => bin('-', a, b)?,
                Expr::Mul(a, b) => bin('*', a, b)?,
                Expr::Div(a, b) => bin('/', a, b)?,
                Expr::Pow(a, n) => Node::Pow(Box::new(go(a, slots)?), *n),
                Expr::Func(f, a) => Node::Func(*f, Box::new(go(a, slots)?)),
            })
        }
        Ok(Compiled(go(e, slots)?))
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        fn go(n: &Node, v: &[f64]) -> Result<f64, EvalError> {
            Ok(match n {
                Node::Const(c) => *c,
                Node::Slot(i) => v[*i],
                Node::Neg(a) => -go(a, v)?,
                Node::Bin(op, a, b) => {
                    let (x, y) = (go(a, v)?, go(b, v)?);
                    match op {
                        '+' => x + y,
                        '-' => x - y,
                        '*' => x * y,
                        _ if y == 0.0 => return Err(EvalError::DivisionByZero),
                        _ => x / y,
                    }
                }
                Node::Pow(a, k) => {
                    let base = go(a, v)?;
                    if base == 0.0 && *k < 0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    number::powi_f64(base, *k)
                }
                Node::Func(f, a) => {
                    let x = go(a, v)?;
                    match f {
                        Func::Sin => x.sin(),
                        Func::Cos => x.cos(),
                        Func::Exp => x.exp(),
                        Func::Ln if x <= 0.0 => return Err(EvalError::LnDomain(x)),
                        Func::Ln => x.ln(),
                    }
                }
            })
        }
        go(&self.0, values)
    }
}

/// Checked partial derivative: `var` must belong to `universe`.
pub fn diff(e: &Expr, var: &str, universe: &SymbolUniverse) -> Result<Expr, ExprError> {
    if !universe.contains(var) {
        return Err(ExprError::UnknownVariable(var.to_string()));
    }
    Ok(e.derivative(var))
}
