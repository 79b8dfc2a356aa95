use std::fmt;

use super::number::literal_text;
use super::{Expr, Number};

/// Grammar position an operand is printed into.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Slot {
    /// Start of an `expr`: leading minus and sums allowed.
    Expr,
    /// Operand after `+`/`-`, or left of `*`/`/`: needs a `term`.
    Term,
    /// Operand right of `*`/`/`: needs a `factor`.
    Factor,
    /// Operand of `^`: needs a `base`.
    Base,
}

/// Weakest slot in which the node may appear without parentheses.
fn required(e: &Expr) -> Slot {
    match e {
        Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_) => Slot::Expr,
        Expr::Const(n) if n.is_negative() => Slot::Expr,
        Expr::Const(n) if literal_text(*n).is_none() => Slot::Term,
        Expr::Mul(..) | Expr::Div(..) => Slot::Term,
        Expr::Pow(..) => Slot::Factor,
        Expr::Const(_) | Expr::Var(_) | Expr::Func(..) => Slot::Base,
    }
}

fn write_const(f: &mut fmt::Formatter<'_>, n: Number) -> fmt::Result {
    write!(f, "{n}")
}

fn write_in(f: &mut fmt::Formatter<'_>, e: &Expr, slot: Slot) -> fmt::Result {
    if required(e) < slot {
        f.write_str("(")?;
        write_node(f, e)?;
        return f.write_str(")");
    }
    write_node(f, e)
}

fn write_node(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Const(n) => write_const(f, *n),
        Expr::Var(v) => f.write_str(v),
        Expr::Neg(a) => {
            f.write_str("-")?;
            write_in(f, a, Slot::Term)
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            write_in(f, a, Slot::Expr)?;
            f.write_str(if matches!(e, Expr::Add(..)) { " + " } else { " - " })?;
            write_in(f, b, Slot::Term)
        }
        Expr::Mul(a, b) | Expr::Div(a, b) => {
            write_in(f, a, Slot::Term)?;
            f.write_str(if matches!(e, Expr::Mul(..)) { "*" } else { "/" })?;
            write_in(f, b, Slot::Factor)
        }
        Expr::Pow(a, n) => {
            write_in(f, a, Slot::Base)?;
            write!(f, "^{n}")
        }
        Expr::Func(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(f, a)?;
            f.write_str(")")
        }
    }
}

/// Prints re-parseable grammar text.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self)
    }
}
