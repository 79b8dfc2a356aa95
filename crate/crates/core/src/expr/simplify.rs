//! Bounded rewrite system.
//!
//! Rules, applied bottom-up and repeated until the tree stops changing:
//!
//! * constant folding over exact rationals (floats only when a rational
//!   overflows); functions fold only at `sin(0)`, `cos(0)`, `exp(0)`, `ln(1)`;
//! * `a^0 = 1`, `a^1 = a`, `1^n = 1`, `0^n = 0` for `n > 0`, `(a^m)^n = a^(mn)`;
//! * products are flattened, constant factors collected into one leading
//!   coefficient, and a zero factor annihilates the product;
//! * `a/1 = a`, `0/a = 0`, `a/c = (1/c)*a` for a constant `c`;
//! * sums (including `-` and unary negation, so `--a = a`) are flattened into
//!   `coefficient * rest` terms; terms with structurally equal `rest` are
//!   merged, zero terms dropped, first-occurrence order kept.
//!
//! No expansion, factoring or trig identities.

use super::{Expr, Func, Number};

const MAX_PASSES: usize = 32;

pub fn simplify(e: &Expr) -> Expr {
    let mut current = pass(e);
    for _ in 0..MAX_PASSES {
        let next = pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    current
}

fn pass(e: &Expr) -> Expr {
    match e {
        Expr::Const(_) | Expr::Var(_) => e.clone(),
        Expr::Neg(_) | Expr::Add(..) | Expr::Sub(..) => normalize_sum(e),
        Expr::Mul(..) => normalize_product(e),
        Expr::Div(a, b) => {
            let (a, b) = (pass(a), pass(b));
            match (a.as_const(), b.as_const()) {
                (_, Some(d)) if d.is_zero() => Expr::div(a, b),
                (Some(n), Some(d)) => n.div(d).map(Expr::Const).unwrap_or_else(|| Expr::div(a, b)),
                (_, Some(d)) if d.is_one() => a,
                (_, Some(d)) => match Number::ONE.div(d) {
                    Some(inv) => normalize_product(&Expr::mul(Expr::Const(inv), a)),
                    None => Expr::div(a, b),
                },
                (Some(n), None) if n.is_zero() => Expr::zero(),
                _ => Expr::div(a, b),
            }
        }
        Expr::Pow(a, n) => {
            let a = pass(a);
            let n = *n;
            if n == 0 {
                return Expr::one();
            }
            if n == 1 {
                return a;
            }
            match &a {
                Expr::Const(c) if c.is_one() => Expr::one(),
                Expr::Const(c) if c.is_zero() && n > 0 => Expr::zero(),
                Expr::Const(c) => c.powi(n).map(Expr::Const).unwrap_or_else(|| Expr::pow(a.clone(), n)),
                Expr::Pow(inner, m) => match m.checked_mul(n) {
                    Some(mn) => pass(&Expr::pow((**inner).clone(), mn)),
                    None => Expr::pow(a.clone(), n),
                },
                _ => Expr::pow(a, n),
            }
        }
        Expr::Func(f, a) => {
            let a = pass(a);
            match (f, a.as_const()) {
                (Func::Sin, Some(c)) if c.is_zero() => Expr::zero(),
                (Func::Cos, Some(c)) if c.is_zero() => Expr::one(),
                (Func::Exp, Some(c)) if c.is_zero() => Expr::one(),
                (Func::Ln, Some(c)) if c.is_one() => Expr::zero(),
                _ => Expr::func(*f, a),
            }
        }
    }
}

/// Splits a simplified term into `coefficient * rest`.
fn split_coeff(e: &Expr) -> (Number, Option<Expr>) {
    match e {
        Expr::Const(c) => (*c, None),
        Expr::Neg(a) => {
            let (c, rest) = split_coeff(a);
            (c.neg(), rest)
        }
        Expr::Mul(a, b) => match a.as_const() {
            Some(c) => (c, Some((**b).clone())),
            None => (Number::ONE, Some(e.clone())),
        },
        _ => (Number::ONE, Some(e.clone())),
    }
}

fn make_term(coeff: Number, rest: Option<Expr>) -> Expr {
    match rest {
        None => Expr::Const(coeff),
        Some(r) if coeff.is_one() => r,
        Some(r) if coeff.neg().is_one() => Expr::neg(r),
        Some(r) => Expr::mul(Expr::Const(coeff), r),
    }
}

fn collect_terms(e: &Expr, negate: bool, out: &mut Vec<(Number, Option<Expr>)>) {
    match e {
        Expr::Add(a, b) => {
            collect_terms(a, negate, out);
            collect_terms(b, negate, out);
        }
        Expr::Sub(a, b) => {
            collect_terms(a, negate, out);
            collect_terms(b, !negate, out);
        }
        Expr::Neg(a) => collect_terms(a, !negate, out),
        other => {
            let simplified = pass(other);
            if matches!(simplified, Expr::Add(..) | Expr::Sub(..) | Expr::Neg(_)) {
                collect_terms(&simplified, negate, out);
                return;
            }
            let (c, rest) = split_coeff(&simplified);
            out.push((if negate { c.neg() } else { c }, rest));
        }
    }
}

fn normalize_sum(e: &Expr) -> Expr {
    let mut raw = Vec::new();
    collect_terms(e, false, &mut raw);

    // Merge like terms; a failed (non-finite) merge keeps the terms apart.
    let mut merged: Vec<(Number, Option<Expr>)> = Vec::new();
    for (c, rest) in raw {
        match merged.iter_mut().find(|(_, r)| *r == rest) {
            Some(slot) => match slot.0.add(c) {
                Some(sum) => slot.0 = sum,
                None => merged.push((c, rest)),
            },
            None => merged.push((c, rest)),
        }
    }
    merged.retain(|(c, _)| !c.is_zero());

    let mut terms = merged.into_iter();
    let Some((c0, r0)) = terms.next() else {
        return Expr::zero();
    };
    let mut acc = make_term(c0, r0);
    for (c, rest) in terms {
        acc = if c.is_negative() {
            Expr::sub(acc, make_term(c.neg(), rest))
        } else {
            Expr::add(acc, make_term(c, rest))
        };
    }
    acc
}

fn collect_factors(e: &Expr, coeff: &mut Number, out: &mut Vec<Expr>) -> bool {
    match e {
        Expr::Mul(a, b) => collect_factors(a, coeff, out) && collect_factors(b, coeff, out),
        other => {
            let simplified = pass(other);
            if let Expr::Mul(..) = simplified {
                return collect_factors(&simplified, coeff, out);
            }
            let (c, rest) = split_coeff(&simplified);
            match coeff.mul(c) {
                Some(product) => *coeff = product,
                None => return false,
            }
            match rest {
                Some(r @ Expr::Mul(..)) => return collect_factors(&r, coeff, out),
                Some(r) => out.push(r),
                None => {}
            }
            true
        }
    }
}

fn normalize_product(e: &Expr) -> Expr {
    let mut coeff = Number::ONE;
    let mut factors = Vec::new();
    if !collect_factors(e, &mut coeff, &mut factors) {
        // Coefficient overflowed to a non-finite value; only simplify children.
        return match e {
            Expr::Mul(a, b) => Expr::mul(pass(a), pass(b)),
            _ => pass(e),
        };
    }
    if coeff.is_zero() {
        return Expr::zero();
    }
    let rest = factors.into_iter().reduce(Expr::mul);
    make_term(coeff, rest)
}
