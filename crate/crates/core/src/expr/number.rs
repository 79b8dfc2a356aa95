use std::fmt;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

type Rational = Ratio<i64>;

/// A constant: exact rational when it fits in `i64` parts, IEEE double otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Number {
    Rational(Rational),
    Float(f64),
}

impl Number {
    pub const ZERO: Number = Number::Rational(Ratio::new_raw(0, 1));
    pub const ONE: Number = Number::Rational(Ratio::new_raw(1, 1));

    pub fn int(value: i64) -> Self {
        Number::Rational(Ratio::from_integer(value))
    }

    pub fn ratio(numer: i64, denom: i64) -> Self {
        Number::Rational(Ratio::new(numer, denom))
    }

    /// Exact conversion when `value` is recovered bit-for-bit by a small rational.
    pub fn from_f64(value: f64) -> Self {
        if value.is_finite() {
            if let Some(r) = Rational::approximate_float(value) {
                if r.to_f64() == Some(value) {
                    return Number::Rational(r);
                }
            }
        }
        Number::Float(value)
    }

    /// Parses a decimal literal (`digits [. digits] [e [+-] digits]`) exactly when possible.
    pub fn from_literal(text: &str) -> Option<Self> {
        let (mantissa, exponent) = match text.find(['e', 'E']) {
            Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
            None => (text, 0),
        };
        let (int_part, frac_part) = match mantissa.find('.') {
            Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
            None => (mantissa, ""),
        };
        if int_part.is_empty() || !int_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let exact = (|| {
            let digits = format!("{int_part}{frac_part}");
            let numer: i64 = digits.trim_start_matches('0').parse().or_else(|e| {
                if digits.bytes().all(|b| b == b'0') {
                    Ok(0)
                } else {
                    Err(e)
                }
            }).ok()?;
            let scale = exponent - frac_part.len() as i32;
            let ten_pow = 10i64.checked_pow(scale.unsigned_abs())?;
            if scale >= 0 {
                Some(Rational::from_integer(numer.checked_mul(ten_pow)?))
            } else {
                Some(Rational::new(numer, ten_pow))
            }
        })();
        match exact {
            Some(r) => Some(Number::Rational(r)),
            None => text.parse::<f64>().ok().filter(|v| v.is_finite()).map(Number::Float),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Number::Rational(r) => *r.numer() as f64 / *r.denom() as f64,
            Number::Float(v) => v,
        }
    }

    pub fn is_zero(self) -> bool {
        match self {
            Number::Rational(r) => r.is_zero(),
            Number::Float(v) => v == 0.0,
        }
    }

    pub fn is_one(self) -> bool {
        match self {
            Number::Rational(r) => r.is_one(),
            Number::Float(v) => v == 1.0,
        }
    }

    pub fn is_negative(self) -> bool {
        match self {
            Number::Rational(r) => r.is_negative(),
            Number::Float(v) => v < 0.0,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Number::Rational(_))
    }

    pub fn neg(self) -> Self {
        match self {
            Number::Rational(r) => match r.numer().checked_neg() {
                Some(n) => Number::Rational(Ratio::new_raw(n, *r.denom())),
                None => Number::Float(-self.to_f64()),
            },
            Number::Float(v) => Number::Float(-v),
        }
    }

    fn combine(
        self,
        other: Self,
        exact: impl Fn(&Rational, &Rational) -> Option<Rational>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Option<Self> {
        if let (Number::Rational(a), Number::Rational(b)) = (self, other) {
            if let Some(r) = exact(&a, &b) {
                return Some(Number::Rational(r));
            }
        }
        let v = float(self.to_f64(), other.to_f64());
        v.is_finite().then_some(Number::Float(v))
    }

    /// `None` when the result is not finite.
    pub fn add(self, other: Self) -> Option<Self> {
        self.combine(other, |a, b| a.checked_add(b), |a, b| a + b)
    }

    pub fn sub(self, other: Self) -> Option<Self> {
        self.combine(other, |a, b| a.checked_sub(b), |a, b| a - b)
    }

    pub fn mul(self, other: Self) -> Option<Self> {
        self.combine(other, |a, b| a.checked_mul(b), |a, b| a * b)
    }

    /// `None` on a zero divisor or a non-finite result.
    pub fn div(self, other: Self) -> Option<Self> {
        if other.is_zero() {
            return None;
        }
        self.combine(other, |a, b| a.checked_div(b), |a, b| a / b)
    }

    pub fn powi(self, exp: i64) -> Option<Self> {
        if exp < 0 {
            return Number::ONE.div(self.powi(exp.checked_neg()?)?);
        }
        if let Number::Rational(r) = self {
            let e = u32::try_from(exp).ok();
            let exact = e.and_then(|e| {
                Some(Rational::new_raw(
                    r.numer().checked_pow(e)?,
                    r.denom().checked_pow(e)?,
                ))
            });
            if let Some(r) = exact {
                return Some(Number::Rational(r));
            }
        }
        let v = powi_f64(self.to_f64(), exp);
        v.is_finite().then_some(Number::Float(v))
    }
}

pub(crate) fn powi_f64(base: f64, exp: i64) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}

/// Denominator of the form 2^a 5^b with a, b small enough for an exact decimal rendering.
fn decimal_places(denom: i64) -> Option<u32> {
    let (mut d, mut twos, mut fives) = (denom, 0u32, 0u32);
    while d % 2 == 0 {
        d /= 2;
        twos += 1;
    }
    while d % 5 == 0 {
        d /= 5;
        fives += 1;
    }
    let places = twos.max(fives);
    (d == 1 && places <= 18).then_some(places)
}

/// Grammar-conformant text for a non-negative value; `None` when it needs a quotient.
pub(crate) fn literal_text(value: Number) -> Option<String> {
    match value {
        Number::Rational(r) => {
            let (n, d) = (*r.numer(), *r.denom());
            debug_assert!(n >= 0);
            if d == 1 {
                return Some(n.to_string());
            }
            let places = decimal_places(d)?;
            let scaled = n as i128 * (10i128.pow(places) / d as i128);
            let digits = format!("{:0>width$}", scaled, width = places as usize + 1);
            let (int, frac) = digits.split_at(digits.len() - places as usize);
            Some(format!("{int}.{frac}"))
        }
        Number::Float(v) => {
            let text = format!("{v:?}");
            Some(text)
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let magnitude = if self.is_negative() { self.neg() } else { *self };
        let sign = if self.is_negative() { "-" } else { "" };
        match literal_text(magnitude) {
            Some(text) => write!(f, "{sign}{text}"),
            None => match magnitude {
                Number::Rational(r) => write!(f, "{sign}{}/{}", r.numer(), r.denom()),
                Number::Float(v) => write!(f, "{sign}{v:?}"),
            },
        }
    }
}
