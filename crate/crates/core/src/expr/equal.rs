use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{simplify, Compiled, Expr};
use crate::par::Execution;

/// How an equality verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Confidence {
    /// Decided by the simplifier.
    Symbolic,
    /// Decided by evaluation at random points.
    Probabilistic,
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::Symbolic => "symbolic",
            Confidence::Probabilistic => "probabilistic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EqualityVerdict {
    pub equal: bool,
    pub confidence: Confidence,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqualityError {
    #[error("no valid sample point: both sides undefined at all {0} samples")]
    NoValidPoints(usize),
}

/// Sampling policy for the probabilistic fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub points: usize,
    pub low: f64,
    pub high: f64,
    /// Absolute tolerance, scaled by `1 + |a|`.
    pub tol: f64,
    pub seed: u64,
    pub execution: Execution,
}

impl Default for Sampler {
    fn default() -> Self {
        Sampler { points: 64, low: -2.0, high: 2.0, tol: 1e-9, seed: 0, execution: Execution::default() }
    }
}

impl Sampler {
    pub fn with_seed(seed: u64) -> Self {
        Sampler { seed, ..Sampler::default() }
    }

    /// Deterministic sample points for the given (sorted) variables.
    pub fn points_for(&self, vars: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.points)
            .map(|_| (0..vars).map(|_| rng.random_range(self.low..=self.high)).collect())
            .collect()
    }
}

/// Decides `a == b`: first symbolically via `simplify(a - b)`, then by sampling.
pub fn expr_equal(a: &Expr, b: &Expr, sampler: &Sampler) -> Result<EqualityVerdict, EqualityError> {
    let diff = simplify(&Expr::sub(a.clone(), b.clone()));
    if let Some(c) = diff.as_const() {
        return Ok(EqualityVerdict { equal: c.is_zero(), confidence: Confidence::Symbolic });
    }

    let vars: Vec<String> = a.free_vars().union(&b.free_vars()).cloned().collect();
    let (ca, cb) = match (Compiled::new(a, &vars), Compiled::new(b, &vars)) {
        (Ok(ca), Ok(cb)) => (ca, cb),
        _ => unreachable!("variables collected from both sides"),
    };
    let points = sampler.points_for(vars.len());
    let outcomes = sampler.execution.map(&points, |pt| {
        let (va, vb) = (ca.eval(pt).ok()?, cb.eval(pt).ok()?);
        if !va.is_finite() || !vb.is_finite() {
            return None;
        }
        Some((va - vb).abs() <= sampler.tol * (1.0 + va.abs()))
    });
    let mut valid = outcomes.iter().flatten().peekable();
    if valid.peek().is_none() {
        return Err(EqualityError::NoValidPoints(points.len()));
    }
    let equal = valid.all(|&ok| ok);
    Ok(EqualityVerdict { equal, confidence: Confidence::Probabilistic })
}
