//! Parallel transport along base curves.
//!
//! All systems are integrated with fixed-step classical RK4 on
//! `t_k = t0 + (t1 - t0) k / steps`. Curve velocities and accelerations are
//! symbolic derivatives of the components.
//!
//! ```text
//! transport1:       ẏ^p   = F_i^p(x, y) ẋ^i
//! transport2:       ẏ^p   = F_i^p ẋ^i,   ẏ_i^p = H_ij^p ẋ^j
//! second_order_ode: ẏ^p   = H_ij^p ẋ^i ẋ^j + F_i^p ẍ^i
//! ```

use std::fmt::Write as _;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::connection::{Connection1, Connection2, Grid2, Grid3};
use crate::expr::{Compiled, EvalError, Expr, SymbolUniverse};
use crate::par::Execution;

/// Maximum gap between consecutive path endpoints (and loop closure).
pub const CLOSURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("steps must be at least 1")]
    Steps,
    #[error("curve interval must satisfy t0 < t1, got [{0}, {1}]")]
    Interval(f64, f64),
    #[error("curve component {index} references `{var}`; only `t` is allowed")]
    CurveVariable { index: usize, var: String },
    #[error("curve has dimension {curve}, connection base has dimension {base}")]
    BaseDim { curve: usize, base: usize },
    #[error("initial value has length {got}, expected {expected}")]
    InitialValue { got: usize, expected: usize },
    #[error("evaluation failed at t = {t}: {source}")]
    Eval { t: f64, source: EvalError },
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("path segments {0} and {1} do not join (gap {2:e})")]
    Disconnected(usize, usize, f64),
    #[error("loop is not closed (gap {0:e})")]
    NotClosed(f64),
    #[error("connection is not linear in the fiber coordinates; matrix holonomy is unavailable")]
    NonLinear,
    #[error("basis must be {0} linearly independent vectors of length {0}")]
    Basis(usize),
    #[error("a path needs at least one segment")]
    EmptyPath,
    #[error("periods must list {0} entries, each null or a positive number")]
    Periods(usize),
}

/// Base curve `x^i(t)`, `t ∈ [t0, t1]`.
#[derive(Debug, Clone)]
pub struct Curve {
    components: Vec<Expr>,
    velocity: Vec<Expr>,
    acceleration: Vec<Expr>,
    compiled: [Vec<Compiled>; 3],
    t0: f64,
    t1: f64,
}

impl PartialEq for Curve {
    fn eq(&self, other: &Self) -> bool {
        self.components == other.components && self.t0 == other.t0 && self.t1 == other.t1
    }
}

/// Universe for curve components.
pub fn curve_universe() -> SymbolUniverse {
    SymbolUniverse::symbols(["t"]).expect("`t` is a valid identifier")
}

fn compile_all(es: &[Expr]) -> Vec<Compiled> {
    let slots = ["t".to_string()];
    es.iter().map(|e| Compiled::new(e, &slots).expect("curve components use only `t`")).collect()
}

impl Curve {
    pub fn new(components: Vec<Expr>, t0: f64, t1: f64) -> Result<Self, TransportError> {
        if !(t0 < t1) || !t0.is_finite() || !t1.is_finite() {
            return Err(TransportError::Interval(t0, t1));
        }
        for (index, c) in components.iter().enumerate() {
            if let Some(var) = c.free_vars().into_iter().find(|v| v != "t") {
                return Err(TransportError::CurveVariable { index, var });
            }
        }
        let velocity: Vec<Expr> = components.iter().map(|c| c.derivative("t")).collect();
        let acceleration: Vec<Expr> = velocity.iter().map(|c| c.derivative("t")).collect();
        let compiled = [compile_all(&components), compile_all(&velocity), compile_all(&acceleration)];
        Ok(Curve { components, velocity, acceleration, compiled, t0, t1 })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn velocity(&self) -> &[Expr] {
        &self.velocity
    }

    pub fn acceleration(&self) -> &[Expr] {
        &self.acceleration
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn eval(&self, which: usize, t: f64) -> Result<Vec<f64>, TransportError> {
        self.compiled[which]
            .iter()
            .map(|c| match c.eval(&[t]) {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(TransportError::NonFinite { t }),
                Err(source) => Err(TransportError::Eval { t, source }),
            })
            .collect()
    }

    pub fn position(&self, t: f64) -> Result<Vec<f64>, TransportError> {
        self.eval(0, t)
    }

    pub fn start(&self) -> Result<Vec<f64>, TransportError> {
        self.position(self.t0)
    }

    pub fn end(&self) -> Result<Vec<f64>, TransportError> {
        self.position(self.t1)
    }

    /// The same trace traversed backwards: `t ↦ t0 + t1 - t`.
    pub fn reversed(&self) -> Curve {
        let flip = Expr::sub(Expr::num(crate::expr::Number::Float(self.t0 + self.t1)), Expr::var("t"));
        let components = self.components.iter().map(|c| crate::expr::simplify(&c.substitute_one("t", flip.clone()))).collect();
        Curve::new(components, self.t0, self.t1).expect("reversal keeps the interval and variables")
    }
}

/// A piecewise curve; consecutive segments must join.
///
/// Base coordinates may be declared periodic (angles); closure of the path is
/// then measured modulo the period.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    segments: Vec<Curve>,
    periods: Vec<Option<f64>>,
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

fn periodic_gap(a: &[f64], b: &[f64], periods: &[Option<f64>]) -> f64 {
    a.iter().zip(b).zip(periods).fold(0.0, |acc, ((x, y), period)| {
        let d = x - y;
        let d = match period {
            Some(p) => d - (d / p).round() * p,
            None => d,
        };
        acc.max(d.abs())
    })
}

impl Path {
    pub fn new(segments: Vec<Curve>) -> Result<Self, TransportError> {
        let first = segments.first().ok_or(TransportError::EmptyPath)?;
        let dim = first.dim();
        for (k, pair) in segments.windows(2).enumerate() {
            if pair[1].dim() != dim {
                return Err(TransportError::BaseDim { curve: pair[1].dim(), base: dim });
            }
            let g = gap(&pair[0].end()?, &pair[1].start()?);
            if g > CLOSURE_TOL {
                return Err(TransportError::Disconnected(k, k + 1, g));
            }
        }
        let periods = vec![None; dim];
        Ok(Path { segments, periods })
    }

    /// Declares periodic base coordinates (`None` for ordinary ones).
    pub fn with_periods(mut self, periods: Vec<Option<f64>>) -> Result<Self, TransportError> {
        if periods.len() != self.dim() || periods.iter().flatten().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(TransportError::Periods(self.dim()));
        }
        self.periods = periods;
        Ok(self)
    }

    pub fn periods(&self) -> &[Option<f64>] {
        &self.periods
    }

    pub fn segments(&self) -> &[Curve] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].dim()
    }

    /// Max-abs gap between the start and the end point.
    pub fn closure_gap(&self) -> Result<f64, TransportError> {
        let (a, b) = (self.segments[0].start()?, self.segments[self.segments.len() - 1].end()?);
        Ok(periodic_gap(&a, &b, &self.periods))
    }

    pub fn reversed(&self) -> Path {
        Path { segments: self.segments.iter().rev().map(Curve::reversed).collect(), periods: self.periods.clone() }
    }
}

impl From<Curve> for Path {
    fn from(c: Curve) -> Self {
        Path { periods: vec![None; c.dim()], segments: vec![c] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rhs_evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    /// Column names after `t`: `y1..yn`, then `y{p}_{i}` for second-order transport.
    pub labels: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
}

impl TransportResult {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("at least the initial sample")
    }

    /// Fiber part `y^p` of the final state.
    pub fn final_y(&self, n: usize) -> &[f64] {
        &self.final_state()[..n]
    }

    /// CSV with header `t,<labels>`; numbers use the shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (t, state) in self.times.iter().zip(&self.states) {
            write!(out, "{t}").unwrap();
            for v in state {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Concatenates consecutive results; the joined sample is kept once and
    /// the times of `next` are shifted to continue from the last time.
    fn append(&mut self, next: TransportResult) {
        self.stats.steps += next.stats.steps;
        self.stats.rhs_evaluations += next.stats.rhs_evaluations;
        let offset = self.times.last().copied().unwrap_or(0.0) - next.times[0];
        self.times.extend(next.times.into_iter().skip(1).map(|t| t + offset));
        self.states.extend(next.states.into_iter().skip(1));
    }
}

/// Classical RK4 with `steps` equal steps; the first sample is `y0` as given.
pub fn rk4<F>(rhs: F, t0: f64, t1: f64, y0: &[f64], steps: usize) -> Result<TransportResult, TransportError>
where
    F: Fn(f64, &[f64]) -> Result<Vec<f64>, TransportError>,
{
    if steps == 0 {
        return Err(TransportError::Steps);
    }
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(y0.to_vec());
    let axpy = |y: &[f64], a: f64, k: &[f64]| -> Vec<f64> { y.iter().zip(k).map(|(y, k)| y + a * k).collect() };
    let mut y = y0.to_vec();
    for step in 0..steps {
        let t = t0 + (t1 - t0) * step as f64 / steps as f64;
        let k1 = rhs(t, &y)?;
        let k2 = rhs(t + h / 2.0, &axpy(&y, h / 2.0, &k1))?;
        let k3 = rhs(t + h / 2.0, &axpy(&y, h / 2.0, &k2))?;
        let k4 = rhs(t + h, &axpy(&y, h, &k3))?;
        for (idx, yi) in y.iter_mut().enumerate() {
            *yi += h / 6.0 * (k1[idx] + 2.0 * k2[idx] + 2.0 * k3[idx] + k4[idx]);
        }
        let t_next = t0 + (t1 - t0) * (step + 1) as f64 / steps as f64;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(TransportError::NonFinite { t: t_next });
        }
        times.push(t_next);
        states.push(y.clone());
    }
    Ok(TransportResult {
        labels: (1..=y0.len()).map(|k| format!("s{k}")).collect(),
        times,
        states,
        stats: IntegratorStats { steps, rhs_evaluations: 4 * steps },
    })
}

/// Coefficient grids compiled against `[x1..xm, y1..yn]`.
struct Field {
    m: usize,
    n: usize,
    f: Vec<Vec<Compiled>>,
    h: Vec<Vec<Vec<Compiled>>>,
}

fn slots(u: &SymbolUniverse) -> Vec<String> {
    let mut s = u.base_vars();
    s.extend(u.fiber_vars());
    s
}

impl Field {
    fn new(u: &SymbolUniverse, f: &Grid2, h: Option<&Grid3>) -> Field {
        let slots = slots(u);
        let c = |e: &Expr| Compiled::new(e, &slots).expect("connection coefficients use base and fiber coordinates");
        Field {
            m: u.base_dim(),
            n: u.fiber_dim(),
            f: f.iter().map(|r| r.iter().map(c).collect()).collect(),
            h: h.map(|h| h.iter().map(|b| b.iter().map(|r| r.iter().map(c).collect()).collect()).collect())
                .unwrap_or_default(),
        }
    }
}

fn eval_at(c: &Compiled, args: &[f64], t: f64) -> Result<f64, TransportError> {
    match c.eval(args) {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(TransportError::NonFinite { t }),
        Err(source) => Err(TransportError::Eval { t, source }),
    }
}

fn check_inputs(m: usize, n: usize, curve: &Curve, y0: &[f64], steps: usize) -> Result<(), TransportError> {
    if steps == 0 {
        return Err(TransportError::Steps);
    }
    if curve.dim() != m {
        return Err(TransportError::BaseDim { curve: curve.dim(), base: m });
    }
    if y0.len() != n {
        return Err(TransportError::InitialValue { got: y0.len(), expected: n });
    }
    Ok(())
}

fn fiber_labels(n: usize) -> Vec<String> {
    (1..=n).map(SymbolUniverse::fiber_var).collect()
}

/// `ẏ^p = F_i^p(x(t), y) ẋ^i(t)`.
pub fn transport1(gamma: &Connection1, curve: &Curve, y0: &[f64], steps: usize) -> Result<TransportResult, TransportError> {
    let (m, n) = (gamma.base_dim(), gamma.fiber_dim());
    check_inputs(m, n, curve, y0, steps)?;
    let field = Field::new(gamma.universe(), gamma.coefficients(), None);
    let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>, TransportError> {
        let mut args = curve.position(t)?;
        let xdot = curve.eval(1, t)?;
        args.extend_from_slice(y);
        (0..field.n)
            .map(|p| {
                let mut acc = 0.0;
                for i in 0..field.m {
                    acc += eval_at(&field.f[p][i], &args, t)? * xdot[i];
                }
                Ok(acc)
            })
            .collect()
    };
    let (t0, t1) = curve.interval();
    let mut result = rk4(rhs, t0, t1, y0, steps)?;
    result.labels = fiber_labels(n);
    Ok(result)
}

/// Coupled system on `(y^p, y_i^p)`; `y0i[p][i]` holds the initial `y_i^p`.
pub fn transport2(
    delta: &Connection2,
    curve: &Curve,
    y0: &[f64],
    y0i: &[Vec<f64>],
    steps: usize,
) -> Result<TransportResult, TransportError> {
    let (m, n) = (delta.base_dim(), delta.fiber_dim());
    check_inputs(m, n, curve, y0, steps)?;
    if y0i.len() != n || y0i.iter().any(|r| r.len() != m) {
        return Err(TransportError::InitialValue { got: y0i.iter().map(Vec::len).sum(), expected: n * m });
    }
    let field = Field::new(delta.universe(), delta.f(), Some(delta.h()));
    let rhs = |t: f64, state: &[f64]| -> Result<Vec<f64>, TransportError> {
        let mut args = curve.position(t)?;
        let xdot = curve.eval(1, t)?;
        args.extend_from_slice(&state[..n]);
        let mut out = Vec::with_capacity(n + n * m);
        for p in 0..n {
            let mut acc = 0.0;
            for i in 0..m {
                acc += eval_at(&field.f[p][i], &args, t)? * xdot[i];
            }
            out.push(acc);
        }
        for p in 0..n {
            for i in 0..m {
                let mut acc = 0.0;
                for j in 0..m {
                    acc += eval_at(&field.h[p][i][j], &args, t)? * xdot[j];
                }
                out.push(acc);
            }
        }
        Ok(out)
    };
    let mut initial = y0.to_vec();
    initial.extend(y0i.iter().flatten());
    let (t0, t1) = curve.interval();
    let mut result = rk4(rhs, t0, t1, &initial, steps)?;
    let mut labels = fiber_labels(n);
    for p in 1..=n {
        for i in 1..=m {
            labels.push(format!("y{p}_{i}"));
        }
    }
    result.labels = labels;
    Ok(result)
}

/// `ẏ^p = H_ij^p ẋ^i ẋ^j + F_i^p ẍ^i`.
pub fn second_order_ode(delta: &Connection2, curve: &Curve, y0: &[f64], steps: usize) -> Result<TransportResult, TransportError> {
    let (m, n) = (delta.base_dim(), delta.fiber_dim());
    check_inputs(m, n, curve, y0, steps)?;
    let field = Field::new(delta.universe(), delta.f(), Some(delta.h()));
    let rhs = |t: f64, y: &[f64]| -> Result<Vec<f64>, TransportError> {
        let mut args = curve.position(t)?;
        let xdot = curve.eval(1, t)?;
        let xddot = curve.eval(2, t)?;
        args.extend_from_slice(y);
        (0..n)
            .map(|p| {
                let mut acc = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        acc += eval_at(&field.h[p][i][j], &args, t)? * xdot[i] * xdot[j];
                    }
                    acc += eval_at(&field.f[p][i], &args, t)? * xddot[i];
                }
                Ok(acc)
            })
            .collect()
    };
    let (t0, t1) = curve.interval();
    let mut result = rk4(rhs, t0, t1, y0, steps)?;
    result.labels = fiber_labels(n);
    Ok(result)
}

/// `transport1` along each segment in turn, `steps` per segment. Sample times
/// accumulate over segments.
pub fn transport_path(gamma: &Connection1, path: &Path, y0: &[f64], steps: usize) -> Result<TransportResult, TransportError> {
    let mut segments = path.segments().iter();
    let mut result = transport1(gamma, segments.next().expect("paths are non-empty"), y0, steps)?;
    for seg in segments {
        let next = transport1(gamma, seg, &result.final_state().to_vec(), steps)?;
        result.append(next);
    }
    Ok(result)
}

/// Independent transports of several initial values.
pub fn transport_batch(
    gamma: &Connection1,
    path: &Path,
    initial: &[Vec<f64>],
    steps: usize,
    execution: Execution,
) -> Vec<Result<TransportResult, TransportError>> {
    execution.map(initial, |y0| transport_path(gamma, path, y0, steps))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Holonomy {
    /// Holonomy map in standard coordinates: `T(B) B⁻¹`.
    pub matrix: DMatrix<f64>,
    /// `max |matrix - I|`.
    pub defect: f64,
}

/// Transports each basis vector around a closed path and returns the fiber map.
///
/// `basis` defaults to the standard basis; `steps` applies per segment.
pub fn loop_holonomy(
    gamma: &Connection1,
    path: &Path,
    basis: Option<&[Vec<f64>]>,
    steps: usize,
    execution: Execution,
) -> Result<Holonomy, TransportError> {
    let n = gamma.fiber_dim();
    let closure = path.closure_gap()?;
    if closure > CLOSURE_TOL {
        return Err(TransportError::NotClosed(closure));
    }
    if !gamma.is_fiber_linear() {
        return Err(TransportError::NonLinear);
    }
    let vectors: Vec<Vec<f64>> = match basis {
        Some(b) => b.to_vec(),
        None => (0..n).map(|k| (0..n).map(|j| (j == k) as u8 as f64).collect()).collect(),
    };
    if vectors.len() != n || vectors.iter().any(|v| v.len() != n) {
        return Err(TransportError::Basis(n));
    }
    let b = DMatrix::from_fn(n, n, |r, c| vectors[c][r]);
    let b_inv = b.clone().try_inverse().ok_or(TransportError::Basis(n))?;
    let transported = transport_batch(gamma, path, &vectors, steps, execution);
    let mut t = DMatrix::zeros(n, n);
    for (c, result) in transported.into_iter().enumerate() {
        let result = result?;
        for (r, v) in result.final_state().iter().enumerate() {
            t[(r, c)] = *v;
        }
    }
    let matrix = t * b_inv;
    let defect = (&matrix - DMatrix::identity(n, n)).amax();
    Ok(Holonomy { matrix, defect })
}

/// Final fiber values of each vector transported around a path; no linearity needed.
pub fn transport_vectors(
    gamma: &Connection1,
    path: &Path,
    vectors: &[Vec<f64>],
    steps: usize,
    execution: Execution,
) -> Result<Vec<Vec<f64>>, TransportError> {
    transport_batch(gamma, path, vectors, steps, execution)
        .into_iter()
        .map(|r| r.map(|r| r.final_state().to_vec()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{affine_to_general, curvature, ehresmann_prolongation, AffineConnection};
    use crate::expr::{parse_expr, Assignment};

    fn conn(m: usize, n: usize, rows: &[&[&str]]) -> Connection1 {
        let u = SymbolUniverse::new(m, n).unwrap();
        Connection1::new(u.clone(), rows.iter().map(|r| r.iter().map(|t| parse_expr(t, &u).unwrap()).collect()).collect())
            .unwrap()
    }

    fn curve(components: &[&str], t0: f64, t1: f64) -> Curve {
        let u = curve_universe();
        Curve::new(components.iter().map(|c| parse_expr(c, &u).unwrap()).collect(), t0, t1).unwrap()
    }

    fn exp_error(steps: usize) -> f64 {
        let r = transport1(&conn(1, 1, &[&["y1"]]), &curve(&["t"], 0.0, 1.0), &[1.0], steps).unwrap();
        (r.final_state()[0] - std::f64::consts::E).abs()
    }

    #[test]
    fn zero_connection_keeps_fiber_value() {
        let g = Connection1::zero(SymbolUniverse::new(2, 2).unwrap());
        let r = transport1(&g, &curve(&["cos(t)", "t^2"], 0.0, 2.0), &[0.5, -1.0], 10).unwrap();
        assert!(r.states.iter().all(|s| s == &[0.5, -1.0]));
        assert_eq!(r.times.len(), 11);
        assert_eq!(r.times[10], 2.0);
    }

    #[test]
    fn exponential_and_convergence_order() {
        assert!(exp_error(100) < 1e-7);
        let ratio = exp_error(200) / exp_error(100);
        assert!((1.0 / 20.0..=1.0 / 12.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn transport2_reproduces_transport1_on_prolongation() {
        let g = conn(1, 1, &[&["y1"]]);
        let c = curve(&["t"], 0.0, 1.0);
        let r1 = transport1(&g, &c, &[1.0], 100).unwrap();
        let r2 = transport2(&ehresmann_prolongation(&g), &c, &[1.0], &[vec![1.0]], 100).unwrap();
        for (a, b) in r1.states.iter().zip(&r2.states) {
            assert!((a[0] - b[0]).abs() <= 1e-12);
        }
        assert_eq!(r2.labels, ["y1", "y1_1"]);
        let zero = transport2(&Connection2::zero(SymbolUniverse::new(1, 1).unwrap()), &c, &[2.0], &[vec![3.0]], 5).unwrap();
        assert!(zero.states.iter().all(|s| s == &[2.0, 3.0]));
    }

    #[test]
    fn second_order_examples() {
        let u = SymbolUniverse::new(1, 1).unwrap();
        let c = curve(&["t"], 0.0, 1.0);
        let mut h = Connection2::zero(u.clone());
        assert!(second_order_ode(&h, &c, &[0.0], 10).unwrap().final_state()[0] == 0.0);
        // F = y, H = 0, ẍ = 0.
        h = Connection2::new(u.clone(), vec![vec![Expr::var("y1")]], vec![vec![Expr::var("y1")]], vec![vec![vec![Expr::zero()]]])
            .unwrap();
        assert_eq!(second_order_ode(&h, &c, &[1.5], 10).unwrap().final_state()[0], 1.5);
        // F = 0, H11 = 1.
        h = Connection2::new(u.clone(), vec![vec![Expr::zero()]], vec![vec![Expr::zero()]], vec![vec![vec![Expr::one()]]]).unwrap();
        assert!((second_order_ode(&h, &c, &[0.0], 10).unwrap().final_state()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn linear_transport_is_linear() {
        let g = conn(2, 2, &[&["x2*y1 - y2", "sin(x1)*y2"], &["y1", "x1*x2*y2 + y1"]]);
        let c = curve(&["cos(t)", "sin(2*t)"], 0.0, 1.5);
        let run = |y: &[f64]| transport1(&g, &c, y, 200).unwrap().final_state().to_vec();
        let (a, b) = ([0.3, -1.2], [2.0, 0.7]);
        let (ta, tb) = (run(&a), run(&b));
        let sum = run(&[a[0] + b[0], a[1] + b[1]]);
        let scaled = run(&[3.5 * a[0], 3.5 * a[1]]);
        for k in 0..2 {
            assert!((sum[k] - ta[k] - tb[k]).abs() <= 1e-9 * (1.0 + sum[k].abs()));
            assert!((scaled[k] - 3.5 * ta[k]).abs() <= 1e-9 * (1.0 + scaled[k].abs()));
        }
    }

    #[test]
    fn reversed_curve_inverts_transport() {
        let g = conn(2, 1, &[&["y1^2*x2", "cos(y1) + x1"]]);
        let c = curve(&["t^2", "sin(t)"], 0.0, 1.0);
        let forward = transport1(&g, &c, &[0.4], 400).unwrap();
        let back = transport1(&g, &c.reversed(), forward.final_state(), 400).unwrap();
        assert!((back.final_state()[0] - 0.4).abs() < 1e-7);
    }

    #[test]
    fn singularity_reports_time() {
        let g = conn(1, 1, &[&["1/x1"]]);
        let err = transport1(&g, &curve(&["t - 0.5"], 0.0, 1.0), &[0.0], 4).unwrap_err();
        assert!(matches!(err, TransportError::Eval { t, .. } if t == 0.5));
        assert!(matches!(transport1(&g, &curve(&["t"], 1.0, 2.0), &[0.0], 0), Err(TransportError::Steps)));
    }

    #[test]
    fn zero_and_flat_holonomy() {
        let loop_ = curve(&["1", "t"], 0.0, 2.0 * std::f64::consts::PI);
        let zero = Connection1::zero(SymbolUniverse::new(2, 2).unwrap());
        let open = Path::from(loop_);
        assert!(matches!(loop_holonomy(&zero, &open, None, 10, Execution::default()), Err(TransportError::NotClosed(_))));
        let path = open.with_periods(vec![None, Some(2.0 * std::f64::consts::PI)]).unwrap();
        let h = loop_holonomy(&zero, &path, None, 10, Execution::default()).unwrap();
        assert_eq!(h.defect, 0.0);

        let u = SymbolUniverse::new(2, 2).unwrap();
        let p = |t: &str| parse_expr(t, &u).unwrap();
        let mut gamma = vec![vec![vec![Expr::zero(); 2]; 2]; 2];
        gamma[0][1][1] = p("-x1");
        gamma[1][0][1] = p("1/x1");
        gamma[1][1][0] = p("1/x1");
        let polar = affine_to_general(&AffineConnection::new(2, gamma).unwrap());
        let h = loop_holonomy(&polar, &path, None, 2000, Execution::default()).unwrap();
        assert!(h.defect < 1e-5, "defect {}", h.defect);
        let skew = [vec![1.0, 1.0], vec![0.0, 2.0]];
        assert!(loop_holonomy(&polar, &path, Some(&skew), 2000, Execution::Sequential).unwrap().defect < 1e-5);
    }

    /// Square of side `eps` anticlockwise from `(a, b)`.
    pub(crate) fn square(a: f64, b: f64, eps: f64) -> Path {
        let f = |v: f64| format!("{v:?}");
        let segs = [
            [format!("{} + t", f(a)), f(b)],
            [f(a + eps), format!("{} + t", f(b))],
            [format!("{} - t", f(a + eps)), f(b + eps)],
            [f(a), format!("{} - t", f(b + eps))],
        ];
        Path::new(segs.iter().map(|s| curve(&[&s[0], &s[1]], 0.0, eps)).collect()).unwrap()
    }

    #[test]
    fn small_square_defect_matches_curvature() {
        let g = conn(2, 1, &[&["0", "x1*y1"]]);
        let eps = 1e-2;
        let (a, b) = (0.3, -0.2);
        let h = loop_holonomy(&g, &square(a, b, eps), None, 50, Execution::default()).unwrap();
        let r = curvature(&g);
        let at = Assignment::new().with("x1", a + eps / 2.0).with("x2", b + eps / 2.0).with("y1", 1.0);
        let expected = r[0][0][1].eval(&at).unwrap().abs() * eps * eps;
        assert!((h.defect - expected).abs() <= 0.1 * expected, "{} vs {}", h.defect, expected);
    }

    #[test]
    fn holonomy_preconditions() {
        let g = conn(2, 1, &[&["y1^2", "0"]]);
        let closed = Path::from(curve(&["cos(t)", "sin(t)"], 0.0, 2.0 * std::f64::consts::PI));
        assert_eq!(loop_holonomy(&g, &closed, None, 10, Execution::default()), Err(TransportError::NonLinear));
        assert_eq!(transport_vectors(&g, &closed, &[vec![0.1]], 10, Execution::default()).unwrap().len(), 1);
        let open = Path::from(curve(&["t", "0"], 0.0, 1.0));
        assert!(matches!(loop_holonomy(&g, &open, None, 10, Execution::default()), Err(TransportError::NotClosed(_))));
        assert!(matches!(
            Path::new(vec![curve(&["t", "0"], 0.0, 1.0), curve(&["t", "1"], 0.0, 1.0)]),
            Err(TransportError::Disconnected(0, 1, _))
        ));
    }

    #[test]
    fn csv_layout() {
        let r = transport1(&conn(1, 1, &[&["0"]]), &curve(&["t"], 0.0, 1.0), &[0.25], 2).unwrap();
        assert_eq!(r.to_csv(), "t,y1\n0,0.25\n0.5,0.25\n1,0.25\n");
    }

    #[test]
    fn batch_modes_agree() {
        let g = conn(1, 2, &[&["y2"], &["-y1"]]);
        let path = Path::from(curve(&["t"], 0.0, 3.0));
        let init: Vec<Vec<f64>> = (0..16).map(|k| vec![k as f64, 1.0 - k as f64]).collect();
        let seq = transport_batch(&g, &path, &init, 50, Execution::Sequential);
        let par = transport_batch(&g, &path, &init, 50, Execution::Parallel);
        assert_eq!(seq, par);
    }
}
