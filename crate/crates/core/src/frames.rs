//! Adapted frames and coframes.
//!
//! Frame matrices hold the vector fields as columns in the coordinate basis
//! `(∂_j, ∂_β)`; coframe matrices hold the 1-forms as rows in `(du^j, du^β)`.
//! For a connection `Γ` on `Y -> M`:
//!
//! ```text
//! X_i = ∂_i + Γ_i^β ∂_β        ω^α = du^α - Γ_j^α du^j
//! ```
//!
//! Two-fold fibered manifolds use coordinates `u` (base), `v` (α₁), `w` (α₂)
//! and `z` (α₁₂). The frame is block unitriangular:
//!
//! ```text
//! | δ       0        0        0 |
//! | Γ^α₁_i  δ        0        0 |
//! | Γ^α₂_i  0        δ        0 |
//! | Γ̂^α₁₂_i Γ^α₁₂_β₁ Γ^α₁₂_β₂ δ |
//! ```
//!
//! and its dual coframe replaces the lower-left entry by `-Γ̄` with
//! `Γ̄ = Γ̂ - Γ^α₁₂_β₁ Γ^β₁_i - Γ^α₁₂_β₂ Γ^β₂_i`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::connection::{Connection1, Connection2, Grid2, Grid3};
use crate::expr::{expr_equal, simplify, Assignment, EvalError, Expr, Sampler, SymbolUniverse};

/// Number of random points used by the numeric duality check.
pub const DUALITY_POINTS: usize = 100;
pub const DUALITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("dimensions must be positive, got {0:?}")]
    Dims([usize; 4]),
    #[error("block `{block}` has wrong shape: expected {rows}x{cols}")]
    Shape { block: &'static str, rows: usize, cols: usize },
    #[error("block `{block}` references `{var}`, which is not a two-fold coordinate or not allowed here")]
    BadVariable { block: &'static str, var: String },
    #[error("coframe is not the inverse of the frame at {point:?}: error {error:e}")]
    NotInverse { point: Vec<(String, f64)>, error: f64 },
    #[error("frame cannot be evaluated at any of {0} sample points")]
    NoValidPoints(usize),
    #[error("expected {expected} components, got {got}")]
    Components { expected: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn delta(i: usize, j: usize) -> Expr {
    if i == j {
        Expr::one()
    } else {
        Expr::zero()
    }
}

fn identity(size: usize) -> Grid2 {
    (0..size).map(|i| (0..size).map(|j| delta(i, j)).collect()).collect()
}

/// Symbolic matrix product with each entry simplified.
pub fn mat_mul(a: &Grid2, b: &Grid2) -> Grid2 {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| {
                    simplify(&Expr::sum(
                        (0..inner)
                            .filter(|&k| !row[k].is_zero() && !b[k][j].is_zero())
                            .map(|k| Expr::mul(row[k].clone(), b[k][j].clone())),
                    ))
                })
                .collect()
        })
        .collect()
}

/// Evaluates a grid at a point.
pub fn evaluate(grid: &Grid2, at: &Assignment) -> Result<DMatrix<f64>, EvalError> {
    let rows = grid.len();
    let cols = grid.first().map_or(0, Vec::len);
    let mut out = DMatrix::zeros(rows, cols);
    for (r, row) in grid.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            out[(r, c)] = e.eval(at)?;
        }
    }
    Ok(out)
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Adapted frame `(X_i, X_α)` and coframe `(ω^i, ω^α)` of a first-order connection.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFrame {
    pub universe: SymbolUniverse,
    pub frame: Grid2,
    pub coframe: Grid2,
}

impl AdaptedFrame {
    /// `coframe · frame`, simplified entrywise.
    pub fn duality_product(&self) -> Grid2 {
        mat_mul(&self.coframe, &self.frame)
    }

    pub fn is_dual(&self) -> bool {
        let size = self.frame.len();
        self.duality_product() == identity(size) && mat_mul(&self.frame, &self.coframe) == identity(size)
    }

    /// Both matrices evaluated at `(x, y)`.
    pub fn at(&self, x: &[f64], y: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>), EvalError> {
        let assignment = point(&self.universe, x, y);
        Ok((evaluate(&self.frame, &assignment)?, evaluate(&self.coframe, &assignment)?))
    }
}

fn point(universe: &SymbolUniverse, x: &[f64], y: &[f64]) -> Assignment {
    universe
        .base_vars()
        .into_iter()
        .zip(x.iter().copied())
        .chain(universe.fiber_vars().into_iter().zip(y.iter().copied()))
        .collect()
}

pub fn adapted_frame(gamma: &Connection1) -> AdaptedFrame {
    let (m, n) = (gamma.base_dim(), gamma.fiber_dim());
    let f = gamma.coefficients();
    let mut frame = identity(m + n);
    let mut coframe = identity(m + n);
    for b in 0..n {
        for i in 0..m {
            frame[m + b][i] = f[b][i].clone();
            coframe[m + b][i] = simplify(&Expr::neg(f[b][i].clone()));
        }
    }
    AdaptedFrame { universe: gamma.universe().clone(), frame, coframe }
}

/// `(n, r₁, r₂, r₁₂)`.
pub type TwoFoldDims = [usize; 4];

/// A connection on a two-fold fibered manifold, given by the five frame blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoFoldConnection {
    dims: TwoFoldDims,
    universe: SymbolUniverse,
    /// `Γ^α₁_j`, r₁×n.
    pub gamma1: Grid2,
    /// `Γ^α₂_j`, r₂×n.
    pub gamma2: Grid2,
    /// `Γ^α₁₂_j`, r₁₂×n.
    pub gamma12: Grid2,
    /// `Γ^α₁₂_β₁`, r₁₂×r₁.
    pub gamma12_1: Grid2,
    /// `Γ^α₁₂_β₂`, r₁₂×r₂.
    pub gamma12_2: Grid2,
}

/// Variable names of a two-fold chart: `u1..`, `v1..`, `w1..`, `z1..`.
pub fn twofold_vars(dims: TwoFoldDims) -> Vec<String> {
    ["u", "v", "w", "z"]
        .iter()
        .zip(dims)
        .flat_map(|(prefix, d)| (1..=d).map(move |k| format!("{prefix}{k}")))
        .collect()
}

pub fn twofold_universe(dims: TwoFoldDims) -> Result<SymbolUniverse, FrameError> {
    if dims.contains(&0) {
        return Err(FrameError::Dims(dims));
    }
    Ok(SymbolUniverse::symbols(twofold_vars(dims)).expect("generated names are valid identifiers"))
}

fn check_block(
    block: &'static str,
    grid: &Grid2,
    rows: usize,
    cols: usize,
    universe: &SymbolUniverse,
) -> Result<(), FrameError> {
    if grid.len() != rows || grid.iter().any(|r| r.len() != cols) {
        return Err(FrameError::Shape { block, rows, cols });
    }
    for e in grid.iter().flatten() {
        if let Some(var) = e.free_vars().into_iter().find(|v| !universe.contains(v)) {
            return Err(FrameError::BadVariable { block, var });
        }
    }
    Ok(())
}

impl TwoFoldConnection {
    pub fn new(
        dims: TwoFoldDims,
        gamma1: Grid2,
        gamma2: Grid2,
        gamma12: Grid2,
        gamma12_1: Grid2,
        gamma12_2: Grid2,
    ) -> Result<Self, FrameError> {
        let universe = twofold_universe(dims)?;
        let [n, r1, r2, r12] = dims;
        check_block("gamma1", &gamma1, r1, n, &universe)?;
        check_block("gamma2", &gamma2, r2, n, &universe)?;
        check_block("gamma12", &gamma12, r12, n, &universe)?;
        check_block("gamma12_1", &gamma12_1, r12, r1, &universe)?;
        check_block("gamma12_2", &gamma12_2, r12, r2, &universe)?;
        Ok(TwoFoldConnection { dims, universe, gamma1, gamma2, gamma12, gamma12_1, gamma12_2 })
    }

    pub fn zero(dims: TwoFoldDims) -> Result<Self, FrameError> {
        let [n, r1, r2, r12] = dims;
        let z = |r: usize, c: usize| vec![vec![Expr::zero(); c]; r];
        Self::new(dims, z(r1, n), z(r2, n), z(r12, n), z(r12, r1), z(r12, r2))
    }

    pub fn dims(&self) -> TwoFoldDims {
        self.dims
    }

    pub fn universe(&self) -> &SymbolUniverse {
        &self.universe
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// Replaces `Γ^α₁₂_j` by `gamma_hat` after a shape check.
    pub fn with_gamma12(&self, gamma_hat: &Grid2) -> Result<Self, FrameError> {
        let [n, _, _, r12] = self.dims;
        check_block("gamma12_base", gamma_hat, r12, n, &self.universe)?;
        Ok(TwoFoldConnection { gamma12: gamma_hat.clone(), ..self.clone() })
    }

    fn offsets(&self) -> [usize; 4] {
        let [n, r1, r2, _] = self.dims;
        [0, n, n + r1, n + r1 + r2]
    }
}

fn place(matrix: &mut Grid2, row0: usize, col0: usize, block: &Grid2, op: impl Fn(&Expr) -> Expr) {
    for (r, row) in block.iter().enumerate() {
        for (c, e) in row.iter().enumerate() {
            matrix[row0 + r][col0 + c] = op(e);
        }
    }
}

/// The block unitriangular frame matrix.
pub fn twofold_frame(c: &TwoFoldConnection) -> Grid2 {
    let [_, o1, o2, o12] = c.offsets();
    let mut m = identity(c.total_dim());
    place(&mut m, o1, 0, &c.gamma1, Clone::clone);
    place(&mut m, o2, 0, &c.gamma2, Clone::clone);
    place(&mut m, o12, 0, &c.gamma12, Clone::clone);
    place(&mut m, o12, o1, &c.gamma12_1, Clone::clone);
    place(&mut m, o12, o2, &c.gamma12_2, Clone::clone);
    m
}

/// Outcome of the numeric inverse check.
#[derive(Debug, Clone, PartialEq)]
pub struct DualityReport {
    pub points_checked: usize,
    pub points_skipped: usize,
    /// Largest `|coframe · frame - I|` entry seen.
    pub max_error: f64,
    /// Largest `|coframe - frame⁻¹|` entry seen (LU inverse).
    pub max_inverse_error: f64,
    /// Largest `|det(frame) - 1|` seen.
    pub max_det_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoFoldCoframe {
    /// `Γ̄^α₁₂_i`, r₁₂×n.
    pub gamma_bar: Grid2,
    /// Rows `ω^i, ω^α₁, ω^α₂, ω^α₁₂` in the basis `du, dv, dw, dz`.
    pub rows: Grid2,
    /// The frame the coframe was verified against.
    pub frame: Grid2,
    pub report: DualityReport,
}

/// `Γ̄ = Γ̂ - Γ^α₁₂_β₁ Γ^β₁_i - Γ^α₁₂_β₂ Γ^β₂_i`.
pub fn gamma_bar(c: &TwoFoldConnection, gamma_hat: &Grid2) -> Grid2 {
    let via1 = mat_mul(&c.gamma12_1, &c.gamma1);
    let via2 = mat_mul(&c.gamma12_2, &c.gamma2);
    gamma_hat
        .iter()
        .enumerate()
        .map(|(a, row)| {
            row.iter()
                .enumerate()
                .map(|(i, e)| simplify(&Expr::sub(Expr::sub(e.clone(), via1[a][i].clone()), via2[a][i].clone())))
                .collect()
        })
        .collect()
}

/// Dual coframe of `twofold_frame(c)` with `Γ̂` installed as the base-column block of the α₁₂ rows.
pub fn twofold_dual_coframe(
    c: &TwoFoldConnection,
    gamma_hat: &Grid2,
    sampler: &Sampler,
) -> Result<TwoFoldCoframe, FrameError> {
    let installed = c.with_gamma12(gamma_hat)?;
    let bar = gamma_bar(&installed, gamma_hat);
    let [_, o1, o2, o12] = installed.offsets();
    let neg = |e: &Expr| simplify(&Expr::neg(e.clone()));
    let mut rows = identity(installed.total_dim());
    place(&mut rows, o1, 0, &installed.gamma1, neg);
    place(&mut rows, o2, 0, &installed.gamma2, neg);
    place(&mut rows, o12, 0, &bar, neg);
    place(&mut rows, o12, o1, &installed.gamma12_1, neg);
    place(&mut rows, o12, o2, &installed.gamma12_2, neg);
    let frame = twofold_frame(&installed);
    let report = verify_inverse(&frame, &rows, &twofold_vars(installed.dims), sampler)?;
    Ok(TwoFoldCoframe { gamma_bar: bar, rows, frame, report })
}

/// Checks `coframe = frame⁻¹` at `DUALITY_POINTS` random points.
pub fn verify_inverse(
    frame: &Grid2,
    coframe: &Grid2,
    vars: &[String],
    sampler: &Sampler,
) -> Result<DualityReport, FrameError> {
    let size = frame.len();
    let points = Sampler { points: DUALITY_POINTS, ..*sampler }.points_for(vars.len());
    let outcomes = sampler.execution.map(&points, |pt| {
        let at: Assignment = vars.iter().cloned().zip(pt.iter().copied()).collect();
        let (f, w) = match (evaluate(frame, &at), evaluate(coframe, &at)) {
            (Ok(f), Ok(w)) if f.iter().chain(w.iter()).all(|v| v.is_finite()) => (f, w),
            _ => return None,
        };
        let err = max_abs(&(&w * &f - DMatrix::identity(size, size)));
        let lu = f.clone().lu();
        let det_err = (lu.determinant() - 1.0).abs();
        let inv_err = lu.try_inverse().map_or(f64::INFINITY, |inv| max_abs(&(inv - &w)));
        Some((at, err, inv_err, det_err))
    });
    let mut report = DualityReport {
        points_checked: 0,
        points_skipped: 0,
        max_error: 0.0,
        max_inverse_error: 0.0,
        max_det_error: 0.0,
    };
    for outcome in outcomes {
        let Some((at, err, inv_err, det_err)) = outcome else {
            report.points_skipped += 1;
            continue;
        };
        report.points_checked += 1;
        report.max_error = report.max_error.max(err);
        report.max_inverse_error = report.max_inverse_error.max(inv_err);
        report.max_det_error = report.max_det_error.max(det_err);
        if err > DUALITY_TOL || inv_err > DUALITY_TOL {
            let point = vars.iter().map(|v| (v.clone(), at.get(v).unwrap_or(f64::NAN))).collect();
            return Err(FrameError::NotInverse { point, error: err.max(inv_err) });
        }
    }
    if report.points_checked == 0 {
        return Err(FrameError::NoValidPoints(points.len()));
    }
    Ok(report)
}

/// Base-only coefficients of a linear two-fold connection.
///
/// ```text
/// Γ^α₁_j  = a1[α₁][j][β₁] v^β₁          Γ^α₂_j  = a2[α₂][j][β₂] w^β₂
/// Γ^α₁₂_β₁ = b1[α₁₂][β₁][β₂] w^β₂       Γ^α₁₂_β₂ = b2[α₁₂][β₂][β₁] v^β₁
/// Γ^α₁₂_j = c[α₁₂][j][β₁][β₂] v^β₁ w^β₂ + d[α₁₂][j][β₁₂] z^β₁₂
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTwoFoldCoefficients {
    pub dims: TwoFoldDims,
    pub a1: Grid3,
    pub a2: Grid3,
    pub b1: Grid3,
    pub b2: Grid3,
    pub c: Vec<Grid3>,
    pub d: Grid3,
}

fn shape3(g: &Grid3, a: usize, b: usize, c: usize) -> bool {
    g.len() == a && g.iter().all(|r| r.len() == b && r.iter().all(|s| s.len() == c))
}

impl LinearTwoFoldCoefficients {
    pub fn zero(dims: TwoFoldDims) -> Self {
        let [n, r1, r2, r12] = dims;
        let z3 = |a, b, c| vec![vec![vec![Expr::zero(); c]; b]; a];
        LinearTwoFoldCoefficients {
            dims,
            a1: z3(r1, n, r1),
            a2: z3(r2, n, r2),
            b1: z3(r12, r1, r2),
            b2: z3(r12, r2, r1),
            c: vec![z3(n, r1, r2); r12],
            d: z3(r12, n, r12),
        }
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        let [n, r1, r2, r12] = self.dims;
        if self.dims.contains(&0) {
            return Err(FrameError::Dims(self.dims));
        }
        let checks: [(&'static str, bool, usize, usize); 6] = [
            ("a1", shape3(&self.a1, r1, n, r1), r1, n * r1),
            ("a2", shape3(&self.a2, r2, n, r2), r2, n * r2),
            ("b1", shape3(&self.b1, r12, r1, r2), r12, r1 * r2),
            ("b2", shape3(&self.b2, r12, r2, r1), r12, r2 * r1),
            ("c", self.c.len() == r12 && self.c.iter().all(|g| shape3(g, n, r1, r2)), r12, n * r1 * r2),
            ("d", shape3(&self.d, r12, n, r12), r12, n * r12),
        ];
        for (block, ok, rows, cols) in checks {
            if !ok {
                return Err(FrameError::Shape { block, rows, cols });
            }
        }
        let base: Vec<String> = (1..=n).map(|k| format!("u{k}")).collect();
        let all = self.a1.iter().chain(&self.a2).chain(&self.b1).chain(&self.b2).chain(&self.d).flatten().flatten();
        let all = all.chain(self.c.iter().flatten().flatten().flatten());
        for e in all {
            if let Some(var) = e.free_vars().into_iter().find(|v| !base.contains(v)) {
                return Err(FrameError::BadVariable { block: "linear", var });
            }
        }
        Ok(())
    }

    /// Bilinear coefficients of `Γ̄^α₁₂_j` obtained from the coframe relation:
    /// `c̄ = c - b1[γ₁][β₂] a1[γ₁][j][β₁] - b2[γ₂][β₁] a2[γ₂][j][β₂]`, indexed `[α₁₂][j][β₁][β₂]`.
    pub fn gamma_bar_bilinear(&self) -> Vec<Grid3> {
        let [n, r1, r2, r12] = self.dims;
        (0..r12)
            .map(|a| {
                (0..n)
                    .map(|j| {
                        (0..r1)
                            .map(|b1| {
                                (0..r2)
                                    .map(|b2| {
                                        let t1 = (0..r1).map(|g| Expr::mul(self.b1[a][g][b2].clone(), self.a1[g][j][b1].clone()));
                                        let t2 = (0..r2).map(|g| Expr::mul(self.b2[a][g][b1].clone(), self.a2[g][j][b2].clone()));
                                        simplify(&Expr::sub(
                                            self.c[a][j][b1][b2].clone(),
                                            Expr::sum(t1.chain(t2)),
                                        ))
                                    })
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }
}

fn v(k: usize) -> Expr {
    Expr::var(format!("v{}", k + 1))
}

fn w(k: usize) -> Expr {
    Expr::var(format!("w{}", k + 1))
}

fn z(k: usize) -> Expr {
    Expr::var(format!("z{}", k + 1))
}

fn contract(coeffs: &[Expr], var: impl Fn(usize) -> Expr) -> Expr {
    simplify(&Expr::sum(
        coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(k, c)| Expr::mul(c.clone(), var(k))),
    ))
}

/// `Σ c[β₁][β₂] v^β₁ w^β₂ + Σ d[β₁₂] z^β₁₂`.
fn bilinear_plus_linear(c: &Grid2, d: &[Expr]) -> Expr {
    let bilinear = c.iter().enumerate().flat_map(|(b1, row)| {
        row.iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .map(move |(b2, e)| Expr::mul(Expr::mul(e.clone(), v(b1)), w(b2)))
    });
    let linear = d.iter().enumerate().filter(|(_, e)| !e.is_zero()).map(|(k, e)| Expr::mul(e.clone(), z(k)));
    simplify(&Expr::sum(bilinear.chain(linear)))
}

pub fn linear_twofold(l: &LinearTwoFoldCoefficients) -> Result<TwoFoldConnection, FrameError> {
    l.validate()?;
    let [n, _, _, r12] = l.dims;
    let gamma1 = l.a1.iter().map(|block| block.iter().map(|row| contract(row, v)).collect()).collect();
    let gamma2 = l.a2.iter().map(|block| block.iter().map(|row| contract(row, w)).collect()).collect();
    let gamma12_1 = l.b1.iter().map(|block| block.iter().map(|row| contract(row, w)).collect()).collect();
    let gamma12_2 = l.b2.iter().map(|block| block.iter().map(|row| contract(row, v)).collect()).collect();
    let gamma12 = (0..r12).map(|a| (0..n).map(|j| bilinear_plus_linear(&l.c[a][j], &l.d[a][j])).collect()).collect();
    TwoFoldConnection::new(l.dims, gamma1, gamma2, gamma12, gamma12_1, gamma12_2)
}

/// Expansion of `Γ̄` from [`LinearTwoFoldCoefficients::gamma_bar_bilinear`] and `d`.
pub fn linear_gamma_bar(l: &LinearTwoFoldCoefficients) -> Grid2 {
    let bar = l.gamma_bar_bilinear();
    let [n, _, _, r12] = l.dims;
    (0..r12).map(|a| (0..n).map(|j| bilinear_plus_linear(&bar[a][j], &l.d[a][j])).collect()).collect()
}

/// Block labels of the two-fold Jacobian: `0` base, `1` α₁, `2` α₂, `3` α₁₂.
const BLOCK_NAMES: [&str; 4] = ["base", "alpha1", "alpha2", "alpha12"];

/// Zero blocks required by the Jacobian of an admissible transform, as `(row block, column block)`.
pub const FORBIDDEN_BLOCKS: [(usize, usize); 7] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 1), (2, 3)];

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianViolation {
    pub row_block: &'static str,
    pub col_block: &'static str,
    /// Component name (`u1`, `v2`, ...) of the transform.
    pub component: String,
    /// Coordinate differentiated against.
    pub coordinate: String,
    pub entry: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianReport {
    pub jacobian: Grid2,
    pub violations: Vec<JacobianViolation>,
}

impl JacobianReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

fn block_of(dims: TwoFoldDims, index: usize) -> usize {
    let mut acc = 0;
    for (b, d) in dims.iter().enumerate() {
        acc += d;
        if index < acc {
            return b;
        }
    }
    unreachable!("index within total dimension")
}

/// Checks that the Jacobian of `transform` has the zero blocks of an admissible two-fold transform.
pub fn validate_twofold_jacobian(
    dims: TwoFoldDims,
    transform: &[Expr],
    sampler: &Sampler,
) -> Result<JacobianReport, FrameError> {
    let universe = twofold_universe(dims)?;
    let vars = twofold_vars(dims);
    if transform.len() != vars.len() {
        return Err(FrameError::Components { expected: vars.len(), got: transform.len() });
    }
    for e in transform {
        if let Some(var) = e.free_vars().into_iter().find(|v| !universe.contains(v)) {
            return Err(FrameError::BadVariable { block: "transform", var });
        }
    }
    let jacobian: Grid2 = transform.iter().map(|a| vars.iter().map(|u| a.derivative(u)).collect()).collect();
    let mut violations = Vec::new();
    for (r, row) in jacobian.iter().enumerate() {
        for (c, entry) in row.iter().enumerate() {
            let (rb, cb) = (block_of(dims, r), block_of(dims, c));
            if !FORBIDDEN_BLOCKS.contains(&(rb, cb)) {
                continue;
            }
            // An entry that cannot be evaluated anywhere is not provably zero.
            let zero = expr_equal(entry, &Expr::zero(), sampler).map(|v| v.equal).unwrap_or(false);
            if !zero {
                violations.push(JacobianViolation {
                    row_block: BLOCK_NAMES[rb],
                    col_block: BLOCK_NAMES[cb],
                    component: vars[r].clone(),
                    coordinate: vars[c].clone(),
                    entry: entry.clone(),
                });
            }
        }
    }
    Ok(JacobianReport { jacobian, violations })
}

/// Coefficients of one horizontal lift `X_i = ∂_i + F_i^p ∂_p + H_ij^p ∂_p^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftRow {
    /// `δ_i^j`, length m.
    pub base: Vec<Expr>,
    /// `F_i^p`, length n.
    pub fiber: Vec<Expr>,
    /// `H_ij^p` as `[p][j]`.
    pub jet: Grid2,
}

/// Horizontal lift fields of `Δ` on the double fibration; the `∂_p` slot uses `Δ.F`.
pub fn horizontal_lift_field(conn: &Connection2) -> Vec<LiftRow> {
    let (m, n) = (conn.base_dim(), conn.fiber_dim());
    (0..m)
        .map(|i| LiftRow {
            base: (0..m).map(|j| delta(i, j)).collect(),
            fiber: (0..n).map(|p| conn.f()[p][i].clone()).collect(),
            jet: (0..n).map(|p| conn.h()[p][i].clone()).collect(),
        })
        .collect()
}
