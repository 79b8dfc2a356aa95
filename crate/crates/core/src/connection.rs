//! Connection algebra on coefficient grids.
//!
//! Grids are indexed with 0-based `[p][i]` (fiber row, base column) and
//! `[p][i][j]` for the second-order part; variable names stay 1-based
//! (`x1`, `y1`, ...).
//!
//! The product of `Γ: y_i^p = F_i^p` and `Γ̄: y_i^p = G_i^p` is
//!
//! ```text
//! y_i^p = F_i^p,   y_0i^p = G_i^p,   y_ij^p = ∂F_i^p/∂x^j + (∂F_i^p/∂y^q) G_j^q
//! ```
//!
//! with `i` the index from `Γ` and `j` the differentiation direction along `Γ̄`.

use std::fmt;

use thiserror::Error;

use crate::expr::{expr_equal, simplify, Assignment, Confidence, EqualityError, EvalError, Expr, Number, Sampler, SymbolUniverse};
use crate::jet::{JetError, JetPoint};
use crate::par::Execution;

pub type Grid2 = Vec<Vec<Expr>>;
pub type Grid3 = Vec<Vec<Vec<Expr>>>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConnectionError {
    #[error("universe mismatch: (m={0}, n={1}) vs (m={2}, n={3})")]
    UniverseMismatch(usize, usize, usize, usize),
    #[error("grid `{grid}` has wrong shape: {detail}")]
    Shape { grid: &'static str, detail: String },
    #[error("coefficient `{grid}` at {index:?} references `{var}`, which is not allowed here")]
    BadVariable { grid: &'static str, index: Vec<usize>, var: String },
    #[error(transparent)]
    Equality(#[from] EqualityError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

fn check_grid2(grid: &'static str, g: &Grid2, rows: usize, cols: usize) -> Result<(), ConnectionError> {
    if g.len() != rows || g.iter().any(|r| r.len() != cols) {
        return Err(ConnectionError::Shape { grid, detail: format!("expected {rows}x{cols}") });
    }
    Ok(())
}

fn check_vars(
    grid: &'static str,
    index: Vec<usize>,
    e: &Expr,
    allowed: impl Fn(&str) -> bool,
) -> Result<(), ConnectionError> {
    match e.free_vars().into_iter().find(|v| !allowed(v)) {
        Some(var) => Err(ConnectionError::BadVariable { grid, index, var }),
        None => Ok(()),
    }
}

fn check_xy(grid: &'static str, g: &Grid2, u: &SymbolUniverse) -> Result<(), ConnectionError> {
    for (p, row) in g.iter().enumerate() {
        for (i, e) in row.iter().enumerate() {
            check_vars(grid, vec![p, i], e, |v| u.base_index(v).is_some() || u.is_fiber(v))?;
        }
    }
    Ok(())
}

fn zero_grid2(n: usize, m: usize) -> Grid2 {
    vec![vec![Expr::zero(); m]; n]
}

/// A first-order connection `Γ: Y -> J¹Y`, `y_i^p = F_i^p(x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection1 {
    universe: SymbolUniverse,
    f: Grid2,
}

impl Connection1 {
    pub fn new(universe: SymbolUniverse, f: Grid2) -> Result<Self, ConnectionError> {
        check_grid2("F", &f, universe.fiber_dim(), universe.base_dim())?;
        check_xy("F", &f, &universe)?;
        Ok(Connection1 { universe, f })
    }

    pub fn zero(universe: SymbolUniverse) -> Self {
        let f = zero_grid2(universe.fiber_dim(), universe.base_dim());
        Connection1 { universe, f }
    }

    pub fn universe(&self) -> &SymbolUniverse {
        &self.universe
    }

    pub fn base_dim(&self) -> usize {
        self.universe.base_dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.universe.fiber_dim()
    }

    /// `F[p][i]`.
    pub fn coefficients(&self) -> &Grid2 {
        &self.f
    }

    /// `true` when every coefficient is linear homogeneous in the fiber variables.
    pub fn is_fiber_linear(&self) -> bool {
        let u = &self.universe;
        self.f.iter().flatten().all(|e| {
            matches!(simplify(e).degree_bounds(&|v| u.is_fiber(v)), Some(None) | Some(Some((1, 1))))
        })
    }
}

/// A second-order nonholonomic connection `Δ: Y -> J̃²Y`:
/// `y_i^p = F_i^p`, `y_0i^p = G_i^p`, `y_ij^p = H_ij^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Connection2 {
    universe: SymbolUniverse,
    f: Grid2,
    g: Grid2,
    h: Grid3,
}

impl Connection2 {
    pub fn new(universe: SymbolUniverse, f: Grid2, g: Grid2, h: Grid3) -> Result<Self, ConnectionError> {
        let (n, m) = (universe.fiber_dim(), universe.base_dim());
        check_grid2("F", &f, n, m)?;
        check_grid2("G", &g, n, m)?;
        if h.len() != n || h.iter().any(|r| r.len() != m || r.iter().any(|c| c.len() != m)) {
            return Err(ConnectionError::Shape { grid: "H", detail: format!("expected {n}x{m}x{m}") });
        }
        check_xy("F", &f, &universe)?;
        check_xy("G", &g, &universe)?;
        for (p, block) in h.iter().enumerate() {
            for (i, row) in block.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    check_vars("H", vec![p, i, j], e, |v| universe.base_index(v).is_some() || universe.is_fiber(v))?;
                }
            }
        }
        Ok(Connection2 { universe, f, g, h })
    }

    pub fn zero(universe: SymbolUniverse) -> Self {
        let (n, m) = (universe.fiber_dim(), universe.base_dim());
        Connection2 { f: zero_grid2(n, m), g: zero_grid2(n, m), h: vec![zero_grid2(m, m); n], universe }
    }

    pub fn universe(&self) -> &SymbolUniverse {
        &self.universe
    }

    pub fn base_dim(&self) -> usize {
        self.universe.base_dim()
    }

    pub fn fiber_dim(&self) -> usize {
        self.universe.fiber_dim()
    }

    pub fn f(&self) -> &Grid2 {
        &self.f
    }

    pub fn g(&self) -> &Grid2 {
        &self.g
    }

    /// `H[p][i][j]`.
    pub fn h(&self) -> &Grid3 {
        &self.h
    }

    fn map_all(&self, op: impl Fn(&Expr) -> Expr) -> Connection2 {
        let map2 = |g: &Grid2| g.iter().map(|r| r.iter().map(&op).collect()).collect();
        Connection2 {
            universe: self.universe.clone(),
            f: map2(&self.f),
            g: map2(&self.g),
            h: self.h.iter().map(map2).collect(),
        }
    }

    /// Numeric coordinates of the image jet at a point of `Y`.
    pub fn jet_at(&self, x: &[f64], y: &[f64]) -> Result<JetPoint, ConnectionError> {
        let assignment: Assignment = self
            .universe
            .base_vars()
            .into_iter()
            .zip(x.iter().copied())
            .chain(self.universe.fiber_vars().into_iter().zip(y.iter().copied()))
            .collect();
        let mut err = None;
        let (m, n) = (self.base_dim(), self.fiber_dim());
        let mut eval = |e: &Expr| match e.eval(&assignment) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        };
        let point = JetPoint::from_fn(2, m, n, x.to_vec(), |p, s| match s {
            [0, 0] => y[p - 1],
            [i, 0] => eval(&self.f[p - 1][i - 1]),
            [0, i] => eval(&self.g[p - 1][i - 1]),
            [i, j] => eval(&self.h[p - 1][i - 1][j - 1]),
            _ => unreachable!("order 2"),
        });
        if let Some(e) = err {
            return Err(e.into());
        }
        Ok(point?)
    }
}

/// A linear connection `F_i^p = F_iq^p(x) y^q`, coefficients `coeff[p][i][q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConnection1 {
    universe: SymbolUniverse,
    coeff: Grid3,
}

impl LinearConnection1 {
    pub fn new(universe: SymbolUniverse, coeff: Grid3) -> Result<Self, ConnectionError> {
        let (n, m) = (universe.fiber_dim(), universe.base_dim());
        if coeff.len() != n || coeff.iter().any(|r| r.len() != m || r.iter().any(|c| c.len() != n)) {
            return Err(ConnectionError::Shape { grid: "coeff", detail: format!("expected {n}x{m}x{n}") });
        }
        for (p, block) in coeff.iter().enumerate() {
            for (i, row) in block.iter().enumerate() {
                for (q, e) in row.iter().enumerate() {
                    check_vars("coeff", vec![p, i, q], e, |v| universe.base_index(v).is_some())?;
                }
            }
        }
        Ok(LinearConnection1 { universe, coeff })
    }

    pub fn universe(&self) -> &SymbolUniverse {
        &self.universe
    }

    pub fn coefficients(&self) -> &Grid3 {
        &self.coeff
    }
}

/// An affine connection on `M` by its Christoffel symbols `Γ^i_jk = gamma[i][j][k]`.
/// Symmetry in `j, k` is not assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConnection {
    universe: SymbolUniverse,
    gamma: Grid3,
}

impl AffineConnection {
    pub fn new(dim: usize, gamma: Grid3) -> Result<Self, ConnectionError> {
        let universe = SymbolUniverse::new(dim, dim).map_err(|e| ConnectionError::Shape {
            grid: "christoffel",
            detail: e.to_string(),
        })?;
        if gamma.len() != dim || gamma.iter().any(|r| r.len() != dim || r.iter().any(|c| c.len() != dim)) {
            return Err(ConnectionError::Shape { grid: "christoffel", detail: format!("expected {dim}x{dim}x{dim}") });
        }
        for (i, block) in gamma.iter().enumerate() {
            for (j, row) in block.iter().enumerate() {
                for (k, e) in row.iter().enumerate() {
                    check_vars("christoffel", vec![i, j, k], e, |v| universe.base_index(v).is_some())?;
                }
            }
        }
        Ok(AffineConnection { universe, gamma })
    }

    pub fn dim(&self) -> usize {
        self.universe.base_dim()
    }

    pub fn universe(&self) -> &SymbolUniverse {
        &self.universe
    }

    pub fn christoffel(&self) -> &Grid3 {
        &self.gamma
    }
}

fn same_universe(a: &SymbolUniverse, b: &SymbolUniverse) -> Result<(), ConnectionError> {
    if a.base_dim() != b.base_dim() || a.fiber_dim() != b.fiber_dim() {
        return Err(ConnectionError::UniverseMismatch(a.base_dim(), a.fiber_dim(), b.base_dim(), b.fiber_dim()));
    }
    Ok(())
}

/// The product `Γ * Γ̄`.
pub fn product(gamma: &Connection1, gamma_bar: &Connection1) -> Result<Connection2, ConnectionError> {
    same_universe(&gamma.universe, &gamma_bar.universe)?;
    let u = &gamma.universe;
    let (n, m) = (u.fiber_dim(), u.base_dim());
    let base = u.base_vars();
    let fiber = u.fiber_vars();
    let g = &gamma_bar.f;
    let cells = Execution::default().map_range(n * m, |cell| {
        let (p, i) = (cell / m, cell % m);
        let f = &gamma.f[p][i];
        let fiber_partials: Vec<Expr> = fiber.iter().map(|y| f.derivative(y)).collect();
        (0..m)
            .map(|j| {
                let along = fiber_partials
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| !d.is_zero())
                    .map(|(q, d)| Expr::mul(d.clone(), g[q][j].clone()));
                simplify(&Expr::sum(std::iter::once(f.derivative(&base[j])).chain(along)))
            })
            .collect::<Vec<_>>()
    });
    let mut h: Grid3 = vec![Vec::with_capacity(m); n];
    for (cell, row) in cells.into_iter().enumerate() {
        h[cell / m].push(row);
    }
    Ok(Connection2 {
        universe: u.clone(),
        f: gamma.f.iter().map(|r| r.iter().map(simplify).collect()).collect(),
        g: g.iter().map(|r| r.iter().map(simplify).collect()).collect(),
        h,
    })
}

/// Self-product `Γ * Γ`.
pub fn ehresmann_prolongation(gamma: &Connection1) -> Connection2 {
    product(gamma, gamma).expect("a connection shares its own universe")
}

/// `R_ij^p = H_ij^p - H_ji^p` of the self-product; `R[p][i][j]`.
pub fn curvature(gamma: &Connection1) -> Grid3 {
    let h = ehresmann_prolongation(gamma).h;
    let m = gamma.base_dim();
    h.iter()
        .map(|block| {
            (0..m)
                .map(|i| (0..m).map(|j| simplify(&Expr::sub(block[i][j].clone(), block[j][i].clone()))).collect())
                .collect()
        })
        .collect()
}

/// Exchange map `(F, G, H) -> (G, F, Hᵀ)`.
pub fn exchange(delta: &Connection2) -> Connection2 {
    let m = delta.base_dim();
    Connection2 {
        universe: delta.universe.clone(),
        f: delta.g.clone(),
        g: delta.f.clone(),
        h: delta
            .h
            .iter()
            .map(|block| (0..m).map(|i| (0..m).map(|j| block[j][i].clone()).collect()).collect())
            .collect(),
    }
}

/// Member `k (Γ*Γ) + (1-k) e(Γ*Γ)` of the one-parameter family.
pub fn family(gamma: &Connection1, k: Number) -> Connection2 {
    let delta = ehresmann_prolongation(gamma);
    let one_minus_k = Number::ONE.sub(k).unwrap_or(Number::Float(1.0 - k.to_f64()));
    let m = gamma.base_dim();
    let h = delta
        .h
        .iter()
        .map(|block| {
            (0..m)
                .map(|i| {
                    (0..m)
                        .map(|j| {
                            simplify(&Expr::add(
                                Expr::mul(Expr::num(k), block[i][j].clone()),
                                Expr::mul(Expr::num(one_minus_k), block[j][i].clone()),
                            ))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    Connection2 { h, ..delta }
}

pub fn family_f64(gamma: &Connection1, k: f64) -> Connection2 {
    family(gamma, Number::from_f64(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Verdict {
    Holonomic,
    Semiholonomic,
    Nonholonomic,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Holonomic => "holonomic",
            Verdict::Semiholonomic => "semiholonomic",
            Verdict::Nonholonomic => "nonholonomic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Classification {
    pub verdict: Verdict,
    pub confidence: Confidence,
}

impl Classification {
    /// Holonomic connections are also semiholonomic.
    pub fn is_semiholonomic(&self) -> bool {
        self.verdict <= Verdict::Semiholonomic
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.verdict, self.confidence)
    }
}

/// Semiholonomic iff `F = G`; holonomic iff additionally `H_ij = H_ji`.
/// Every comparison is performed so the confidence is independent of order.
pub fn classify(delta: &Connection2, sampler: &Sampler) -> Result<Classification, ConnectionError> {
    let (n, m) = (delta.fiber_dim(), delta.base_dim());
    let mut pairs: Vec<(bool, &Expr, &Expr)> = Vec::new();
    for p in 0..n {
        for i in 0..m {
            pairs.push((true, &delta.f[p][i], &delta.g[p][i]));
        }
        for i in 0..m {
            for j in i + 1..m {
                pairs.push((false, &delta.h[p][i][j], &delta.h[p][j][i]));
            }
        }
    }
    let verdicts = sampler.execution.map(&pairs, |(first_order, a, b)| {
        expr_equal(a, b, sampler).map(|v| (*first_order, v))
    });
    let mut semi = true;
    let mut symmetric = true;
    let mut confidence = Confidence::Symbolic;
    for v in verdicts {
        let (first_order, v) = v?;
        confidence = confidence.max(v.confidence);
        if !v.equal {
            if first_order {
                semi = false;
            } else {
                symmetric = false;
            }
        }
    }
    let verdict = match (semi, symmetric) {
        (true, true) => Verdict::Holonomic,
        (true, false) => Verdict::Semiholonomic,
        (false, _) => Verdict::Nonholonomic,
    };
    Ok(Classification { verdict, confidence })
}

/// `F_i^p = Σ_q F_iq^p y^q`.
pub fn linear_to_general(linear: &LinearConnection1) -> Connection1 {
    let u = &linear.universe;
    let f = linear
        .coeff
        .iter()
        .map(|block| {
            block
                .iter()
                .map(|row| {
                    simplify(&Expr::sum(
                        row.iter()
                            .enumerate()
                            .map(|(q, c)| Expr::mul(c.clone(), Expr::var(SymbolUniverse::fiber_var(q + 1)))),
                    ))
                })
                .collect()
        })
        .collect();
    Connection1 { universe: u.clone(), f }
}

/// Connection on `TM -> M` with `F[k][j] = -Σ_l Γ^k_jl y^l` (fiber `y` = tangent coordinates).
pub fn affine_to_general(affine: &AffineConnection) -> Connection1 {
    let n = affine.dim();
    let f = (0..n)
        .map(|k| {
            (0..n)
                .map(|j| {
                    simplify(&Expr::neg(Expr::sum((0..n).map(|l| {
                        Expr::mul(affine.gamma[k][j][l].clone(), Expr::var(SymbolUniverse::fiber_var(l + 1)))
                    }))))
                })
                .collect()
        })
        .collect();
    Connection1 { universe: affine.universe.clone(), f }
}

impl Connection2 {
    /// All coefficients simplified; used when comparing emitted files.
    pub fn simplified(&self) -> Connection2 {
        self.map_all(simplify)
    }
}
