//! Coordinates on nonholonomic jet prolongations and iterated tangent bundles.
//!
//! A coordinate `y^p_{k1...kr}` of `J̃^r Y` is addressed by a fiber index `p`
//! and a [`JetSequence`] `(k1, ..., kr)` with entries in `0..=m`, where `0`
//! means "no differentiation" and `1..=m` are base directions. The all-zero
//! sequence houses `y^p` itself.
//!
//! Semiholonomy is decided by the nonzero-core rule: two coordinates with the
//! same ordered subsequence of nonzero indices must agree. The agreement of
//! all prolonged target projections ([`satisfies_projection_identities`]) is
//! offered as an independent cross-check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, SymbolUniverse};

/// Largest supported jet order.
pub const MAX_ORDER: usize = 4;
/// Largest supported base dimension for dense jet storage.
pub const MAX_BASE_DIM: usize = 3;
/// Tolerance for comparing stored coordinate values.
pub const VALUE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet order {order} with base dimension {base_dim} exceeds the supported bound (order <= {MAX_ORDER}, base_dim <= {MAX_BASE_DIM})")]
    TooLarge { order: usize, base_dim: usize },
    #[error("index {index} out of range 0..={base_dim}")]
    EntryOutOfRange { index: usize, base_dim: usize },
    #[error("sequence has length {got}, expected {expected}")]
    WrongLength { got: usize, expected: usize },
    #[error("fiber index {0} out of range")]
    FiberOutOfRange(usize),
    #[error("projection parameters out of range: {0}")]
    ProjectionRange(String),
    #[error("coordinate value for p={p} seq={seq:?} is missing")]
    MissingValue { p: usize, seq: Vec<usize> },
    #[error("coordinate value for p={p} seq={seq:?} given twice")]
    DuplicateValue { p: usize, seq: Vec<usize> },
    #[error("non-finite coordinate value for p={p} seq={seq:?}")]
    NonFinite { p: usize, seq: Vec<usize> },
    #[error("expected {expected} base coordinates, got {got}")]
    BaseLength { got: usize, expected: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("function references fiber variable `{0}`")]
    FiberDependence(String),
}

/// An index sequence `(k1, ..., kr)` with entries in `0..=base_dim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetSequence {
    entries: Vec<usize>,
    base_dim: usize,
}

impl JetSequence {
    pub fn new(entries: Vec<usize>, base_dim: usize) -> Result<Self, JetError> {
        if let Some(&index) = entries.iter().find(|&&k| k > base_dim) {
            return Err(JetError::EntryOutOfRange { index, base_dim });
        }
        Ok(JetSequence { entries, base_dim })
    }

    pub fn order(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&k| k == 0)
    }

    /// Nonzero entries, original order.
    pub fn nonzero_core(&self) -> Vec<usize> {
        nonzero_core(&self.entries)
    }

    /// All `(m+1)^r` sequences in dense-storage order (`k1` most significant).
    pub fn all(order: usize, base_dim: usize) -> impl Iterator<Item = JetSequence> {
        let radix = base_dim + 1;
        (0..radix.pow(order as u32)).map(move |code| JetSequence { entries: decode(code, order, radix), base_dim })
    }
}

pub fn nonzero_core(entries: &[usize]) -> Vec<usize> {
    entries.iter().copied().filter(|&k| k != 0).collect()
}

fn decode(mut code: usize, order: usize, radix: usize) -> Vec<usize> {
    let mut out = vec![0; order];
    for slot in out.iter_mut().rev() {
        *slot = code % radix;
        code /= radix;
    }
    out
}

fn encode(entries: &[usize], radix: usize) -> usize {
    entries.iter().fold(0, |acc, &k| acc * radix + k)
}

/// A point of `J̃^r Y` in induced coordinates, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct JetPoint {
    order: usize,
    base_dim: usize,
    fiber_dim: usize,
    base: Vec<f64>,
    /// `values[p * (m+1)^r + code(seq)]`, `p` zero-based.
    values: Vec<f64>,
}

fn check_bounds(order: usize, base_dim: usize, fiber_dim: usize) -> Result<(), JetError> {
    if base_dim == 0 || fiber_dim == 0 {
        return Err(JetError::ZeroDimension);
    }
    if order > MAX_ORDER || base_dim > MAX_BASE_DIM {
        return Err(JetError::TooLarge { order, base_dim });
    }
    Ok(())
}

impl JetPoint {
    /// Builds a point from a value function on `(p, sequence)` (`p` is 1-based).
    pub fn from_fn(
        order: usize,
        base_dim: usize,
        fiber_dim: usize,
        base: Vec<f64>,
        mut value: impl FnMut(usize, &[usize]) -> f64,
    ) -> Result<Self, JetError> {
        check_bounds(order, base_dim, fiber_dim)?;
        if base.len() != base_dim {
            return Err(JetError::BaseLength { got: base.len(), expected: base_dim });
        }
        let per_fiber = (base_dim + 1).pow(order as u32);
        let mut values = Vec::with_capacity(per_fiber * fiber_dim);
        for p in 1..=fiber_dim {
            for code in 0..per_fiber {
                let seq = decode(code, order, base_dim + 1);
                let v = value(p, &seq);
                if !v.is_finite() {
                    return Err(JetError::NonFinite { p, seq });
                }
                values.push(v);
            }
        }
        Ok(JetPoint { order, base_dim, fiber_dim, base, values })
    }

    /// Builds a point from an explicit table that must cover every `(p, seq)` exactly once.
    pub fn from_table(
        order: usize,
        base_dim: usize,
        fiber_dim: usize,
        base: Vec<f64>,
        table: &[(usize, Vec<usize>, f64)],
    ) -> Result<Self, JetError> {
        check_bounds(order, base_dim, fiber_dim)?;
        let mut map = BTreeMap::new();
        for (p, seq, v) in table {
            if *p == 0 || *p > fiber_dim {
                return Err(JetError::FiberOutOfRange(*p));
            }
            if seq.len() != order {
                return Err(JetError::WrongLength { got: seq.len(), expected: order });
            }
            JetSequence::new(seq.clone(), base_dim)?;
            if map.insert((*p, seq.clone()), *v).is_some() {
                return Err(JetError::DuplicateValue { p: *p, seq: seq.clone() });
            }
        }
        let mut missing = None;
        let point = Self::from_fn(order, base_dim, fiber_dim, base, |p, seq| match map.get(&(p, seq.to_vec())) {
            Some(v) => *v,
            None => {
                missing.get_or_insert((p, seq.to_vec()));
                0.0
            }
        });
        if let Some((p, seq)) = missing {
            return Err(JetError::MissingValue { p, seq });
        }
        point
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    fn per_fiber(&self) -> usize {
        (self.base_dim + 1).pow(self.order as u32)
    }

    /// Value of `y^p_seq` (`p` 1-based).
    pub fn value(&self, p: usize, seq: &[usize]) -> f64 {
        assert!(p >= 1 && p <= self.fiber_dim && seq.len() == self.order);
        self.values[(p - 1) * self.per_fiber() + encode(seq, self.base_dim + 1)]
    }

    /// `(p, seq, value)` for every coordinate in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, Vec<usize>, f64)> + '_ {
        let per = self.per_fiber();
        self.values.iter().enumerate().map(move |(idx, &v)| {
            (idx / per + 1, decode(idx % per, self.order, self.base_dim + 1), v)
        })
    }

    /// `true` iff coordinates with the same nonzero core agree.
    pub fn is_semiholonomic(&self) -> bool {
        for p in 1..=self.fiber_dim {
            let mut seen: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            for seq in JetSequence::all(self.order, self.base_dim) {
                let v = self.value(p, seq.entries());
                match seen.get(&seq.nonzero_core()) {
                    Some(&first) if (first - v).abs() > VALUE_TOL => return false,
                    Some(_) => {}
                    None => {
                        seen.insert(seq.nonzero_core(), v);
                    }
                }
            }
        }
        true
    }

    /// `true` iff semiholonomic and values depend only on the multiset of nonzero indices.
    pub fn is_holonomic(&self) -> bool {
        if !self.is_semiholonomic() {
            return false;
        }
        for p in 1..=self.fiber_dim {
            let mut seen: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            for seq in JetSequence::all(self.order, self.base_dim) {
                let mut key = seq.nonzero_core();
                key.sort_unstable();
                let v = self.value(p, seq.entries());
                match seen.get(&key) {
                    Some(&first) if (first - v).abs() > VALUE_TOL => return false,
                    Some(_) => {}
                    None => {
                        seen.insert(key, v);
                    }
                }
            }
        }
        true
    }

    /// Target projection onto `J̃^q Y`: keep coordinates whose last `r - q`
    /// indices vanish and strip those zeros.
    pub fn target_projection(&self, q: usize) -> Result<JetPoint, JetError> {
        if q > self.order {
            return Err(JetError::ProjectionRange(format!("q = {q} > r = {}", self.order)));
        }
        let pad = self.order - q;
        JetPoint::from_fn(q, self.base_dim, self.fiber_dim, self.base.clone(), |p, seq| {
            let mut full = seq.to_vec();
            full.extend(std::iter::repeat_n(0, pad));
            self.value(p, &full)
        })
    }

    /// The prolonged projection `J^k π^{r-k}_{q-k}`: keep coordinates whose
    /// indices at 1-based positions `q-k+1 ..= r-k` vanish, delete those
    /// positions and keep the outer `k` positions.
    pub fn prolonged_projection(&self, k: usize, q: usize) -> Result<JetPoint, JetError> {
        let r = self.order;
        if !(1 <= k && k <= q && q <= r) {
            return Err(JetError::ProjectionRange(format!("need 1 <= k <= q <= r, got k = {k}, q = {q}, r = {r}")));
        }
        let inner = q - k;
        let removed = r - q;
        JetPoint::from_fn(q, self.base_dim, self.fiber_dim, self.base.clone(), |p, seq| {
            let mut full = seq[..inner].to_vec();
            full.extend(std::iter::repeat_n(0, removed));
            full.extend_from_slice(&seq[inner..]);
            self.value(p, &full)
        })
    }

    fn approx_eq(&self, other: &JetPoint) -> bool {
        self.order == other.order
            && self.base_dim == other.base_dim
            && self.fiber_dim == other.fiber_dim
            && self.base == other.base
            && self.values.iter().zip(&other.values).all(|(a, b)| (a - b).abs() <= VALUE_TOL)
    }

    /// Agreement of `J^k π^r_{q-k}` with `π^r_q` for all `1 <= k <= q <= r`.
    pub fn satisfies_projection_identities(&self) -> bool {
        let r = self.order;
        (1..=r).all(|q| {
            let target = self.target_projection(q).expect("q <= r");
            (1..=q).all(|k| self.prolonged_projection(k, q).expect("k <= q <= r").approx_eq(&target))
        })
    }
}

/// A point of `T^k U`: one `n`-vector `u_S` per subset `S ⊆ {1..k}`.
///
/// Subsets are bitmasks (bit `s-1` for index `s`), so storage order is
/// `u, u_1, u_2, u_12, u_3, u_13, u_23, u_123, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentCoordPoint {
    level: usize,
    dim: usize,
    values: Vec<Vec<f64>>,
}

impl TangentCoordPoint {
    pub fn new(level: usize, dim: usize, values: Vec<Vec<f64>>) -> Result<Self, JetError> {
        if dim == 0 {
            return Err(JetError::ZeroDimension);
        }
        if level > 16 {
            return Err(JetError::TooLarge { order: level, base_dim: dim });
        }
        if values.len() != 1 << level {
            return Err(JetError::WrongLength { got: values.len(), expected: 1 << level });
        }
        if let Some(v) = values.iter().find(|v| v.len() != dim) {
            return Err(JetError::WrongLength { got: v.len(), expected: dim });
        }
        Ok(TangentCoordPoint { level, dim, values })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `u_S` for the subset given as a list of 1-based indices.
    pub fn get(&self, subset: &[usize]) -> &[f64] {
        let mask = subset.iter().fold(0usize, |m, &s| m | 1 << (s - 1));
        &self.values[mask]
    }

    pub fn by_mask(&self, mask: usize) -> &[f64] {
        &self.values[mask]
    }

    /// `ρ_s`: drops every `u_S` with `s ∈ S` and relabels indices above `s` down by one.
    pub fn rho_projection(&self, s: usize) -> Result<TangentCoordPoint, JetError> {
        if s == 0 || s > self.level {
            return Err(JetError::ProjectionRange(format!("s = {s} not in 1..={}", self.level)));
        }
        let bit = s - 1;
        let low = (1usize << bit) - 1;
        let values = (0..1usize << (self.level - 1))
            .map(|new_mask| {
                let old = (new_mask & low) | ((new_mask & !low) << 1);
                self.values[old].clone()
            })
            .collect();
        Ok(TangentCoordPoint { level: self.level - 1, dim: self.dim, values })
    }
}

/// The differentials `f_1`, `f_2` and (at level 2) `f_12` of a base function,
/// over the variables `x<i>_1`, `x<i>_2`, `x<i>_12`.
#[derive(Debug, Clone, PartialEq)]
pub struct Differentials {
    pub universe: SymbolUniverse,
    pub f1: Expr,
    pub f2: Expr,
    pub f12: Option<Expr>,
}

pub fn differential_var(i: usize, tag: &str) -> String {
    format!("x{i}_{tag}")
}

/// Differentials of `f` on `T^2 M`:
/// `f_1 = f_i x_1^i`, `f_2 = f_i x_2^i`, `f_12 = f_ij x_1^i x_2^j + f_i x_12^i`.
pub fn function_differentials(f: &Expr, universe: &SymbolUniverse, level: u8) -> Result<Differentials, JetError> {
    if let Some(v) = f.free_vars().into_iter().find(|v| !universe.base_index(v).is_some()) {
        return Err(JetError::FiberDependence(v));
    }
    if !(1..=2).contains(&level) {
        return Err(JetError::ProjectionRange(format!("level {level} not in 1..=2")));
    }
    let m = universe.base_dim();
    let mut extra: Vec<String> = universe.extra().iter().cloned().collect();
    for i in 1..=m {
        for tag in ["1", "2", "12"] {
            extra.push(differential_var(i, tag));
        }
    }
    let ext = SymbolUniverse::with_extra(m, universe.fiber_dim(), extra).map_err(|_| JetError::ZeroDimension)?;

    let grad: Vec<Expr> = (1..=m).map(|i| f.derivative(&SymbolUniverse::base_var(i))).collect();
    let contract = |tag: &str| {
        crate::expr::simplify(&Expr::sum(
            grad.iter().enumerate().map(|(i, g)| Expr::mul(g.clone(), Expr::var(differential_var(i + 1, tag)))),
        ))
    };
    let f1 = contract("1");
    let f2 = contract("2");
    let f12 = (level == 2).then(|| {
        let mut terms = Vec::new();
        for i in 1..=m {
            for j in 1..=m {
                let fij = grad[i - 1].derivative(&SymbolUniverse::base_var(j));
                terms.push(Expr::mul(
                    Expr::mul(fij, Expr::var(differential_var(i, "1"))),
                    Expr::var(differential_var(j, "2")),
                ));
            }
        }
        terms.push(contract("12"));
        crate::expr::simplify(&Expr::sum(terms))
    });
    Ok(Differentials { universe: ext, f1, f2, f12 })
}

/// JSON layout of a jet point file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JetPointFile {
    pub order: usize,
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub base: Vec<f64>,
    pub values: Vec<JetValueRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JetValueRecord {
    pub p: usize,
    pub seq: Vec<usize>,
    pub value: f64,
}

impl TryFrom<&JetPointFile> for JetPoint {
    type Error = JetError;

    fn try_from(file: &JetPointFile) -> Result<Self, JetError> {
        let table: Vec<_> = file.values.iter().map(|r| (r.p, r.seq.clone(), r.value)).collect();
        JetPoint::from_table(file.order, file.base_dim, file.fiber_dim, file.base.clone(), &table)
    }
}

impl From<&JetPoint> for JetPointFile {
    fn from(point: &JetPoint) -> Self {
        JetPointFile {
            order: point.order,
            base_dim: point.base_dim,
            fiber_dim: point.fiber_dim,
            base: point.base.clone(),
            values: point.entries().map(|(p, seq, value)| JetValueRecord { p, seq, value }).collect(),
        }
    }
}
