//! JSON documents read and written by the command line.
//!
//! | kind        | distinguishing fields                                      |
//! |-------------|------------------------------------------------------------|
//! | order-1     | `order: 1`, `base_dim`, `fiber_dim`, `F`                   |
//! | order-2     | `order: 2`, `base_dim`, `fiber_dim`, `F`, `G`, `H`         |
//! | linear      | `order: 1`, `linear: true`, `base_dim`, `fiber_dim`, `coeff` |
//! | affine      | `affine: true`, `dim`, `christoffel`                       |
//! | two-fold    | `dims`, `blocks` (or `linear`), optional `gamma12_base`    |
//! | transform   | `dims`, `transform`                                        |
//! | jet         | `order`, `base_dim`, `fiber_dim`, `base`, `values`         |
//! | curve       | `dim`, `components`, `t0`, `t1` (or `segments`), optional `periods` |
//!
//! Expressions are stored as grammar text. Grids are nested arrays in index
//! order (`F[p][i]`, `H[p][i][j]`, `coeff[p][i][q]`, `christoffel[i][j][k]`).

use std::fmt;
use std::path::Path as FsPath;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::connection::{AffineConnection, Connection1, Connection2, Grid2, Grid3, LinearConnection1};
use crate::expr::{parse_expr, Expr, SymbolUniverse};
use crate::frames::{twofold_universe, LinearTwoFoldCoefficients, TwoFoldConnection, TwoFoldDims};
use crate::jet::{JetPoint, JetPointFile};
use crate::transport::{curve_universe, Curve, Path};

/// A load failure with the place it happened (`F[1][0]`, `line 3 column 5`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct LoadError {
    pub location: String,
    pub message: String,
}

impl LoadError {
    fn new(location: impl Into<String>, message: impl fmt::Display) -> Self {
        LoadError { location: location.into(), message: message.to_string() }
    }

    fn top(message: impl fmt::Display) -> Self {
        LoadError::new("", message)
    }
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.location.is_empty() {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.location, self.message)
        }
    }
}

impl std::error::Error for LoadError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentKind {
    Order1,
    Order2,
    Linear,
    Affine,
    TwoFold,
    Transform,
    Jet,
    Curve,
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DocumentKind::Order1 => "order-1",
            DocumentKind::Order2 => "order-2",
            DocumentKind::Linear => "linear",
            DocumentKind::Affine => "affine",
            DocumentKind::TwoFold => "two-fold",
            DocumentKind::Transform => "transform",
            DocumentKind::Jet => "jet",
            DocumentKind::Curve => "curve",
        })
    }
}

#[derive(Debug, Clone)]
pub enum Document {
    Order1(Connection1),
    Order2(Connection2),
    Linear(LinearConnection1),
    Affine(AffineConnection),
    TwoFold(TwoFoldDocument),
    Transform(TransformDocument),
    Jet(JetPoint),
    Curve(Path),
}

impl Document {
    pub fn kind(&self) -> DocumentKind {
        match self {
            Document::Order1(_) => DocumentKind::Order1,
            Document::Order2(_) => DocumentKind::Order2,
            Document::Linear(_) => DocumentKind::Linear,
            Document::Affine(_) => DocumentKind::Affine,
            Document::TwoFold(_) => DocumentKind::TwoFold,
            Document::Transform(_) => DocumentKind::Transform,
            Document::Jet(_) => DocumentKind::Jet,
            Document::Curve(_) => DocumentKind::Curve,
        }
    }

    /// Order-1, linear and affine documents as a general first-order connection.
    pub fn into_connection1(self) -> Option<Connection1> {
        match self {
            Document::Order1(c) => Some(c),
            Document::Linear(l) => Some(crate::connection::linear_to_general(&l)),
            Document::Affine(a) => Some(crate::connection::affine_to_general(&a)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoFoldDocument {
    pub connection: TwoFoldConnection,
    /// `gamma12_base` when given, otherwise the `gamma12` block.
    pub gamma_hat: Grid2,
}

#[derive(Debug, Clone)]
pub struct TransformDocument {
    pub dims: TwoFoldDims,
    pub transform: Vec<Expr>,
}

pub fn detect(value: &Value) -> Result<DocumentKind, LoadError> {
    let obj = value.as_object().ok_or_else(|| LoadError::top("document must be a JSON object"))?;
    let flag = |k: &str| obj.get(k).and_then(Value::as_bool).unwrap_or(false);
    let has = |k: &str| obj.contains_key(k);
    Ok(if flag("affine") {
        DocumentKind::Affine
    } else if has("dims") && has("transform") {
        DocumentKind::Transform
    } else if has("dims") {
        DocumentKind::TwoFold
    } else if has("values") {
        DocumentKind::Jet
    } else if has("components") || has("segments") {
        DocumentKind::Curve
    } else if flag("linear") {
        DocumentKind::Linear
    } else {
        match obj.get("order").and_then(Value::as_u64) {
            Some(1) => DocumentKind::Order1,
            Some(2) => DocumentKind::Order2,
            Some(k) => return Err(LoadError::new("order", format!("unsupported connection order {k}"))),
            None => return Err(LoadError::top("cannot determine document type")),
        }
    })
}

fn from_value<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T, LoadError> {
    serde_json::from_value(value).map_err(LoadError::top)
}

fn expr(text: &str, universe: &SymbolUniverse, location: String) -> Result<Expr, LoadError> {
    parse_expr(text, universe).map_err(|e| LoadError::new(location, e))
}

fn grid2(name: &str, texts: &[Vec<String>], u: &SymbolUniverse) -> Result<Grid2, LoadError> {
    texts
        .iter()
        .enumerate()
        .map(|(a, row)| row.iter().enumerate().map(|(b, t)| expr(t, u, format!("{name}[{a}][{b}]"))).collect())
        .collect()
}

fn grid3(name: &str, texts: &[Vec<Vec<String>>], u: &SymbolUniverse) -> Result<Grid3, LoadError> {
    texts
        .iter()
        .enumerate()
        .map(|(a, block)| {
            block
                .iter()
                .enumerate()
                .map(|(b, row)| row.iter().enumerate().map(|(c, t)| expr(t, u, format!("{name}[{a}][{b}][{c}]"))).collect())
                .collect()
        })
        .collect()
}

fn text2(g: &Grid2) -> Vec<Vec<String>> {
    g.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()
}

fn text3(g: &Grid3) -> Vec<Vec<Vec<String>>> {
    g.iter().map(text2).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order1File {
    pub order: u8,
    pub base_dim: usize,
    pub fiber_dim: usize,
    #[serde(rename = "F")]
    pub f: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Order2File {
    pub order: u8,
    pub base_dim: usize,
    pub fiber_dim: usize,
    #[serde(rename = "F")]
    pub f: Vec<Vec<String>>,
    #[serde(rename = "G")]
    pub g: Vec<Vec<String>>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearFile {
    pub order: u8,
    pub linear: bool,
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub coeff: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineFile {
    pub affine: bool,
    pub dim: usize,
    pub christoffel: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoFoldBlocks {
    pub gamma1: Vec<Vec<String>>,
    pub gamma2: Vec<Vec<String>>,
    pub gamma12: Vec<Vec<String>>,
    pub gamma12_1: Vec<Vec<String>>,
    pub gamma12_2: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearTwoFoldFile {
    pub a1: Vec<Vec<Vec<String>>>,
    pub a2: Vec<Vec<Vec<String>>>,
    pub b1: Vec<Vec<Vec<String>>>,
    pub b2: Vec<Vec<Vec<String>>>,
    pub c: Vec<Vec<Vec<Vec<String>>>>,
    pub d: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoFoldFile {
    pub dims: TwoFoldDims,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<TwoFoldBlocks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<LinearTwoFoldFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma12_base: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformFile {
    pub dims: TwoFoldDims,
    pub transform: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub components: Vec<String>,
    pub t0: f64,
    pub t1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveFile {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentFile>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<Vec<Option<f64>>>,
}

fn universe(m: usize, n: usize) -> Result<SymbolUniverse, LoadError> {
    SymbolUniverse::new(m, n).map_err(LoadError::top)
}

fn expect_order(order: u8, expected: u8) -> Result<(), LoadError> {
    if order != expected {
        return Err(LoadError::new("order", format!("expected {expected}, got {order}")));
    }
    Ok(())
}

fn order1(file: Order1File) -> Result<Connection1, LoadError> {
    expect_order(file.order, 1)?;
    let u = universe(file.base_dim, file.fiber_dim)?;
    let f = grid2("F", &file.f, &u)?;
    Connection1::new(u, f).map_err(LoadError::top)
}

fn order2(file: Order2File) -> Result<Connection2, LoadError> {
    expect_order(file.order, 2)?;
    let u = universe(file.base_dim, file.fiber_dim)?;
    let (f, g, h) = (grid2("F", &file.f, &u)?, grid2("G", &file.g, &u)?, grid3("H", &file.h, &u)?);
    Connection2::new(u, f, g, h).map_err(LoadError::top)
}

fn linear(file: LinearFile) -> Result<LinearConnection1, LoadError> {
    expect_order(file.order, 1)?;
    let u = universe(file.base_dim, file.fiber_dim)?;
    let coeff = grid3("coeff", &file.coeff, &u)?;
    LinearConnection1::new(u, coeff).map_err(LoadError::top)
}

fn affine(file: AffineFile) -> Result<AffineConnection, LoadError> {
    let u = universe(file.dim, file.dim)?;
    let gamma = grid3("christoffel", &file.christoffel, &u)?;
    AffineConnection::new(file.dim, gamma).map_err(LoadError::top)
}

fn twofold(file: TwoFoldFile) -> Result<TwoFoldDocument, LoadError> {
    let u = twofold_universe(file.dims).map_err(LoadError::top)?;
    let connection = match (file.blocks, file.linear) {
        (Some(b), None) => TwoFoldConnection::new(
            file.dims,
            grid2("blocks.gamma1", &b.gamma1, &u)?,
            grid2("blocks.gamma2", &b.gamma2, &u)?,
            grid2("blocks.gamma12", &b.gamma12, &u)?,
            grid2("blocks.gamma12_1", &b.gamma12_1, &u)?,
            grid2("blocks.gamma12_2", &b.gamma12_2, &u)?,
        )
        .map_err(LoadError::top)?,
        (None, Some(l)) => {
            let c = l
                .c
                .iter()
                .enumerate()
                .map(|(a, g)| grid3(&format!("linear.c[{a}]"), g, &u))
                .collect::<Result<Vec<_>, _>>()?;
            let coeffs = LinearTwoFoldCoefficients {
                dims: file.dims,
                a1: grid3("linear.a1", &l.a1, &u)?,
                a2: grid3("linear.a2", &l.a2, &u)?,
                b1: grid3("linear.b1", &l.b1, &u)?,
                b2: grid3("linear.b2", &l.b2, &u)?,
                c,
                d: grid3("linear.d", &l.d, &u)?,
            };
            crate::frames::linear_twofold(&coeffs).map_err(LoadError::top)?
        }
        _ => return Err(LoadError::top("two-fold file needs exactly one of `blocks` and `linear`")),
    };
    let gamma_hat = match file.gamma12_base {
        Some(g) => grid2("gamma12_base", &g, &u)?,
        None => connection.gamma12.clone(),
    };
    Ok(TwoFoldDocument { connection, gamma_hat })
}

fn transform(file: TransformFile) -> Result<TransformDocument, LoadError> {
    let u = twofold_universe(file.dims).map_err(LoadError::top)?;
    let transform = file
        .transform
        .iter()
        .enumerate()
        .map(|(k, t)| expr(t, &u, format!("transform[{k}]")))
        .collect::<Result<_, _>>()?;
    Ok(TransformDocument { dims: file.dims, transform })
}

fn segment(location: &str, dim: usize, components: &[String], t0: f64, t1: f64) -> Result<Curve, LoadError> {
    if components.len() != dim {
        return Err(LoadError::new(location, format!("expected {dim} components, got {}", components.len())));
    }
    let u = curve_universe();
    let exprs = components
        .iter()
        .enumerate()
        .map(|(k, t)| expr(t, &u, format!("{location}components[{k}]")))
        .collect::<Result<_, _>>()?;
    Curve::new(exprs, t0, t1).map_err(|e| LoadError::new(location.trim_end_matches('.'), e))
}

fn curve(file: CurveFile) -> Result<Path, LoadError> {
    let path = match (file.components, file.t0, file.t1, file.segments) {
        (Some(c), Some(t0), Some(t1), None) => Path::from(segment("", file.dim, &c, t0, t1)?),
        (None, None, None, Some(segs)) => {
            let curves = segs
                .iter()
                .enumerate()
                .map(|(k, s)| segment(&format!("segments[{k}]."), file.dim, &s.components, s.t0, s.t1))
                .collect::<Result<_, _>>()?;
            Path::new(curves).map_err(|e| LoadError::new("segments", e))?
        }
        _ => return Err(LoadError::top("curve file needs `components`, `t0`, `t1`, or `segments`")),
    };
    match file.periods {
        Some(p) => path.with_periods(p).map_err(|e| LoadError::new("periods", e)),
        None => Ok(path),
    }
}

fn jet(file: JetPointFile) -> Result<JetPoint, LoadError> {
    JetPoint::try_from(&file).map_err(LoadError::top)
}

/// Parses a document from JSON text.
pub fn parse_document(text: &str) -> Result<Document, LoadError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| LoadError::new(format!("line {} column {}", e.line(), e.column()), e))?;
    Ok(match detect(&value)? {
        DocumentKind::Order1 => Document::Order1(order1(from_value(value)?)?),
        DocumentKind::Order2 => Document::Order2(order2(from_value(value)?)?),
        DocumentKind::Linear => Document::Linear(linear(from_value(value)?)?),
        DocumentKind::Affine => Document::Affine(affine(from_value(value)?)?),
        DocumentKind::TwoFold => Document::TwoFold(twofold(from_value(value)?)?),
        DocumentKind::Transform => Document::Transform(transform(from_value(value)?)?),
        DocumentKind::Jet => Document::Jet(jet(from_value(value)?)?),
        DocumentKind::Curve => Document::Curve(curve(from_value(value)?)?),
    })
}

/// Reads and parses a file; errors are prefixed with the path.
pub fn load(path: &FsPath) -> Result<Document, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_document(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("documents serialize");
    text.push('\n');
    text
}

pub fn order1_json(c: &Connection1) -> String {
    pretty(&Order1File { order: 1, base_dim: c.base_dim(), fiber_dim: c.fiber_dim(), f: text2(c.coefficients()) })
}

pub fn order2_json(c: &Connection2) -> String {
    pretty(&Order2File {
        order: 2,
        base_dim: c.base_dim(),
        fiber_dim: c.fiber_dim(),
        f: text2(c.f()),
        g: text2(c.g()),
        h: text3(c.h()),
    })
}

pub fn twofold_json(c: &TwoFoldConnection, gamma_hat: Option<&Grid2>) -> String {
    pretty(&TwoFoldFile {
        dims: c.dims(),
        blocks: Some(TwoFoldBlocks {
            gamma1: text2(&c.gamma1),
            gamma2: text2(&c.gamma2),
            gamma12: text2(&c.gamma12),
            gamma12_1: text2(&c.gamma12_1),
            gamma12_2: text2(&c.gamma12_2),
        }),
        linear: None,
        gamma12_base: gamma_hat.map(text2),
    })
}

/// Grid of expressions as pretty JSON.
pub fn grid2_json(g: &Grid2) -> String {
    pretty(&text2(g))
}

pub fn grid3_json(g: &Grid3) -> String {
    pretty(&text3(g))
}

pub fn jet_json(p: &JetPoint) -> String {
    pretty(&JetPointFile::from(p))
}

pub fn curve_json(c: &Curve) -> String {
    let (t0, t1) = c.interval();
    pretty(&CurveFile {
        dim: c.dim(),
        components: Some(c.components().iter().map(ToString::to_string).collect()),
        t0: Some(t0),
        t1: Some(t1),
        segments: None,
        periods: None,
    })
}

/// Serializes any value as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    pretty(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::ehresmann_prolongation;

    #[test]
    fn detects_every_kind() {
        let cases = [
            (r#"{"order":1,"base_dim":1,"fiber_dim":1,"F":[["y1"]]}"#, DocumentKind::Order1),
            (
                r#"{"order":2,"base_dim":1,"fiber_dim":1,"F":[["0"]],"G":[["0"]],"H":[[["0"]]]}"#,
                DocumentKind::Order2,
            ),
            (r#"{"order":1,"linear":true,"base_dim":1,"fiber_dim":1,"coeff":[[["x1"]]]}"#, DocumentKind::Linear),
            (r#"{"affine":true,"dim":1,"christoffel":[[["x1"]]]}"#, DocumentKind::Affine),
            (
                r#"{"dims":[1,1,1,1],"blocks":{"gamma1":[["v1"]],"gamma2":[["0"]],"gamma12":[["0"]],"gamma12_1":[["0"]],"gamma12_2":[["0"]]}}"#,
                DocumentKind::TwoFold,
            ),
            (r#"{"dims":[1,1,1,1],"transform":["u1","v1","w1","z1"]}"#, DocumentKind::Transform),
            (
                r#"{"order":1,"base_dim":1,"fiber_dim":1,"base":[0.0],"values":[{"p":1,"seq":[0],"value":1},{"p":1,"seq":[1],"value":2}]}"#,
                DocumentKind::Jet,
            ),
            (r#"{"dim":1,"components":["t"],"t0":0,"t1":1}"#, DocumentKind::Curve),
            (
                r#"{"dim":1,"segments":[{"components":["t"],"t0":0,"t1":1},{"components":["1-t"],"t0":0,"t1":1}]}"#,
                DocumentKind::Curve,
            ),
        ];
        for (text, kind) in cases {
            assert_eq!(parse_document(text).unwrap().kind(), kind, "{text}");
        }
    }

    #[test]
    fn errors_carry_locations() {
        let e = parse_document(r#"{"order":1,"base_dim":2,"fiber_dim":1,"F":[["y1","x1 +"]]}"#).unwrap_err();
        assert_eq!(e.location, "F[0][1]");
        assert!(e.to_string().contains("position"));
        let e = parse_document("{\n  \"order\": 1,\n").unwrap_err();
        assert!(e.location.starts_with("line"));
        let e = parse_document(r#"{"order":3}"#).unwrap_err();
        assert_eq!(e.location, "order");
        assert!(parse_document(r#"{"order":1,"base_dim":1,"fiber_dim":1,"F":[["y1"]],"extra":1}"#).is_err());
    }

    #[test]
    fn emitted_connections_round_trip() {
        let doc = parse_document(r#"{"order":1,"base_dim":2,"fiber_dim":1,"F":[["y1","x1"]]}"#).unwrap();
        let g = doc.into_connection1().unwrap();
        let text = order1_json(&g);
        assert_eq!(parse_document(&text).unwrap().into_connection1().unwrap(), g);
        let d = ehresmann_prolongation(&g);
        match parse_document(&order2_json(&d)).unwrap() {
            Document::Order2(back) => assert_eq!(back.simplified(), d.simplified()),
            other => panic!("{:?}", other.kind()),
        }
    }

    #[test]
    fn periods_are_checked() {
        let text = r#"{"dim":2,"components":["1","t"],"t0":0,"t1":6.283185307179586,"periods":[null,6.283185307179586]}"#;
        match parse_document(text).unwrap() {
            Document::Curve(p) => assert!(p.closure_gap().unwrap() < 1e-12),
            other => panic!("{:?}", other.kind()),
        }
        assert!(parse_document(r#"{"dim":1,"components":["t"],"t0":0,"t1":1,"periods":[-1]}"#).is_err());
    }
}
