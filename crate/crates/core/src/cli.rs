//! The `jetconn` command line.
//!
//! Exit status: 0 on success, 1 on a domain error (unreadable or invalid
//! input, dimension mismatch, integration failure), 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path as FsPath, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::connection::{self, Connection1, Connection2, ConnectionError};
use crate::expr::{Number, Sampler};
use crate::frames;
use crate::io::{self, Document};
use crate::par::Execution;
use crate::transport::{self, Path};

#[derive(Debug, Parser)]
#[command(name = "jetconn", version, about = "Connections on fibered manifolds: products, classification, frames, transport")]
pub struct Cli {
    /// Seed for the random sample points of equality checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance of sampled equality checks (scaled by 1 + |value|).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of sample points for equality checks.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    #[value(name = "1")]
    First,
    #[value(name = "2")]
    Second,
    #[value(name = "ode2")]
    Ode2,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a file and report its type.
    Validate { file: PathBuf },
    /// Product of two first-order connections.
    Product { a: PathBuf, b: PathBuf },
    /// Self-product of a first-order connection.
    Prolong { a: PathBuf },
    /// Curvature grid R[p][i][j] of a first-order connection.
    Curvature { a: PathBuf },
    /// Exchange of a second-order connection.
    Exchange { d: PathBuf },
    /// Member k of the family between the self-product and its exchange.
    Family {
        a: PathBuf,
        /// Decimal or fraction (`0.3`, `1/2`).
        #[arg(long, allow_hyphen_values = true)]
        k: String,
    },
    /// Holonomic, semiholonomic or nonholonomic.
    Classify { d: PathBuf },
    /// Pointwise semiholonomy of a jet file.
    Semiholonomy { jet: PathBuf },
    /// Adapted frame and coframe of a first-order connection.
    Frames {
        a: PathBuf,
        /// Comma-separated x1..xm,y1..yn.
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    /// Two-fold frame, derived coframe and duality report.
    Twofold { file: PathBuf },
    /// Zero-block structure of a two-fold coordinate transform.
    Jacobian { file: PathBuf },
    /// Transport along a curve as CSV.
    Transport {
        kind: TransportKind,
        conn: PathBuf,
        curve: PathBuf,
        /// Comma-separated initial y1..yn.
        #[arg(long, allow_hyphen_values = true)]
        y0: String,
        /// Comma-separated initial y_i^p in [p][i] order (second-order transport; default 0).
        #[arg(long, allow_hyphen_values = true)]
        y0i: Option<String>,
        /// RK4 steps (per path segment).
        #[arg(long, default_value_t = 1000)]
        steps: usize,
    },
    /// Holonomy matrix and defect around a closed curve.
    Holonomy {
        conn: PathBuf,
        #[arg(name = "loop")]
        loop_file: PathBuf,
        /// RK4 steps (per path segment).
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        /// Basis vectors separated by `;`, components by `,`.
        #[arg(long, allow_hyphen_values = true)]
        basis: Option<String>,
    },
}

/// A domain error: printed as one line, exit status 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn sampler(cli: &Cli) -> Sampler {
    let mut s = Sampler::with_seed(cli.seed);
    if let Some(tol) = cli.tol {
        s.tol = tol;
    }
    if let Some(points) = cli.samples {
        s.points = points;
    }
    s.execution = Execution::Sequential;
    s
}

fn load(path: &FsPath) -> Result<Document, Failure> {
    io::load(path).map_err(Failure)
}

fn connection1(path: &FsPath) -> Result<Connection1, Failure> {
    let doc = load(path)?;
    let kind = doc.kind();
    doc.into_connection1()
        .ok_or_else(|| Failure(format!("{}: expected a first-order connection, found {kind}", path.display())))
}

fn connection2(path: &FsPath) -> Result<Connection2, Failure> {
    match load(path)? {
        Document::Order2(d) => Ok(d),
        other => Err(Failure(format!("{}: expected an order-2 connection, found {}", path.display(), other.kind()))),
    }
}

/// Order-2 files as given; first-order files are self-prolonged.
fn connection2_or_prolong(path: &FsPath) -> Result<Connection2, Failure> {
    match load(path)? {
        Document::Order2(d) => Ok(d),
        other => {
            let kind = other.kind();
            other
                .into_connection1()
                .map(|g| connection::ehresmann_prolongation(&g))
                .ok_or_else(|| Failure(format!("{}: expected a connection, found {kind}", path.display())))
        }
    }
}

fn path_file(file: &FsPath) -> Result<Path, Failure> {
    match load(file)? {
        Document::Curve(p) => Ok(p),
        other => Err(Failure(format!("{}: expected a curve, found {}", file.display(), other.kind()))),
    }
}

fn numbers(flag: &str, text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Failure(format!("--{flag}: `{}` is not a finite number", s.trim())))
        })
        .collect()
}

fn parse_k(text: &str) -> Result<Number, Failure> {
    let bad = || Failure(format!("--k: `{text}` is not a decimal or fraction"));
    let (negative, body) = match text.trim().strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.trim()),
    };
    let magnitude = match body.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (Number::from_literal(p).ok_or_else(bad)?, Number::from_literal(q).ok_or_else(bad)?);
            p.div(q).ok_or_else(bad)?
        }
        None => Number::from_literal(body).ok_or_else(bad)?,
    };
    Ok(if negative { magnitude.neg() } else { magnitude })
}

fn dims_text(m: usize, n: usize) -> String {
    format!("base_dim={m} fiber_dim={n}")
}

fn validate(file: &FsPath) -> Outcome {
    let doc = load(file)?;
    let detail = match &doc {
        Document::Order1(c) => dims_text(c.base_dim(), c.fiber_dim()),
        Document::Order2(c) => dims_text(c.base_dim(), c.fiber_dim()),
        Document::Linear(c) => dims_text(c.universe().base_dim(), c.universe().fiber_dim()),
        Document::Affine(c) => format!("dim={}", c.dim()),
        Document::TwoFold(t) => format!("dims={:?}", t.connection.dims()),
        Document::Transform(t) => format!("dims={:?}", t.dims),
        Document::Jet(j) => format!("order={} {}", j.order(), dims_text(j.base_dim(), j.fiber_dim())),
        Document::Curve(p) => format!("dim={} segments={}", p.dim(), p.segments().len()),
    };
    Ok(format!("{}: valid {} ({detail})\n", file.display(), doc.kind()))
}

fn product(a: &FsPath, b: &FsPath) -> Outcome {
    let (ga, gb) = (connection1(a)?, connection1(b)?);
    match connection::product(&ga, &gb) {
        Ok(d) => Ok(io::order2_json(&d)),
        Err(ConnectionError::UniverseMismatch(m1, n1, m2, n2)) => Err(Failure(format!(
            "dimension mismatch: {} has base_dim={m1} fiber_dim={n1}, {} has base_dim={m2} fiber_dim={n2}",
            a.display(),
            b.display()
        ))),
        Err(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct CurvatureOut {
    #[serde(rename = "R")]
    r: Vec<Vec<Vec<String>>>,
}

fn text3(g: &connection::Grid3) -> Vec<Vec<Vec<String>>> {
    g.iter().map(|b| b.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()).collect()
}

fn text2(g: &connection::Grid2) -> Vec<Vec<String>> {
    g.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect()
}

fn semiholonomy(file: &FsPath) -> Outcome {
    let jet = match load(file)? {
        Document::Jet(j) => j,
        other => return Err(Failure(format!("{}: expected a jet point, found {}", file.display(), other.kind()))),
    };
    let core = jet.is_semiholonomic();
    let projections = jet.satisfies_projection_identities();
    let word = |b: bool| if b { "semiholonomic" } else { "not semiholonomic" };
    let mut out = format!("core rule: {}\nprojection rule: {}\n", word(core), word(projections));
    out.push_str(&format!("rules agree: {}\n", if core == projections { "yes" } else { "no" }));
    out.push_str(&format!("holonomic: {}\n", if jet.is_holonomic() { "yes" } else { "no" }));
    Ok(out)
}

#[derive(Serialize)]
struct SymbolicFrameOut {
    frame: Vec<Vec<String>>,
    coframe: Vec<Vec<String>>,
    dual: bool,
}

#[derive(Serialize)]
struct NumericFrameOut {
    at: Vec<f64>,
    frame: Vec<Vec<f64>>,
    coframe: Vec<Vec<f64>>,
}

fn rows(m: &nalgebra::DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

fn frames_cmd(a: &FsPath, at: Option<&str>) -> Outcome {
    let g = connection1(a)?;
    let f = frames::adapted_frame(&g);
    match at {
        None => Ok(io::to_json(&SymbolicFrameOut { frame: text2(&f.frame), coframe: text2(&f.coframe), dual: f.is_dual() })),
        Some(text) => {
            let point = numbers("at", text)?;
            let (m, n) = (g.base_dim(), g.fiber_dim());
            if point.len() != m + n {
                return Err(Failure(format!("--at: expected {} values (x1..x{m}, y1..y{n}), got {}", m + n, point.len())));
            }
            let (frame, coframe) = f.at(&point[..m], &point[m..])?;
            Ok(io::to_json(&NumericFrameOut { at: point, frame: rows(&frame), coframe: rows(&coframe) }))
        }
    }
}

#[derive(Serialize)]
struct TwoFoldOut {
    dims: frames::TwoFoldDims,
    frame: Vec<Vec<String>>,
    gamma_bar: Vec<Vec<String>>,
    coframe: Vec<Vec<String>>,
    duality: DualityOut,
}

#[derive(Serialize)]
struct DualityOut {
    verified: bool,
    points_checked: usize,
    points_skipped: usize,
    max_error: f64,
    max_inverse_error: f64,
    max_det_error: f64,
}

fn twofold_cmd(file: &FsPath, s: &Sampler) -> Outcome {
    let doc = match load(file)? {
        Document::TwoFold(t) => t,
        other => return Err(Failure(format!("{}: expected a two-fold connection, found {}", file.display(), other.kind()))),
    };
    let co = frames::twofold_dual_coframe(&doc.connection, &doc.gamma_hat, s)
        .map_err(|e| Failure(format!("{}: {e}", file.display())))?;
    let r = &co.report;
    Ok(io::to_json(&TwoFoldOut {
        dims: doc.connection.dims(),
        frame: text2(&co.frame),
        gamma_bar: text2(&co.gamma_bar),
        coframe: text2(&co.rows),
        duality: DualityOut {
            verified: true,
            points_checked: r.points_checked,
            points_skipped: r.points_skipped,
            max_error: r.max_error,
            max_inverse_error: r.max_inverse_error,
            max_det_error: r.max_det_error,
        },
    }))
}

#[derive(Serialize)]
struct JacobianOut {
    valid: bool,
    jacobian: Vec<Vec<String>>,
    violations: Vec<ViolationOut>,
}

#[derive(Serialize)]
struct ViolationOut {
    block: String,
    component: String,
    coordinate: String,
    entry: String,
}

fn jacobian_cmd(file: &FsPath, s: &Sampler) -> Outcome {
    let doc = match load(file)? {
        Document::Transform(t) => t,
        other => return Err(Failure(format!("{}: expected a transform, found {}", file.display(), other.kind()))),
    };
    let report = frames::validate_twofold_jacobian(doc.dims, &doc.transform, s)
        .map_err(|e| Failure(format!("{}: {e}", file.display())))?;
    Ok(io::to_json(&JacobianOut {
        valid: report.is_valid(),
        jacobian: text2(&report.jacobian),
        violations: report
            .violations
            .iter()
            .map(|v| ViolationOut {
                block: format!("({}, {})", v.row_block, v.col_block),
                component: v.component.clone(),
                coordinate: v.coordinate.clone(),
                entry: v.entry.to_string(),
            })
            .collect(),
    }))
}

fn single_curve(path: Path, file: &FsPath) -> Result<transport::Curve, Failure> {
    match path.segments() {
        [c] => Ok(c.clone()),
        _ => Err(Failure(format!("{}: second-order transport needs a single-segment curve", file.display()))),
    }
}

fn transport_cmd(
    kind: TransportKind,
    conn: &FsPath,
    curve: &FsPath,
    y0: &str,
    y0i: Option<&str>,
    steps: usize,
) -> Outcome {
    let y0 = numbers("y0", y0)?;
    let path = path_file(curve)?;
    let result = match kind {
        TransportKind::First => {
            let g = connection1(conn)?;
            transport::transport_path(&g, &path, &y0, steps)?
        }
        TransportKind::Second => {
            let d = connection2_or_prolong(conn)?;
            let (m, n) = (d.base_dim(), d.fiber_dim());
            let flat = match y0i {
                Some(text) => numbers("y0i", text)?,
                None => vec![0.0; n * m],
            };
            if flat.len() != n * m {
                return Err(Failure(format!("--y0i: expected {} values, got {}", n * m, flat.len())));
            }
            let grid: Vec<Vec<f64>> = flat.chunks(m).map(<[f64]>::to_vec).collect();
            transport::transport2(&d, &single_curve(path, curve)?, &y0, &grid, steps)?
        }
        TransportKind::Ode2 => {
            let d = connection2_or_prolong(conn)?;
            transport::second_order_ode(&d, &single_curve(path, curve)?, &y0, steps)?
        }
    };
    Ok(result.to_csv())
}

#[derive(Serialize)]
struct HolonomyOut {
    matrix: Vec<Vec<f64>>,
    defect: f64,
}

fn holonomy_cmd(conn: &FsPath, loop_file: &FsPath, steps: usize, basis: Option<&str>) -> Outcome {
    let g = connection1(conn)?;
    let path = path_file(loop_file)?;
    let basis = basis
        .map(|text| text.split(';').map(|v| numbers("basis", v)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let h = transport::loop_holonomy(&g, &path, basis.as_deref(), steps, Execution::Sequential)
        .map_err(|e| Failure(format!("{}: {e}", loop_file.display())))?;
    Ok(io::to_json(&HolonomyOut { matrix: rows(&h.matrix), defect: h.defect }))
}

/// Runs a parsed command and returns its text output.
pub fn execute(cli: &Cli) -> Outcome {
    let s = sampler(cli);
    match &cli.command {
        Command::Validate { file } => validate(file),
        Command::Product { a, b } => product(a, b),
        Command::Prolong { a } => Ok(io::order2_json(&connection::ehresmann_prolongation(&connection1(a)?))),
        Command::Curvature { a } => Ok(io::to_json(&CurvatureOut { r: text3(&connection::curvature(&connection1(a)?)) })),
        Command::Exchange { d } => Ok(io::order2_json(&connection::exchange(&connection2(d)?))),
        Command::Family { a, k } => {
            let k = parse_k(k)?;
            Ok(io::order2_json(&connection::family(&connection1(a)?, k)))
        }
        Command::Classify { d } => {
            let c = connection::classify(&connection2(d)?, &s).map_err(|e| Failure(format!("{}: {e}", d.display())))?;
            Ok(format!("{c}\n"))
        }
        Command::Semiholonomy { jet } => semiholonomy(jet),
        Command::Frames { a, at } => frames_cmd(a, at.as_deref()),
        Command::Twofold { file } => twofold_cmd(file, &s),
        Command::Jacobian { file } => jacobian_cmd(file, &s),
        Command::Transport { kind, conn, curve, y0, y0i, steps } => {
            transport_cmd(*kind, conn, curve, y0, y0i.as_deref(), *steps)
        }
        Command::Holonomy { conn, loop_file, steps, basis } => holonomy_cmd(conn, loop_file, *steps, basis.as_deref()),
    }
}

/// Full command-line entry point; returns the exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(rendered.as_bytes()) } else { stderr.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    match execute(&cli) {
        Ok(text) => {
            let written = match &cli.output {
                Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    1
                }
            }
        }
        Err(Failure(message)) => {
            let _ = writeln!(stderr, "error: {}", message.replace('\n', " "));
            1
        }
    }
}
