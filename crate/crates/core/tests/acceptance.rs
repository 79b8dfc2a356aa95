//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use jetconn::connection::{
    classify, curvature, ehresmann_prolongation, exchange, family, product, Connection1, Connection2, Grid2, Grid3,
    Verdict,
};
use jetconn::expr::{expr_equal, parse_expr, Assignment, Confidence, Expr, Func, Number, Sampler, SymbolUniverse};
use jetconn::frames::{adapted_frame, twofold_dual_coframe, TwoFoldConnection};
use jetconn::jet::{nonzero_core, JetPoint, JetSequence};
use jetconn::transport::{curve_universe, loop_holonomy, transport1, Curve, Path};
use jetconn::Execution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FD_STEP: f64 = 1e-5;
const FD_REL_TOL: f64 = 1e-5;
const PRODUCT_TIME_LIMIT: Duration = Duration::from_secs(10);
const JET_TIME_LIMIT: Duration = Duration::from_secs(5);
const DUALITY_TOL: f64 = 1e-10;
const E_TOL: f64 = 1e-7;
const ORDER_RANGE: (f64, f64) = (3.7, 4.1);
const FLAT_DEFECT_TOL: f64 = 1e-5;
const SMALL_LOOP_REL_TOL: f64 = 0.10;
const SMALL_LOOP_EPS: f64 = 1e-2;

type Check = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn universe(m: usize, n: usize) -> SymbolUniverse {
    SymbolUniverse::new(m, n).unwrap()
}

/// Random polynomial of degree <= `degree` with small integer coefficients.
fn poly(rng: &mut ChaCha8Rng, vars: &[String], degree: usize) -> Expr {
    let terms = rng.random_range(1..=4);
    Expr::sum((0..terms).map(|_| {
        let coeff = loop {
            let c = rng.random_range(-3i64..=3);
            if c != 0 {
                break c;
            }
        };
        let d = rng.random_range(0..=degree);
        (0..d).fold(Expr::int(coeff), |acc, _| Expr::mul(acc, Expr::var(vars[rng.random_range(0..vars.len())].clone())))
    }))
}

fn all_vars(u: &SymbolUniverse) -> Vec<String> {
    let mut v = u.base_vars();
    v.extend(u.fiber_vars());
    v
}

fn random_connection(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Connection1 {
    let u = universe(m, n);
    let vars = all_vars(&u);
    let f = (0..n).map(|_| (0..m).map(|_| poly(rng, &vars, 2)).collect()).collect();
    Connection1::new(u, f).unwrap()
}

fn random_dims(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(1..=3), rng.random_range(1..=3))
}

fn eval(e: &Expr, at: &Assignment) -> f64 {
    e.eval(at).unwrap()
}

fn point(u: &SymbolUniverse, values: &[f64]) -> Assignment {
    all_vars(u).into_iter().zip(values.iter().copied()).collect()
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let (m, n) = random_dims(&mut rng);
        let gamma = random_connection(&mut rng, m, n);
        let bar = random_connection(&mut rng, m, n);
        let delta = product(&gamma, &bar).unwrap();
        let u = gamma.universe().clone();
        for _ in 0..20 {
            let base: Vec<f64> = (0..m + n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let at = point(&u, &base);
            for p in 0..n {
                for i in 0..m {
                    for j in 0..m {
                        // Direction: e_j in the base, G_j(x, y) in the fiber.
                        let mut dir = vec![0.0; m + n];
                        dir[j] = 1.0;
                        for q in 0..n {
                            dir[m + q] = eval(&bar.coefficients()[q][j], &at);
                        }
                        let shifted = |s: f64| {
                            let v: Vec<f64> = base.iter().zip(&dir).map(|(b, d)| b + s * d).collect();
                            eval(&gamma.coefficients()[p][i], &point(&u, &v))
                        };
                        let fd = (shifted(FD_STEP) - shifted(-FD_STEP)) / (2.0 * FD_STEP);
                        let exact = eval(&delta.h()[p][i][j], &at);
                        let rel = (fd - exact).abs() / (1.0 + exact.abs());
                        worst = worst.max(rel);
                        ensure(rel <= FD_REL_TOL, || format!("H[{p}][{i}][{j}] = {exact}, finite difference {fd}"))?;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < PRODUCT_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("50 connections x 20 points, worst rel err {worst:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

fn grids_equal(a: &Grid2, b: &Grid2, s: &Sampler) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| expr_equal(x, y, s).unwrap().equal)
}

fn criterion_2() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let s = Sampler::default();
    let (mut semi, mut non) = (0, 0);
    for k in 0..50 {
        let (m, n) = random_dims(&mut rng);
        let gamma = random_connection(&mut rng, m, n);
        let bar = if k < 25 { gamma.clone() } else { random_connection(&mut rng, m, n) };
        let verdict = classify(&product(&gamma, &bar).unwrap(), &s).unwrap();
        let same = grids_equal(gamma.coefficients(), bar.coefficients(), &s);
        ensure(verdict.is_semiholonomic() == same, || format!("pair {k}: classify {verdict}, F equal {same}"))?;
        if same {
            semi += 1;
        } else {
            non += 1;
        }
    }
    ensure(semi >= 25, || format!("only {semi} semiholonomic pairs"))?;
    Ok(format!("50 pairs, {semi} semiholonomic, {non} nonholonomic, 0 mismatches"))
}

fn gradient_connection(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Connection1 {
    let u = universe(m, n);
    let base = u.base_vars();
    let f = (0..n)
        .map(|_| {
            let phi = poly(rng, &base, 3);
            base.iter().map(|x| phi.derivative(x)).collect()
        })
        .collect();
    Connection1::new(u, f).unwrap()
}

fn twisted() -> Connection1 {
    let u = universe(2, 1);
    Connection1::new(u.clone(), vec![vec![parse_expr("y1", &u).unwrap(), parse_expr("x1", &u).unwrap()]]).unwrap()
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let s = Sampler::default();
    for k in 0..20 {
        let (m, n) = (rng.random_range(2..=3), rng.random_range(1..=2));
        let g = gradient_connection(&mut rng, m, n);
        let c = classify(&ehresmann_prolongation(&g), &s).unwrap();
        ensure(c.verdict == Verdict::Holonomic, || format!("gradient {k}: {c}"))?;
    }
    let t = twisted();
    let c = classify(&ehresmann_prolongation(&t), &s).unwrap();
    ensure(c.verdict == Verdict::Semiholonomic, || format!("twisted: {c}"))?;
    let r12 = &curvature(&t)[0][0][1];
    let v = expr_equal(r12, &parse_expr("x1 - 1", &universe(2, 1)).unwrap(), &s).unwrap();
    ensure(v.equal && v.confidence == Confidence::Symbolic, || format!("R12 = {r12} ({v:?})"))?;
    Ok(format!("20 gradients holonomic; F=(y1,x1) {}, R12 = {r12} (symbolic)", c.verdict))
}

fn symbolic_match(a: &Connection2, b: &Connection2) -> bool {
    let s = Sampler::default();
    let pairs = a
        .f()
        .iter()
        .flatten()
        .zip(b.f().iter().flatten())
        .chain(a.g().iter().flatten().zip(b.g().iter().flatten()))
        .chain(a.h().iter().flatten().flatten().zip(b.h().iter().flatten().flatten()));
    pairs.into_iter().all(|(x, y)| {
        let v = expr_equal(x, y, &s).unwrap();
        v.equal && v.confidence == Confidence::Symbolic
    })
}

fn probabilistic_match(a: &Connection2, b: &Connection2, s: &Sampler) -> bool {
    a.h().iter().flatten().flatten().zip(b.h().iter().flatten().flatten()).all(|(x, y)| expr_equal(x, y, s).unwrap().equal)
        && grids_equal(a.f(), b.f(), s)
        && grids_equal(a.g(), b.g(), s)
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let s = Sampler::default();
    for k in 0..20 {
        let (m, n) = random_dims(&mut rng);
        let g = if k == 0 { twisted() } else { random_connection(&mut rng, m, n) };
        let prolonged = ehresmann_prolongation(&g);
        ensure(symbolic_match(&family(&g, Number::ONE), &prolonged), || format!("k=1 differs for connection {k}"))?;
        ensure(symbolic_match(&family(&g, Number::ZERO), &exchange(&prolonged)), || format!("k=0 differs for connection {k}"))?;
        let mid = classify(&family(&g, Number::ratio(1, 2)), &s).unwrap();
        ensure(mid.verdict == Verdict::Holonomic, || format!("k=1/2 gives {mid} for connection {k}"))?;
    }
    for k in 0..10 {
        let (m, n) = (rng.random_range(1..=3), rng.random_range(1..=2));
        let g = gradient_connection(&mut rng, m, n);
        let members: Vec<Connection2> = [0.0, 0.3, 1.0].into_iter().map(|k| family(&g, Number::from_f64(k))).collect();
        ensure(
            probabilistic_match(&members[0], &members[1], &s) && probabilistic_match(&members[1], &members[2], &s),
            || format!("flat connection {k}: family depends on k"),
        )?;
    }
    Ok("endpoints symbolic on 20 connections, k=1/2 holonomic, 10 flat families k-independent".into())
}

fn random_grid2(rng: &mut ChaCha8Rng, vars: &[String], rows: usize, cols: usize) -> Grid2 {
    (0..rows).map(|_| (0..cols).map(|_| poly(rng, vars, 2)).collect()).collect()
}

fn criterion_5() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for k in 0..50 {
        let (m, n) = random_dims(&mut rng);
        let u = universe(m, n);
        let vars = all_vars(&u);
        let f = random_grid2(&mut rng, &vars, n, m);
        let g = random_grid2(&mut rng, &vars, n, m);
        let h: Grid3 = (0..n).map(|_| random_grid2(&mut rng, &vars, m, m)).collect();
        let d = Connection2::new(u, f, g, h).unwrap();
        let back = exchange(&exchange(&d));
        ensure(back.simplified() == d.simplified(), || format!("connection {k} changed under e∘e"))?;
        ensure(symbolic_match(&back, &d), || format!("connection {k} not symbolically equal"))?;
    }
    Ok("50 random order-2 connections".into())
}

fn random_jet(rng: &mut ChaCha8Rng) -> JetPoint {
    let (r, m, n) = (rng.random_range(1..=3), rng.random_range(1..=2), rng.random_range(1..=2));
    let base: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mode = rng.random_range(0..3);
    let mut by_core: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
    let mut values = BTreeMap::new();
    for p in 1..=n {
        for seq in JetSequence::all(r, m) {
            let v = match mode {
                0 => rng.random_range(-5i32..=5) as f64,
                _ => *by_core.entry((p, nonzero_core(seq.entries()))).or_insert_with(|| rng.random_range(-5i32..=5) as f64),
            };
            values.insert((p, seq.entries().to_vec()), v);
        }
    }
    if mode == 2 {
        let keys: Vec<_> = values.keys().cloned().collect();
        let key = &keys[rng.random_range(0..keys.len())];
        *values.get_mut(key).unwrap() += 1.0;
    }
    JetPoint::from_fn(r, m, n, base, |p, seq| values[&(p, seq.to_vec())]).unwrap()
}

fn criterion_6() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut semi = 0;
    for k in 0..1000 {
        let jet = random_jet(&mut rng);
        let by_core = jet.is_semiholonomic();
        ensure(by_core == jet.satisfies_projection_identities(), || format!("jet {k}: rules disagree"))?;
        semi += by_core as usize;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < JET_TIME_LIMIT, || format!("took {elapsed:?}"))?;
    Ok(format!("1000 jets ({semi} semiholonomic), exact agreement, {:.2}s", elapsed.as_secs_f64()))
}

fn numeric_grid(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Grid2 {
    (0..rows).map(|_| (0..cols).map(|_| Expr::num(Number::Float(rng.random_range(-3.0..3.0)))).collect()).collect()
}

fn criterion_7() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for k in 0..20 {
        let (m, n) = random_dims(&mut rng);
        let g = if k == 0 { twisted() } else { random_connection(&mut rng, m, n) };
        ensure(adapted_frame(&g).is_dual(), || format!("adapted frame {k}: coframe·frame is not the identity"))?;
    }
    let s = Sampler::default();
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let dims = [0; 4].map(|_| rng.random_range(1..=2));
        let [n, r1, r2, r12] = dims;
        let c = TwoFoldConnection::new(
            dims,
            numeric_grid(&mut rng, r1, n),
            numeric_grid(&mut rng, r2, n),
            numeric_grid(&mut rng, r12, n),
            numeric_grid(&mut rng, r12, r1),
            numeric_grid(&mut rng, r12, r2),
        )
        .unwrap();
        let co = twofold_dual_coframe(&c, &c.gamma12, &s).map_err(|e| format!("block set {k}: {e}"))?;
        let err = co.report.max_error.max(co.report.max_inverse_error);
        worst = worst.max(err);
        ensure(err <= DUALITY_TOL, || format!("block set {k}: inverse error {err:e}"))?;
    }
    Ok(format!("20 symbolic frames dual; 100 two-fold block sets, worst inverse error {worst:.1e}"))
}

fn curve(components: &[&str], t0: f64, t1: f64) -> Curve {
    let u = curve_universe();
    Curve::new(components.iter().map(|c| parse_expr(c, &u).unwrap()).collect(), t0, t1).unwrap()
}

fn conn(m: usize, n: usize, rows: &[&[&str]]) -> Connection1 {
    let u = universe(m, n);
    Connection1::new(u.clone(), rows.iter().map(|r| r.iter().map(|t| parse_expr(t, &u).unwrap()).collect()).collect())
        .unwrap()
}

fn criterion_8() -> Check {
    let exp = conn(1, 1, &[&["y1"]]);
    let line = curve(&["t"], 0.0, 1.0);
    let err = |steps| (transport1(&exp, &line, &[1.0], steps).unwrap().final_state()[0] - std::f64::consts::E).abs();
    let (e100, e200) = (err(100), err(200));
    ensure(e100 < E_TOL, || format!("|y(1) - e| = {e100:e} at 100 steps"))?;
    let order = (e100 / e200).log2();
    ensure((ORDER_RANGE.0..=ORDER_RANGE.1).contains(&order), || format!("observed order {order}"))?;

    let u = universe(2, 2);
    let p = |t: &str| parse_expr(t, &u).unwrap();
    let mut christoffel = vec![vec![vec![Expr::zero(); 2]; 2]; 2];
    christoffel[0][1][1] = p("-x1");
    christoffel[1][0][1] = p("1/x1");
    christoffel[1][1][0] = p("1/x1");
    let polar = jetconn::connection::affine_to_general(&jetconn::connection::AffineConnection::new(2, christoffel).unwrap());
    let two_pi = 2.0 * std::f64::consts::PI;
    let loop_ = Path::from(curve(&["1", "t"], 0.0, two_pi)).with_periods(vec![None, Some(two_pi)]).unwrap();
    let flat = loop_holonomy(&polar, &loop_, None, 2000, Execution::default()).map_err(|e| e.to_string())?;
    ensure(flat.defect < FLAT_DEFECT_TOL, || format!("polar loop defect {:e}", flat.defect))?;

    let g = conn(2, 1, &[&["0", "x1*y1"]]);
    let (a, b, eps) = (0.3, -0.2, SMALL_LOOP_EPS);
    let side = |s: f64| format!("{s:?}");
    let segments = [
        [format!("{} + t", side(a)), side(b)],
        [side(a + eps), format!("{} + t", side(b))],
        [format!("{} - t", side(a + eps)), side(b + eps)],
        [side(a), format!("{} - t", side(b + eps))],
    ];
    let square = Path::new(segments.iter().map(|s| curve(&[&s[0], &s[1]], 0.0, eps)).collect()).unwrap();
    let small = loop_holonomy(&g, &square, None, 50, Execution::default()).map_err(|e| e.to_string())?;
    let centre = Assignment::new().with("x1", a + eps / 2.0).with("x2", b + eps / 2.0).with("y1", 1.0);
    let r = curvature(&g)[0][0][1].eval(&centre).unwrap().abs();
    let predicted = r * eps * eps;
    let rel = (small.defect - predicted).abs() / predicted;
    ensure(rel <= SMALL_LOOP_REL_TOL, || format!("square defect {:e}, |R| eps^2 = {predicted:e}", small.defect))?;
    Ok(format!(
        "e err {e100:.1e}, order {order:.3}, polar defect {:.1e}, square defect/|R|eps^2 = {:.4}",
        flat.defect,
        small.defect / predicted
    ))
}

const FUZZ_VARS: [&str; 4] = ["x1", "x2", "y1", "t"];

fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    if depth == 0 || rng.random_range(0..4) == 0 {
        return match rng.random_range(0..3) {
            0 => Expr::int(rng.random_range(0..50)),
            1 => Expr::num(Number::ratio(rng.random_range(0..1000), [2, 4, 5, 8, 10, 100][rng.random_range(0..6)])),
            _ => Expr::var(FUZZ_VARS[rng.random_range(0..FUZZ_VARS.len())]),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_expr(rng, depth - 1);
    match rng.random_range(0..8) {
        0 => Expr::neg(sub(rng)),
        1 => Expr::add(sub(rng), sub(rng)),
        2 => Expr::sub(sub(rng), sub(rng)),
        3 => Expr::mul(sub(rng), sub(rng)),
        4 => Expr::div(sub(rng), sub(rng)),
        5 => Expr::pow(sub(rng), rng.random_range(-4..=4)),
        _ => Expr::func(Func::ALL[rng.random_range(0..Func::ALL.len())], sub(rng)),
    }
}

const BAD_INPUTS: [&str; 16] = [
    "", "x1 +", "(x1", "x1)", "sin x1", "sin(x1, x2)", "x1 ^ 1.5", "x1 ^ x2", "x1 ^ 2 ^ 3", "3 +* 4", "q7", "x1 # 2",
    "cos()", "1e", "--x1", "exp(x1))",
];

fn criterion_9() -> Check {
    let u = SymbolUniverse::with_extra(2, 1, ["t"]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for k in 0..1000 {
        let e = random_expr(&mut rng, 6);
        let text = e.to_string();
        let back = parse_expr(&text, &u).map_err(|err| format!("case {k}: `{text}` does not parse: {err}"))?;
        ensure(back == e, || format!("case {k}: `{text}` parses to a different tree"))?;
        ensure(back.to_string() == text, || format!("case {k}: reprint of `{text}` differs"))?;
    }
    for bad in BAD_INPUTS {
        let err = match parse_expr(bad, &u) {
            Ok(e) => return Err(format!("`{bad}` parsed as {e}")),
            Err(err) => err,
        };
        let len = bad.chars().count();
        ensure(err.position >= 1 && err.position <= len + 1, || format!("`{bad}`: position {}", err.position))?;
        ensure(err.to_string().contains(&format!("position {}", err.position)), || format!("`{bad}`: {err}"))?;
    }
    // Random byte soup must never panic.
    let alphabet: Vec<char> = "x1y2t+-*/^() .,e3sincoxpl#".chars().collect();
    for _ in 0..2000 {
        let len = rng.random_range(0..16);
        let text: String = (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect();
        if let Err(err) = parse_expr(&text, &u) {
            ensure(err.position >= 1, || format!("`{text}`: position 0"))?;
        }
    }
    Ok(format!("1000 round trips, {} error cases positioned, 2000 random strings", BAD_INPUTS.len()))
}

fn criterion_10() -> Check {
    let cases = common::golden_cases();
    let mut differing = Vec::new();
    for (name, args) in &cases {
        let first = common::run_case(args);
        let second = common::run_case(args);
        ensure(first == second, || format!("`{name}` differs between runs"))?;
        let golden = std::fs::read_to_string(common::golden_dir().join(format!("{name}.txt"))).unwrap_or_default();
        if golden != first {
            differing.push(name.clone());
        }
    }
    ensure(differing.is_empty(), || format!("golden mismatch: {differing:?}"))?;
    Ok(format!("{} golden cases byte-identical across two runs", cases.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("product agrees with finite differences", criterion_1),
        ("semiholonomy criterion", criterion_2),
        ("holonomy criterion", criterion_3),
        ("one-parameter family", criterion_4),
        ("exchange involution", criterion_5),
        ("jet combinatorics", criterion_6),
        ("frames and coframes", criterion_7),
        ("transport", criterion_8),
        ("parser", criterion_9),
        ("command line determinism", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
