#![allow(dead_code)]

use std::path::PathBuf;
use std::process::Command;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Every subcommand on the shipped example files, as `(golden name, arguments)`.
pub fn golden_cases() -> Vec<(String, Vec<String>)> {
    let mut cases: Vec<(String, Vec<String>)> = Vec::new();
    let mut add = |name: &str, args: &[&str]| cases.push((name.to_string(), args.iter().map(|s| s.to_string()).collect()));
    let mut files: Vec<String> = std::fs::read_dir(data_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|f| f.ends_with(".json"))
        .collect();
    files.sort();
    for f in &files {
        add(&format!("validate_{}", f.trim_end_matches(".json")), &["validate", f]);
    }
    add("product_twisted_gradient", &["product", "twisted.json", "gradient.json"]);
    add("product_mismatch", &["product", "twisted.json", "fiber_two.json"]);
    add("prolong_twisted", &["prolong", "twisted.json"]);
    add("prolong_linear", &["prolong", "linear.json"]);
    add("prolong_polar", &["prolong", "polar_affine.json"]);
    add("curvature_twisted", &["curvature", "twisted.json"]);
    add("curvature_polar", &["curvature", "polar_affine.json"]);
    add("curvature_const", &["curvature", "curvature_const.json"]);
    add("exchange_zero", &["exchange", "zero_order2.json"]);
    add("exchange_twisted", &["exchange", "twisted_order2.json"]);
    add("family_twisted_0.3", &["family", "twisted.json", "--k", "0.3"]);
    add("family_twisted_half", &["family", "twisted.json", "--k", "1/2"]);
    add("classify_zero", &["classify", "zero_order2.json"]);
    add("classify_twisted", &["classify", "twisted_order2.json"]);
    add("classify_wrong_kind", &["classify", "twisted.json"]);
    add("semiholonomy_semi", &["semiholonomy", "jet_semiholonomic.json"]);
    add("semiholonomy_hol", &["semiholonomy", "jet_holonomic.json"]);
    add("semiholonomy_non", &["semiholonomy", "jet_nonholonomic.json"]);
    add("frames_twisted", &["frames", "twisted.json"]);
    add("frames_polar_at", &["frames", "polar_affine.json", "--at", "2,0.3,0.5,-1.5"]);
    add("twofold_blocks", &["twofold", "twofold.json"]);
    add("twofold_linear", &["twofold", "twofold_linear.json"]);
    add("jacobian_valid", &["jacobian", "transform_valid.json"]);
    add("jacobian_invalid", &["jacobian", "transform_invalid.json"]);
    add("transport1_exp", &["transport", "1", "exp.json", "line.json", "--y0", "1", "--steps", "10"]);
    add("transport2_exp", &["transport", "2", "exp.json", "line.json", "--y0", "1", "--y0i", "1", "--steps", "10"]);
    add("transport_ode2_twisted", &["transport", "ode2", "twisted.json", "arc.json", "--y0", "0.5", "--steps", "8"]);
    add("transport1_linear", &["transport", "1", "linear.json", "arc.json", "--y0", "1,0", "--steps", "5"]);
    add("transport1_square", &["transport", "1", "curvature_const.json", "square_loop.json", "--y0", "1", "--steps", "2"]);
    add("holonomy_polar", &["holonomy", "polar_affine.json", "polar_loop.json", "--steps", "2000"]);
    add("holonomy_square", &["holonomy", "curvature_const.json", "square_loop.json", "--steps", "20"]);
    add("holonomy_basis", &["holonomy", "linear.json", "circle.json", "--steps", "100", "--basis", "1,1;0,2"]);
    add("holonomy_nonlinear", &["holonomy", "twisted.json", "circle.json", "--steps", "10"]);
    cases
}

/// Runs the binary in the data directory and renders exit status, stdout and stderr.
pub fn run_case(args: &[String]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_jetconn"))
        .args(["--seed", "0"])
        .args(args)
        .current_dir(data_dir())
        .output()
        .expect("binary runs");
    format!(
        "exit: {}\n--- stdout\n{}--- stderr\n{}",
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap()
    )
}
