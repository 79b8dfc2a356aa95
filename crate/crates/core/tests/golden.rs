//! Golden outputs of the command line. Set `UPDATE_GOLDEN=1` to rewrite them.

mod common;

use common::{golden_cases, golden_dir, run_case};

#[test]
fn golden_outputs_match() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let mut mismatches = Vec::new();
    for (name, args) in golden_cases() {
        let actual = run_case(&args);
        let path = golden_dir().join(format!("{name}.txt"));
        if update {
            std::fs::write(&path, &actual).unwrap();
            continue;
        }
        let expected = std::fs::read_to_string(&path).unwrap_or_default();
        if expected != actual {
            mismatches.push(name);
        }
    }
    assert!(mismatches.is_empty(), "golden mismatches: {mismatches:?}");
}
