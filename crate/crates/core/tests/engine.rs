mod common;

use std::path::Path;
use std::process::Command;

use ampforge::discovery::find_project_root;
use ampforge::engine::{amplify_suite, recompute_score, Config};
use ampforge::input_amplifier::Amplifier;
use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::Member;
use common::*;

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_ampforge")).args(args).output().unwrap()
}

#[test]
fn all_killed_adds_nothing() {
    let dir = scratch("allkilled");
    let mut h = Harness::start_default().unwrap();
    let out = amplify_suite(&Config::new(dir.path().join("test_calc.py")), &mut h).unwrap();
    let c = &out.report.classes["CalcTest"];
    assert_eq!(c.status, "amplified");
    assert_eq!(c.metrics.ma, 0);
    assert_eq!(c.metrics.msa, c.metrics.mso);
    assert_eq!(c.metrics.msi, Some(0.0));
}

#[test]
fn no_module_candidate_skips_the_class() {
    let dir = scratch("stdlib_only");
    let mut h = Harness::start_default().unwrap();
    let out = amplify_suite(&Config::new(dir.path().join("test_paths.py")), &mut h).unwrap();
    for c in out.report.classes.values() {
        assert_eq!(c.status, "skipped");
        assert!(c.selected.is_empty());
    }
}

#[test]
fn no_amplifiers_keeps_only_assertion_variants() {
    let dir = scratch("smallfund");
    let mut h = Harness::start_default().unwrap();
    let mut cfg = Config::new(dir.path().join("test_smallfund.py"));
    cfg.amplifiers = Vec::<Amplifier>::new();
    let out = amplify_suite(&cfg, &mut h).unwrap();
    let c = &out.report.classes["SmallFundTest"];
    assert!(c.selected.iter().all(|s| s.transformations == 0));
    assert!(c.candidates.pool_sizes.values().all(|p| p.iter().all(|&n| n == 0)));
}

/// Dropping any kept method lowers the recomputed score.
fn assert_minimal(fixture_name: &str, test: &str, class_name: &str, module: &str) {
    let dir = scratch(fixture_name);
    let test_file = dir.path().join(test);
    let mut h = Harness::start_default().unwrap();
    let out = amplify_suite(&Config::new(&test_file), &mut h).unwrap();
    let c = &out.report.classes[class_name];
    assert!(!c.selected.is_empty());
    let root = find_project_root(&test_file);
    let files = vec![dir.path().join(module).canonicalize().unwrap()];
    let mut score = |suite| {
        let subject = Subject::new(suite, class_name, &root, files.clone());
        recompute_score(&mut h, &subject, &files, &root, 3.0, 1).unwrap()
    };
    let full = score(out.suite.clone());
    assert_eq!(full.killed_mutants, c.amplified.killed_mutants);
    assert_eq!(full.covered_lines, c.amplified.covered_lines);
    for kept in &c.selected {
        let mut suite = out.suite.clone();
        let class = suite.class_mut(class_name).unwrap();
        class.members.retain(|m| !matches!(m, Member::Test(t) if t.name == kept.name));
        let less = score(suite);
        assert!(
            less.covered_lines < full.covered_lines || less.killed_mutants < full.killed_mutants,
            "{} is redundant",
            kept.name
        );
    }
}

#[test]
fn kept_methods_are_each_needed() {
    assert_minimal("smallfund", "test_smallfund.py", "SmallFundTest", "SmallFund.py");
    assert_minimal("inventory", "test_inventory.py", "InventoryTest", "inventory.py");
}

#[test]
fn cache_file_does_not_change_the_result() {
    let dir = scratch("tiebreak");
    let test_file = dir.path().join("test_fee.py");
    let cache = dir.path().join("cache.json");
    let mut h = Harness::start_default().unwrap();
    let mut cfg = Config::new(&test_file);
    cfg.cache_file = Some(cache.clone());
    let first = amplify_suite(&cfg, &mut h).unwrap();
    assert!(cache.exists());
    let second = amplify_suite(&cfg, &mut h).unwrap();
    assert_eq!(first.source, second.source);
    assert_eq!(
        serde_json::to_string(&first.report).unwrap(),
        serde_json::to_string(&second.report).unwrap()
    );
}

#[test]
fn cli_writes_suite_and_report() {
    let dir = scratch("allkilled");
    let test_file = dir.path().join("test_calc.py");
    let out = cli(&["--test-file", test_file.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("test_calc_amplified.py").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("test_calc_amplified.report.json")).unwrap())
            .unwrap();
    assert_eq!(report["classes"]["CalcTest"]["status"], "amplified");
}

#[test]
fn cli_usage_errors_exit_one() {
    let calc = fixture("allkilled/test_calc.py");
    let calc = calc.to_str().unwrap();
    assert_eq!(cli(&["--test-file", calc, "--amplifiers", "literal,bogus"]).status.code(), Some(1));
    assert_eq!(cli(&["--bogus-flag"]).status.code(), Some(1));
    assert_eq!(cli(&["--test-file", "/nonexistent/test_x.py"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("test_broken.py");
    std::fs::write(&broken, "import unittest\nclass T(unittest.TestCase:\n    pass\n").unwrap();
    assert_eq!(cli(&["--test-file", broken.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn cli_missing_interpreter_exits_two() {
    let calc = fixture("allkilled/test_calc.py");
    let out = Command::new(env!("CARGO_BIN_EXE_ampforge"))
        .args(["--test-file", calc.to_str().unwrap()])
        .env("AMPFORGE_PYTHON", "/nonexistent/python")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!Path::new(&fixture("allkilled/test_calc_amplified.py")).exists());
}
