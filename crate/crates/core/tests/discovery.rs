use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ampforge::discovery::{collect_project_imports, discover_module_under_test, find_project_root, DiscoveryError};
use ampforge::suite_model::parse_suite_file;

fn fixture(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(p)
}

fn names(test: &str, class: &str) -> Vec<String> {
    let path = fixture(test);
    let suite = parse_suite_file(&path).unwrap();
    let root = find_project_root(&path);
    collect_project_imports(suite.class(class).unwrap(), &path, &root).into_iter().map(|m| m.name).collect()
}

#[test]
fn project_root_is_nearest_marker() {
    assert_eq!(find_project_root(&fixture("smallfund/test_smallfund.py")), fixture("smallfund").canonicalize().unwrap());
}

#[test]
fn candidates() {
    assert_eq!(names("smallfund/test_smallfund.py", "SmallFundTest"), ["SmallFund"]);
    assert!(names("stdlib_only/test_paths.py", "PathTest").is_empty());
    assert_eq!(names("twomods/test_two.py", "CounterTest"), ["alpha", "beta"]);
}

#[test]
fn smallfund_usage_is_five() {
    let path = fixture("smallfund/test_smallfund.py");
    let suite = parse_suite_file(&path).unwrap();
    let d = discover_module_under_test(suite.class("SmallFundTest").unwrap(), &path, &find_project_root(&path), None).unwrap();
    assert_eq!(d.module.name, "SmallFund");
    assert_eq!(d.counts, BTreeMap::from([("SmallFund".to_string(), 5)]));
    assert_eq!(d.module.source_files, [fixture("smallfund/SmallFund.py").canonicalize().unwrap()]);
}

#[test]
fn most_used_module_wins() {
    let path = fixture("twomods/test_two.py");
    let suite = parse_suite_file(&path).unwrap();
    let d = discover_module_under_test(suite.class("CounterTest").unwrap(), &path, &find_project_root(&path), None).unwrap();
    assert_eq!(d.module.name, "beta");
    // alpha.double(2): one call, one name; Counter(): one call plus Counter, bump, reset
    assert_eq!(d.counts, BTreeMap::from([("alpha".to_string(), 2), ("beta".to_string(), 4)]));
}

#[test]
fn override_wins_and_failures_skip() {
    let path = fixture("twomods/test_two.py");
    let suite = parse_suite_file(&path).unwrap();
    let tc = suite.class("CounterTest").unwrap();
    let root = find_project_root(&path);
    assert_eq!(discover_module_under_test(tc, &path, &root, Some("alpha")).unwrap().module.name, "alpha");
    assert!(matches!(discover_module_under_test(tc, &path, &root, Some("json")), Err(DiscoveryError::Unresolved(_))));

    let path = fixture("tie/test_tie.py");
    let suite = parse_suite_file(&path).unwrap();
    let r = discover_module_under_test(suite.class("TieTest").unwrap(), &path, &find_project_root(&path), None);
    assert!(matches!(r, Err(DiscoveryError::AmbiguousTie(_))));

    let path = fixture("stdlib_only/test_paths.py");
    let suite = parse_suite_file(&path).unwrap();
    let r = discover_module_under_test(suite.class("PathTest").unwrap(), &path, &find_project_root(&path), None);
    assert_eq!(r.unwrap_err(), DiscoveryError::NoCandidate);
}
