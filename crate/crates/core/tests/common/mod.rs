#![allow(dead_code)]

use std::path::{Path, PathBuf};

use ampforge::python::parse_expr;
use ampforge::python::Stmt;
use ampforge::runtime::Subject;
use ampforge::suite_model::{parse_suite_file, strip_assertions, AssertionTable, TestMethod, Transformation};

pub fn fixture(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(p)
}

/// Copies a fixture directory into a fresh temporary directory.
pub fn scratch(name: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for e in std::fs::read_dir(fixture(name)).unwrap() {
        let p = e.unwrap().path();
        if p.is_file() {
            std::fs::copy(&p, dir.path().join(p.file_name().unwrap())).unwrap();
        }
    }
    dir
}

pub fn smallfund() -> Subject {
    let suite = parse_suite_file(&fixture("smallfund/test_smallfund.py")).unwrap();
    Subject::new(suite, "SmallFundTest", &fixture("smallfund"), vec![fixture("smallfund/SmallFund.py")])
}

/// The three transformations shown for the running example: the first
/// deposit removed, a negative deposit added in front, the second
/// `deposit(100)` removed.
pub fn running_example_log() -> Vec<Transformation> {
    let add = Stmt::Expr(parse_expr("self.b.deposit(-45485)").unwrap());
    vec![
        Transformation::RemoveCall { stmt: 0 },
        Transformation::AddCall { position: 0, statement: add },
        Transformation::RemoveCall { stmt: 4 },
    ]
}

pub fn stripped_deposit(subject: &Subject) -> TestMethod {
    strip_assertions(subject.test_class().test("testDeposit").unwrap(), &AssertionTable::default())
}
