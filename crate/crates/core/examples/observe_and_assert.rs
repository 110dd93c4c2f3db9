//! Strips a test, observes it twice and writes assertions for every value
//! that was the same in both runs.
//!
//!     cargo run --example observe_and_assert

use std::path::PathBuf;

use ampforge::assertion_amplifier::{amplify_assertions, AssertionConfig};
use ampforge::python::expr_to_source;
use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::parse_suite_file;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/smallfund");
    let suite = parse_suite_file(&dir.join("test_smallfund.py")).expect("fixture parses");
    let subject = Subject::new(suite, "SmallFundTest", &dir, vec![dir.join("SmallFund.py")]);
    let mut harness = Harness::start_default().expect("python3 on PATH");

    let test = subject.test_class().test("testDeposit").expect("fixture test");
    let a = amplify_assertions(&mut harness, &subject, test, &AssertionConfig::default()).expect("observation succeeds");
    for o in a.observations.all() {
        let value = o.snapshot.to_expr().map(|e| expr_to_source(&e)).unwrap_or_else(|| o.snapshot.type_name());
        println!("statement {:>2} {:?} {} = {}", o.line, o.source, o.target, value);
    }
    println!();
    println!("{}", a.method.source());
}
