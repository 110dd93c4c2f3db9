//! Records argument and variable types while a test runs, plus the
//! callables the input amplifier may add.
//!
//!     cargo run --example type_profile

use std::path::PathBuf;

use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::parse_suite_file;
use ampforge::type_profiler::profile;

fn main() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/smallfund");
    let suite = parse_suite_file(&dir.join("test_smallfund.py")).expect("fixture parses");
    let subject = Subject::new(suite, "SmallFundTest", &dir, vec![dir.join("SmallFund.py")]);
    let mut harness = Harness::start_default().expect("python3 on PATH");
    let p = profile(&mut harness, &subject, "testDeposit", 30.0).expect("profiling succeeds");
    println!("{}", serde_json::to_string_pretty(&p).unwrap());
}
