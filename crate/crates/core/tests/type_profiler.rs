use std::path::{Path, PathBuf};

use ampforge::observer::Snapshot;
use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::parse_suite_file;
use ampforge::type_profiler::profile;

fn fixture(p: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(p)
}

#[test]
fn smallfund_profile() {
    let suite = parse_suite_file(&fixture("smallfund/test_smallfund.py")).unwrap();
    let subject = Subject::new(suite, "SmallFundTest", &fixture("smallfund"), vec![fixture("smallfund/SmallFund.py")]);
    let mut h = Harness::start_default().unwrap();
    let p = profile(&mut h, &subject, "testDeposit", 30.0).unwrap();
    println!("{}", serde_json::to_string_pretty(&p).unwrap());
    assert_eq!(p.param_types("SmallFund.SmallFund.deposit", 0), ["builtins.int"]);
    assert_eq!(p.param_types("SmallFund.SmallFund.__init__", 0), ["builtins.str"]);
    let ints = &p.value_pool["builtins.int"];
    assert!(ints.contains(&Snapshot::Int { v: "10".into() }));
    assert!(ints.contains(&Snapshot::Int { v: "100".into() }));
    let methods: Vec<(&str, usize)> =
        p.methods_of("SmallFund.SmallFund").map(|c| (c.name.as_str(), c.arity)).collect();
    for want in [("deposit", 1), ("get_balance", 0), ("is_empty", 0), ("get_transactions", 0), ("get_self", 0)] {
        assert!(methods.contains(&want), "{want:?} missing from {methods:?}");
    }
    assert_eq!(p.receivers.get("self.b").map(String::as_str), Some("SmallFund.SmallFund"));
}
