//! Parses a unittest file and shows what the model sees: classes, tests,
//! recognized assertions and the stripped bodies.
//!
//!     cargo run --example parse_suite [-- path/to/test_file.py]

use std::path::PathBuf;

use ampforge::suite_model::{parse_suite_file, recognize_assertions, strip_assertions, AssertionTable};

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/smallfund/test_smallfund.py")
    });
    let suite = parse_suite_file(&path).expect("test file parses");
    let table = AssertionTable::default();
    for class in suite.classes() {
        println!("class {}", class.name);
        if let Some(setup) = class.setup() {
            println!("  setUp: {} statements", setup.body.len());
        }
        for t in class.tests() {
            let sites = recognize_assertions(t, &table);
            println!("  {} ({} statements, {} assertions)", t.name, t.body.len(), sites.len());
            for s in &sites {
                println!("    {:?} at statement {}", s.kind, s.index);
            }
            println!("  stripped:");
            println!("{}", strip_assertions(t, &table).source());
        }
    }
}
