//! Picks the module under test for each class by counting how often the
//! tests use each imported project module.
//!
//!     cargo run --example discover_module [-- path/to/test_file.py]

use std::path::PathBuf;

use ampforge::discovery::{discover_module_under_test, find_project_root};
use ampforge::suite_model::parse_suite_file;

fn main() {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/twomods/test_two.py")
    });
    let suite = parse_suite_file(&path).expect("test file parses");
    let root = find_project_root(&path);
    println!("project root: {}", root.display());
    for class in suite.classes() {
        match discover_module_under_test(class, &path, &root, None) {
            Ok(d) => {
                println!("{}: {}", class.name, d.module.name);
                for (module, n) in &d.counts {
                    println!("  {module}: {n}");
                }
            }
            Err(e) => println!("{}: {e}", class.name),
        }
    }
}
