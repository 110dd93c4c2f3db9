//! Scores the original tests: covered lines, the mutants placed on them
//! and which of those the tests kill.
//!
//!     cargo run --example mutants [-- FIXTURE]

use std::path::PathBuf;

use ampforge::discovery::{discover_module_under_test, find_project_root};
use ampforge::engine::Selector;
use ampforge::mutation_engine::MutantCache;
use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::parse_suite_file;

fn main() {
    let name = std::env::args().nth(1).unwrap_or_else(|| "inventory".into());
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(&name);
    let test_file = std::fs::read_dir(&dir)
        .expect("fixture exists")
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("test_"))
        .expect("fixture has a test file");
    let suite = parse_suite_file(&test_file).expect("test file parses");
    let root = find_project_root(&test_file);
    let mut harness = Harness::start_default().expect("python3 on PATH");

    for class in suite.classes() {
        let Ok(d) = discover_module_under_test(class, &test_file, &root, None) else {
            continue;
        };
        let files = d.module.source_files.clone();
        let subject = Subject::new(suite.clone(), &class.name, &root, files.clone());
        let sel = Selector::baseline(&mut harness, subject, files, &root, MutantCache::default(), 3.0, 30.0, 1)
            .expect("original tests pass");
        let r = sel.report();
        println!("{}: {} lines covered, {} of {} mutants killed", class.name, r.covered_lines, r.killed_mutants, r.mutants);
        for m in sel.mutants.values() {
            println!(
                "  {} line {:>3} {:<20} {:>4} -> {:<4} {:?}",
                m.id, m.line, m.operator, m.original_fragment, m.mutated_fragment, m.status
            );
        }
    }
}
