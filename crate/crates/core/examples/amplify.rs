//! The whole pipeline on one fixture: prints the amplified suite and the
//! report without writing anything.
//!
//!     cargo run --release --example amplify [-- FIXTURE SEED]

use std::path::PathBuf;

use ampforge::engine::{amplify_suite, Config};
use ampforge::runtime::Harness;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "smallfund".into());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(&name);
    let test_file = std::fs::read_dir(&dir)
        .expect("fixture exists")
        .map(|e| e.unwrap().path())
        .find(|p| {
            let f = p.file_name().unwrap().to_string_lossy().into_owned();
            f.starts_with("test_") && !f.contains("_amplified")
        })
        .expect("fixture has a test file");

    let mut cfg = Config::new(&test_file);
    cfg.seed = seed;
    let mut harness = Harness::start_default().expect("python3 on PATH");
    let out = amplify_suite(&cfg, &mut harness).expect("amplification runs");
    println!("{}", out.source);
    println!("{}", serde_json::to_string_pretty(&out.report).unwrap());
}
