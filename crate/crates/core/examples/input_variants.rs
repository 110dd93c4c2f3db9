//! Generates input variants of a stripped test with a fixed seed and
//! prints a few of them with their transformation logs.
//!
//!     cargo run --example input_variants [-- SEED]

use std::path::PathBuf;

use ampforge::input_amplifier::{generate, Amplifier};
use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::{parse_suite_file, strip_assertions, AssertionTable};
use ampforge::type_profiler::profile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/smallfund");
    let suite = parse_suite_file(&dir.join("test_smallfund.py")).expect("fixture parses");
    let subject = Subject::new(suite, "SmallFundTest", &dir, vec![dir.join("SmallFund.py")]);
    let mut harness = Harness::start_default().expect("python3 on PATH");

    let p = profile(&mut harness, &subject, "testDeposit", 30.0).expect("profiling succeeds");
    let stripped = strip_assertions(subject.test_class().test("testDeposit").unwrap(), &AssertionTable::default());
    let g = generate(&stripped, &Amplifier::ALL, 3, 200, &p, &mut ChaCha8Rng::seed_from_u64(seed));
    println!("{} variants, pool sizes {:?}", g.variants.len(), g.pool_sizes);
    for v in g.variants.iter().step_by((g.variants.len() / 4).max(1)).take(4) {
        println!();
        for t in &v.lineage.as_ref().unwrap().transformations {
            println!("# {t:?}");
        }
        println!("{}", v.source());
    }
}
