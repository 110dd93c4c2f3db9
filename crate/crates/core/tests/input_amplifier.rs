mod common;

use std::time::Instant;

use ampforge::assertion_amplifier::{amplify_assertions, assertion_triples, AssertionConfig};
use ampforge::input_amplifier::{amplify_inputs, generate, replay, AmplifiedCandidate, Amplifier, InputConfig};
use ampforge::python::{Constant, Expr, Stmt};
use ampforge::runtime::Harness;
use ampforge::suite_model::{recognize_assertions, strip_assertions, AssertKind, Transformation};
use ampforge::type_profiler::profile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use common::*;

#[test]
fn generation_respects_pool_bound_and_replays() {
    let subject = smallfund();
    let mut h = Harness::start_default().unwrap();
    let p = profile(&mut h, &subject, "testDeposit", 30.0).unwrap();
    let table = AssertionConfig::default().table;
    let stripped = strip_assertions(subject.test_class().test("testDeposit").unwrap(), &table);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let g = generate(&stripped, &Amplifier::ALL, 3, 200, &p, &mut rng);
    assert_eq!(g.pool_sizes.len(), 3);
    assert!(g.pool_sizes.iter().all(|&s| s <= 200));
    assert!(g.variants.len() <= 600);
    for v in &g.variants {
        let log = &v.lineage.as_ref().unwrap().transformations;
        assert!(!log.is_empty());
        assert_eq!(replay(&stripped, log).unwrap().body, v.body);
    }
    // the literal operators on `deposit(10)`
    let first: Vec<String> = g
        .variants
        .iter()
        .filter_map(|v| match v.lineage.as_ref().unwrap().transformations.as_slice() {
            [Transformation::Literal { stmt: 0, from: Constant::Int(10), to, .. }] => Some(format!("{to:?}")),
            _ => None,
        })
        .collect();
    for want in ["Int(0)", "Int(11)", "Int(9)", "Int(20)", "Int(5)", "Int(100)"] {
        assert!(first.iter().any(|s| s == want), "{want} missing");
    }
    let mut again = ChaCha8Rng::seed_from_u64(42);
    let g2 = generate(&stripped, &Amplifier::ALL, 3, 200, &p, &mut again);
    assert_eq!(serde_json::to_string(&g).unwrap(), serde_json::to_string(&g2).unwrap());
}

#[test]
fn no_amplifiers_no_candidates() {
    let subject = smallfund();
    let stripped = subject.test_class().test("testDeposit").unwrap().clone();
    let g = generate(&stripped, &[], 3, 200, &Default::default(), &mut ChaCha8Rng::seed_from_u64(1));
    assert!(g.variants.is_empty());
}

#[test]
fn amplified_candidates_are_sorted_and_counted() {
    let subject = smallfund();
    let mut h = Harness::start_default().unwrap();
    let p = profile(&mut h, &subject, "testDeposit", 30.0).unwrap();
    let acfg = AssertionConfig::default();
    let test = subject.test_class().test("testDeposit").unwrap().clone();
    let n_orig = recognize_assertions(&test, &acfg.table).len();
    let cfg = InputConfig { iterations: 2, max_pool: 40, ..Default::default() };
    let t = Instant::now();
    let r = amplify_inputs(&mut h, &subject, &test, n_orig, &cfg, &acfg, &p, &mut ChaCha8Rng::seed_from_u64(5));
    println!("{} candidates, {} dropped in {:?}", r.candidates.len(), r.dropped.len(), t.elapsed());
    assert!(!r.candidates.is_empty());
    for w in r.candidates.windows(2) {
        assert!(w[0].modification_count <= w[1].modification_count);
    }
    for c in &r.candidates {
        assert_eq!(c.modification_count, c.n_all_assertions as i64 + c.n_transformations as i64 - n_orig as i64);
    }
    // some candidate deposits a negative amount and expects the exception
    let negative = r.candidates.iter().any(|c| {
        c.method.body.iter().any(|s| matches!(&s.node, Stmt::With { body, .. } if matches!(body.as_slice(),
            [Stmt::Expr(Expr::Call { args, .. })] if matches!(args.first().map(|a| a.value()), Some(Expr::Const(Constant::Int(v))) if *v < 0))))
    });
    assert!(negative);
}

#[test]
fn running_example_candidate() {
    let subject = smallfund();
    let mut h = Harness::start_default().unwrap();
    let cfg = AssertionConfig::default();
    let original = subject.test_class().test("testDeposit").unwrap();
    let variant = replay(&stripped_deposit(&subject), &running_example_log()).unwrap();
    let a = amplify_assertions(&mut h, &subject, &variant, &cfg).unwrap();
    println!("{}", a.method.source());
    let s = |x: &str| x.to_string();
    let expected = vec![
        (AssertKind::Raises, s("self.b.deposit(-45485)"), Some(s("Exception"))),
        (AssertKind::Equal, s("self.b.get_balance()"), Some(s("0"))),
        (AssertKind::IsInstance, s("self.b.get_self()"), Some(s("SmallFund"))),
        (AssertKind::Equal, s("self.b.get_transactions()"), Some(s("[100]"))),
        (AssertKind::False, s("self.b.is_empty()"), None),
        (AssertKind::Equal, s("self.b.owner"), Some(s("'Iwena Kroka'"))),
        (AssertKind::Equal, s("self.b.get_balance()"), Some(s("100"))),
    ];
    assert_eq!(assertion_triples(&a.method, &cfg.table), expected);
    let n_orig = recognize_assertions(original, &cfg.table).len();
    let c = AmplifiedCandidate::new(a.method, n_orig, &cfg.table, 0);
    assert_eq!((c.n_transformations, c.n_all_assertions, c.n_original_assertions), (3, 7, 3));
    assert_eq!(c.modification_count, 7);
}
