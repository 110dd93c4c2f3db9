use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use ampforge::engine::{Metrics, ScoreReport};
use ampforge::input_amplifier::{
    generate, literal_values, modification_count, replay, sort_candidates, AmplifiedCandidate, Amplifier,
};
use ampforge::mutation_engine::{mutants_of_source, MutantCache, MutantStatus, Phase};
use ampforge::observer::{filter_stable, Observation, ObservationSet, ObservationSource, Snapshot};
use ampforge::python::{expr_to_source, parse_expr, Constant, Expr};
use ampforge::suite_model::{parse_suite, AssertionTable, TestMethod};
use ampforge::type_profiler::{Callable, TypeProfile};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SUITE: &str = "\
import unittest
from box import Box


class BoxTest(unittest.TestCase):
    def setUp(self):
        self.b = Box('lid')

    def test_put(self):
        self.b.put(3)
        self.b.put(-7)
        n = self.b.size()
        self.b.label('red', True)
";

fn method() -> TestMethod {
    let suite = parse_suite(SUITE, Path::new("test_box.py")).unwrap();
    suite.class("BoxTest").unwrap().test("test_put").unwrap().clone()
}

fn profile() -> TypeProfile {
    let mut p = TypeProfile::default();
    p.receivers.insert("self.b".into(), "box.Box".into());
    p.arg_types.insert("box.Box.put".into(), BTreeMap::from([(0, BTreeSet::from(["builtins.int".to_string()]))]));
    for (name, arity) in [("put", 1), ("size", 0)] {
        p.callables.insert(Callable {
            owner: Some("box.Box".into()),
            name: name.into(),
            qualname: format!("box.Box.{name}"),
            arity,
            expr: None,
        });
    }
    p.value_pool.insert("builtins.int".into(), vec![Snapshot::Int { v: "3".into() }]);
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pool_bound_replay_and_determinism(seed in any::<u64>(), n in 1usize..4, t in 1usize..25) {
        let m = method();
        let p = profile();
        let g = generate(&m, &Amplifier::ALL, n, t, &p, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(g.pool_sizes.iter().all(|&s| s <= t));
        prop_assert!(g.variants.len() <= n * t);
        for v in &g.variants {
            let log = &v.lineage.as_ref().unwrap().transformations;
            prop_assert!(!log.is_empty());
            prop_assert!(log.len() <= n);
            prop_assert_eq!(&replay(&m, log).unwrap().body, &v.body);
            prop_assert_ne!(&v.body, &m.body);
        }
        let again = generate(&m, &Amplifier::ALL, n, t, &p, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(serde_json::to_string(&g).unwrap(), serde_json::to_string(&again).unwrap());
    }

    #[test]
    fn single_round_variants_differ_by_one_transformation(seed in any::<u64>()) {
        let m = method();
        let g = generate(&m, &Amplifier::ALL, 1, 10_000, &profile(), &mut ChaCha8Rng::seed_from_u64(seed));
        for v in &g.variants {
            prop_assert_eq!(v.lineage.as_ref().unwrap().transformations.len(), 1);
        }
    }

    #[test]
    fn integer_operators(v in -1_000_000i128..1_000_000) {
        let got: Vec<Constant> = literal_values(&Constant::Int(v), &mut ChaCha8Rng::seed_from_u64(0))
            .into_iter().map(|(_, c)| c).collect();
        // floor division, as the subject language does it
        let half = if v < 0 && v % 2 != 0 { v / 2 - 1 } else { v / 2 };
        let mut want = Vec::new();
        for x in [0, v + 1, v - 1, v * 2, half] {
            if x != v && !want.contains(&Constant::Int(x)) {
                want.push(Constant::Int(x));
            }
        }
        prop_assert_eq!(got, want);
    }

    #[test]
    fn string_operators(s in "[a-zA-Z0-9 ]{1,24}", seed in any::<u64>()) {
        let got = literal_values(&Constant::Str(s.clone()), &mut ChaCha8Rng::seed_from_u64(seed));
        let n = s.chars().count();
        for (_, c) in &got {
            let Constant::Str(x) = c else { panic!("string operator produced {c:?}") };
            prop_assert_ne!(x, &s);
            let ok = *x == format!("{s}{s}") || x.is_empty() || (x.chars().count() == n / 2 && s.contains(x.as_str()));
            prop_assert!(ok, "unexpected {x:?} from {s:?}");
        }
    }

    #[test]
    fn literals_round_trip(v in any::<i64>(), s in "\\PC{0,16}", f in -1e12f64..1e12) {
        for c in [Constant::Int(v as i128), Constant::Str(s.clone()), Constant::Float(f)] {
            let src = expr_to_source(&Expr::Const(c.clone()));
            let back = parse_expr(&src).unwrap();
            let folded = match back {
                Expr::UnaryOp { operand, .. } => match *operand {
                    Expr::Const(Constant::Int(i)) => Expr::Const(Constant::Int(-i)),
                    Expr::Const(Constant::Float(x)) => Expr::Const(Constant::Float(-x)),
                    other => other,
                },
                other => other,
            };
            prop_assert_eq!(folded, Expr::Const(c));
        }
    }

    #[test]
    fn sorting_is_an_ordered_permutation(counts in proptest::collection::vec((0usize..6, 0usize..4), 0..30)) {
        let table = AssertionTable::default();
        let mut cs: Vec<AmplifiedCandidate> = counts.iter().enumerate().map(|(i, (a, t))| {
            let mut c = AmplifiedCandidate::new(method(), 2, &table, i);
            c.n_all_assertions = *a;
            c.n_transformations = *t;
            c.modification_count = modification_count(*a, *t, 2);
            c
        }).collect();
        sort_candidates(&mut cs);
        let mut ords: Vec<usize> = cs.iter().map(|c| c.ordinal).collect();
        ords.sort_unstable();
        prop_assert_eq!(ords, (0..counts.len()).collect::<Vec<_>>());
        for w in cs.windows(2) {
            prop_assert!(w[0].modification_count <= w[1].modification_count);
        }
    }

    #[test]
    fn mutants_change_one_covered_site(lines in proptest::collection::btree_set(1usize..12, 0..12)) {
        let src = "class A:\n    def f(self, a, b):\n        if a >= b and b != 0:\n            return a * b - 1\n        x = a + b\n        x += 1\n        return x / 2 == True\n\n    def g(self):\n        return self.f(1, 2) < 3 or False\n";
        let ms = mutants_of_source(Path::new("a.py"), "a.py", src, &lines);
        let again = mutants_of_source(Path::new("a.py"), "a.py", src, &lines);
        prop_assert_eq!(&ms, &again);
        let ids: BTreeSet<&str> = ms.iter().map(|m| m.id.as_str()).collect();
        prop_assert_eq!(ids.len(), ms.len());
        for m in &ms {
            prop_assert!(lines.contains(&m.line));
            prop_assert_ne!(&m.original_fragment, &m.mutated_fragment);
            let out = m.apply(src);
            prop_assert_eq!(&out[..m.span.0], &src[..m.span.0]);
            prop_assert_eq!(&out[m.span.0 + m.mutated_fragment.len()..], &src[m.span.1..]);
        }
    }

    #[test]
    fn kills_stay_killed(ops in proptest::collection::vec((0usize..4, 0usize..4), 0..40)) {
        let statuses = [MutantStatus::Killed, MutantStatus::Survived, MutantStatus::Timeout, MutantStatus::Unknown];
        let mut c = MutantCache::new("x".into());
        let mut killed = BTreeSet::new();
        for (id, st) in ops {
            c.record(&id.to_string(), statuses[st], Phase::Amplification);
            if statuses[st] == MutantStatus::Killed {
                killed.insert(id);
            }
            for k in &killed {
                prop_assert_eq!(c.status(&k.to_string()), Some(MutantStatus::Killed));
            }
        }
    }

    #[test]
    fn metric_identities(ko in 0usize..50, extra in 0usize..50, mo in 1usize..60, more in 0usize..60) {
        let total_o = mo.max(ko);
        let o = ScoreReport { covered_lines: 1, killed_mutants: ko, mutants: total_o, timeouts: 0 };
        let a = ScoreReport { covered_lines: 1, killed_mutants: ko + extra, mutants: total_o + extra + more, timeouts: 0 };
        let m = Metrics::compute(&o, &a, 1, 1);
        prop_assert!((m.msi.unwrap() - (m.msa.unwrap() - m.mso.unwrap())).abs() < 1e-9);
        match m.rmsi {
            Some(r) => prop_assert!((r - 100.0 * extra as f64 / ko as f64).abs() < 1e-9),
            None => prop_assert_eq!(ko, 0),
        }
    }

    #[test]
    fn stable_filter_keeps_exactly_agreeing_values(a in proptest::collection::vec(0i64..3, 6), b in proptest::collection::vec(0i64..3, 6)) {
        let set = |vals: &[i64]| {
            let mut s = ObservationSet::default();
            for (i, v) in vals.iter().enumerate() {
                s.lines.entry(i / 2).or_default().push(Observation {
                    line: i / 2,
                    source: ObservationSource::ReceiverState,
                    target: format!("self.x.m{i}()"),
                    snapshot: Snapshot::Int { v: v.to_string() },
                });
            }
            s
        };
        let kept = filter_stable(vec![set(&a), set(&b)]).unwrap();
        let kept: BTreeSet<String> = kept.all().map(|o| o.target.clone()).collect();
        let want: BTreeSet<String> = (0..6).filter(|&i| a[i] == b[i]).map(|i| format!("self.x.m{i}()")).collect();
        prop_assert_eq!(kept, want);
    }
}
