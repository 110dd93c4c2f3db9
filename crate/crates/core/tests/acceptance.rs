//! Acceptance suite: one PASS/FAIL line per criterion. Run with
//! `cargo test --test acceptance`.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use ampforge::assertion_amplifier::{amplify_assertions, assertion_triples, AssertionConfig};
use ampforge::discovery::find_project_root;
use ampforge::engine::{amplify_suite, recompute_score, write_outcome, Config, Outcome, Selector};
use ampforge::input_amplifier::{replay, sort_candidates, AmplifiedCandidate};
use ampforge::mutation_engine::{mutant_timeout, run_against_mutant, MutantCache, MutantStatus};
use ampforge::runtime::{Harness, Subject};
use ampforge::suite_model::{parse_suite, parse_suite_file, recognize_assertions, AssertKind, AssertionTable, Lineage, Origin};
use common::*;

type Verdict = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

struct Run {
    dir: tempfile::TempDir,
    test_file: PathBuf,
    outcome: Outcome,
    seconds: f64,
}

fn run_fixture(h: &mut Harness, name: &str, seed: u64) -> Result<Run, String> {
    let dir = scratch(name);
    let test_file = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("test_"))
        .ok_or("fixture has no test file")?;
    let mut cfg = Config::new(&test_file);
    cfg.seed = seed;
    let t = Instant::now();
    let outcome = amplify_suite(&cfg, h).map_err(|e| format!("{name}: {e}"))?;
    Ok(Run { dir, test_file, outcome, seconds: t.elapsed().as_secs_f64() })
}

/// Writes the amplified suite beside the fixture and runs it with the
/// framework runner.
fn runs_green(run: &Run) -> Result<(), String> {
    let out = run.dir.path().join("test_amplified_output.py");
    write_outcome(&run.outcome, &out, &run.dir.path().join("report.json")).map_err(|e| e.to_string())?;
    let python = std::env::var("AMPFORGE_PYTHON").unwrap_or_else(|_| "python3".into());
    let r = Command::new(python)
        .args(["-m", "unittest", "-q", "test_amplified_output"])
        .current_dir(run.dir.path())
        .env("PYTHONDONTWRITEBYTECODE", "1")
        .output()
        .map_err(|e| e.to_string())?;
    let err = String::from_utf8_lossy(&r.stderr);
    check(r.status.success() && err.trim_end().ends_with("OK"), format!("runner failed:\n{err}"))
}

fn subject_of(run: &Run, class: &str, module_file: &str) -> Subject {
    let mut suite = run.outcome.suite.clone();
    suite.path = run.test_file.clone();
    let root = find_project_root(&run.test_file);
    Subject::new(suite, class, &root, vec![run.dir.path().join(module_file).canonicalize().unwrap()])
}

fn c1(h: &mut Harness, run: &Run) -> Verdict {
    let c = &run.outcome.report.classes["SmallFundTest"];
    check(run.seconds < 60.0, format!("took {:.1}s", run.seconds))?;
    check(c.amplified.killed_mutants > c.original.killed_mutants, "no new kills")?;
    check(c.amplified.covered_lines > c.original.covered_lines, "no new lines")?;
    // the `raise` of the negative-deposit branch is line 15
    let subject = subject_of(run, "SmallFundTest", "SmallFund.py");
    let kept: Vec<String> = c.selected.iter().map(|s| s.name.clone()).collect();
    let runs = h.run_tests(&subject.ctx, "SmallFundTest", &kept, true, 30.0).map_err(|e| e.to_string())?;
    let raisers: Vec<&String> = runs.iter().filter(|(_, r)| r.lines.iter().any(|(_, l)| *l == 15)).map(|(n, _)| n).collect();
    let originals = h.run_tests(&subject.ctx, "SmallFundTest", &["testDeposit".into()], true, 30.0).map_err(|e| e.to_string())?;
    check(!originals["testDeposit"].lines.iter().any(|(_, l)| *l == 15), "original already covers the raise")?;
    check(!raisers.is_empty(), "no kept method reaches the raise")?;
    Ok(format!(
        "{:.1}s, {} kept, lines {} -> {}, killed {} -> {}, raise reached by {}",
        run.seconds,
        kept.len(),
        c.original.covered_lines,
        c.amplified.covered_lines,
        c.original.killed_mutants,
        c.amplified.killed_mutants,
        raisers[0]
    ))
}

fn c2(h: &mut Harness) -> Verdict {
    let subject = smallfund();
    let cfg = AssertionConfig::default();
    let m = subject.test_class().test("testDeposit").unwrap();
    let a = amplify_assertions(h, &subject, m, &cfg).map_err(|e| e.to_string())?;
    let s = |x: &str| Some(x.to_string());
    let e = |k: AssertKind, x: &str, v: Option<String>| (k, x.to_string(), v);
    use AssertKind::*;
    // the assertion-amplified running example, written out by hand
    let mut want = vec![
        e(Equal, "self.b.get_transactions()", s("[10]")),
        e(False, "self.b.is_empty()", None),
        e(Equal, "self.b.owner", s("'Iwena Kroka'")),
        e(Equal, "self.b.get_balance()", s("10")),
        e(IsInstance, "self.b.get_self()", s("SmallFund")),
        e(Equal, "self.b.get_balance()", s("110")),
        e(Equal, "self.b.get_transactions()", s("[10, 100]")),
        e(False, "self.b.is_empty()", None),
        e(Equal, "self.b.owner", s("'Iwena Kroka'")),
        e(Equal, "self.b.get_transactions()", s("[10, 100, 100]")),
        e(False, "self.b.is_empty()", None),
        e(Equal, "self.b.owner", s("'Iwena Kroka'")),
        e(Equal, "self.b.get_balance()", s("210")),
    ];
    let mut got = assertion_triples(&a.method, &cfg.table);
    want.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    got.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    check(got == want, format!("got {got:?}"))?;
    Ok(format!("{} assertions, all triples match", got.len()))
}

fn c3(h: &mut Harness) -> Verdict {
    let subject = smallfund();
    let cfg = AssertionConfig::default();
    let variant = replay(&stripped_deposit(&subject), &running_example_log()).ok_or("log does not replay")?;
    let a = amplify_assertions(h, &subject, &variant, &cfg).map_err(|e| e.to_string())?;
    let n_orig = recognize_assertions(subject.test_class().test("testDeposit").unwrap(), &cfg.table).len();
    let c = AmplifiedCandidate::new(a.method, n_orig, &cfg.table, 0);
    check(c.modification_count == 7, format!("modification count {}", c.modification_count))?;
    Ok(format!(
        "{} assertions + {} transformations - {} original = {}",
        c.n_all_assertions, c.n_transformations, c.n_original_assertions, c.modification_count
    ))
}

fn c4(runs: &[&Run]) -> Verdict {
    for r in runs {
        runs_green(r).map_err(|e| format!("{}: {e}", r.test_file.display()))?;
    }
    let added: usize = runs.iter().flat_map(|r| r.outcome.report.classes.values()).map(|c| c.metrics.ma).sum();
    Ok(format!("{} suites green, {added} amplified methods", runs.len()))
}

fn c5(h: &mut Harness) -> Verdict {
    let mut emitted = 0;
    for seed in 0..20 {
        let run = run_fixture(h, "flaky", seed)?;
        let class = run.outcome.suite.class("SensorTest").ok_or("class missing")?;
        for m in class.tests().filter(|m| m.origin == Origin::Amplified) {
            for site in recognize_assertions(m, &AssertionTable::default()) {
                emitted += 1;
                let text = m.body[site.index].source();
                check(!text.contains("noise(") && !text.contains("read("), format!("seed {seed}: {text}"))?;
            }
        }
        if seed == 0 {
            runs_green(&run)?;
        }
    }
    Ok(format!("20 seeds, {emitted} emitted assertions, none on nondeterministic values"))
}

fn c6(h: &mut Harness, runs: &[(&Run, &str, &str)]) -> Verdict {
    let mut parts = Vec::new();
    for (run, class, module) in runs {
        let c = &run.outcome.report.classes[*class];
        let subject = subject_of(run, class, module);
        let files = subject.ctx.mut_files.clone();
        let root = find_project_root(&run.test_file);
        let naive = recompute_score(h, &subject, &files, &root, 3.0, 1).map_err(|e| e.to_string())?;
        check(naive.mutants <= 60, format!("{class}: {} mutants", naive.mutants))?;
        check(
            naive.killed_mutants == c.amplified.killed_mutants && naive.covered_lines == c.amplified.covered_lines,
            format!("{class}: tracked {:?} vs recomputed {:?}", c.amplified, naive),
        )?;
        parts.push(format!("{class} {}/{}", naive.killed_mutants, naive.mutants));
    }
    Ok(format!("tracked = recomputed ({})", parts.join(", ")))
}

fn c7(h: &mut Harness, first: &Run) -> Verdict {
    let t = first.outcome.report.config.max_pool;
    for c in first.outcome.report.classes.values() {
        for sizes in c.candidates.pool_sizes.values() {
            check(sizes.iter().all(|&s| s <= t), format!("pool sizes {sizes:?} exceed {t}"))?;
        }
    }
    let second = run_fixture(h, "smallfund", 0)?;
    let json = |o: &Outcome| serde_json::to_string_pretty(&o.report).unwrap();
    check(first.outcome.source == second.outcome.source, "amplified suites differ")?;
    check(json(&first.outcome) == json(&second.outcome), "reports differ")?;
    let sizes = &first.outcome.report.classes["SmallFundTest"].candidates.pool_sizes["testDeposit"];
    Ok(format!("pool sizes {sizes:?} <= {t}, two runs byte-identical"))
}

fn c8(h: &mut Harness) -> Verdict {
    let dir = scratch("tiebreak");
    let test_file = dir.path().join("test_fee.py");
    let root = find_project_root(&test_file);
    let module = dir.path().join("fee.py").canonicalize().unwrap();
    let suite = parse_suite_file(&test_file).map_err(|e| e.to_string())?;
    let subject = Subject::new(suite, "FeeTest", &root, vec![module.clone()]);
    let mut sel = Selector::baseline(h, subject.clone(), vec![module], &root, MutantCache::default(), 3.0, 30.0, 1)
        .map_err(|e| e.to_string())?;
    let live: Vec<_> = sel.mutants.values().filter(|m| m.status.is_live()).cloned().collect();
    check(live.len() == 1, format!("expected one live mutant, found {}", live.len()))?;

    let src = "import unittest\nfrom fee import fee\n\nclass C(unittest.TestCase):\n    def test_small(self):\n        self.assertEqual(fee(3), 7)\n\n    def test_large(self):\n        self.assertEqual(fee(3), 7)\n        self.assertEqual(fee(4), 9)\n        self.assertEqual(fee(5), 11)\n";
    let parsed = parse_suite(src, &test_file).map_err(|e| e.to_string())?;
    let class = parsed.class("C").unwrap();
    let table = AssertionTable::default();
    let mut cands = Vec::new();
    for (i, (name, count)) in [("test_large", 9), ("test_small", 5)].into_iter().enumerate() {
        let mut m = class.test(name).cloned().ok_or("candidate missing")?;
        m.origin = Origin::Amplified;
        m.lineage = Some(Lineage { ancestor: "test_positive".into(), transformations: Vec::new() });
        let mut c = AmplifiedCandidate::new(m, 1, &table, i);
        c.modification_count = count;
        cands.push(c);
    }
    // both candidates kill the live mutant on their own
    for c in &cands {
        let mut m = c.method.clone();
        m.name = "probe".into();
        let ctx = subject.ctx_with(std::slice::from_ref(&m));
        let st = run_against_mutant(h, &ctx, "FeeTest", &["probe".into()], &live[0], mutant_timeout(0.0, 3.0))
            .map_err(|e| e.to_string())?;
        check(st == MutantStatus::Killed, format!("candidate with count {} does not kill", c.modification_count))?;
    }
    sort_candidates(&mut cands);
    let kept = sel.select(h, &cands).map_err(|e| e.to_string())?;
    check(kept.len() == 1 && kept[0].modification_count == 5, format!("kept {kept:?}"))?;
    Ok(format!("kept the count-5 candidate ({}), count-9 discarded", kept[0].name))
}

fn c9(run: &Run) -> Verdict {
    let c = &run.outcome.report.classes["MeterTest"];
    let (ko, ka) = (c.original.killed_mutants, c.amplified.killed_mutants);
    check(ko == 10 && ka == 12, format!("killed {ko} -> {ka}"))?;
    let m = &c.metrics;
    let (mso, msa, msi) = (m.mso.ok_or("no MSO")?, m.msa.ok_or("no MSA")?, m.msi.ok_or("no MSI")?);
    check((msi - (msa - mso)).abs() < 1e-9, format!("MSI {msi} vs {msa} - {mso}"))?;
    let rmsi = m.rmsi.ok_or("no RMSI")?;
    check((rmsi - 20.0).abs() < 1e-9, format!("RMSI {rmsi}"))?;
    Ok(format!("killed 10 -> 12, MSO {mso:.1} MSA {msa:.1} MSI {msi:.1}, RMSI {rmsi:.1}%"))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let started = Instant::now();
    let mut h = Harness::start_default().expect("python3 is required");
    let mut results: BTreeMap<u32, (&str, Verdict)> = BTreeMap::new();

    let smallfund = run_fixture(&mut h, "smallfund", 0);
    let others: Vec<Result<Run, String>> = ["inventory", "meter", "tiebreak", "allkilled", "twomods"]
        .iter()
        .map(|f| run_fixture(&mut h, f, 0))
        .collect();
    let failed = |e: &String| Err(e.clone());

    results.insert(1, ("end-to-end running example", match &smallfund {
        Ok(r) => c1(&mut h, r),
        Err(e) => failed(e),
    }));
    results.insert(2, ("assertion amplification fidelity", c2(&mut h)));
    results.insert(3, ("modification count", c3(&mut h)));
    results.insert(4, ("green invariant", {
        let mut all: Vec<&Run> = Vec::new();
        let mut err = None;
        for r in std::iter::once(&smallfund).chain(others.iter()) {
            match r {
                Ok(r) => all.push(r),
                Err(e) => err = Some(e.clone()),
            }
        }
        match err {
            Some(e) => Err(e),
            None => c4(&all),
        }
    }));
    results.insert(5, ("flaky filtering", c5(&mut h)));
    results.insert(6, ("cache/oracle equivalence", match (&smallfund, &others[0]) {
        (Ok(a), Ok(b)) => c6(&mut h, &[(a, "SmallFundTest", "SmallFund.py"), (b, "InventoryTest", "inventory.py")]),
        (Err(e), _) | (_, Err(e)) => failed(e),
    }));
    results.insert(7, ("pruning bound and determinism", match &smallfund {
        Ok(r) => c7(&mut h, r),
        Err(e) => failed(e),
    }));
    results.insert(8, ("tie-breaking", c8(&mut h)));
    results.insert(9, ("metric arithmetic", match &others[1] {
        Ok(r) => c9(r),
        Err(e) => failed(e),
    }));

    let mut ok = true;
    for (n, (name, v)) in &results {
        match v {
            Ok(d) => println!("criterion {n} PASS  {name}: {d}"),
            Err(e) => {
                ok = false;
                println!("criterion {n} FAIL  {name}: {e}");
            }
        }
    }
    println!("acceptance finished in {:.1}s", started.elapsed().as_secs_f64());
    if !ok {
        std::process::exit(1);
    }
}
