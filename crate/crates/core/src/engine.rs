//! The amplification loop over a test file: per class, discover the module
//! under test, score the original tests, then amplify each test and keep
//! the variants that add covered lines or kill new mutants.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::assertion_amplifier::{amplify_assertions, AmplifyError, AssertionConfig};
use crate::discovery::{discover_module_under_test, find_project_root};
use crate::input_amplifier::{amplify_inputs, AmplifiedCandidate, Amplifier, InputConfig};
use crate::mutation_engine::{
    generate_mutants, mutant_timeout, run_against_mutants, Mutant, MutantCache, MutantStatus, Phase,
    DEFAULT_TIMEOUT_FACTOR,
};
use crate::observer::ObservationSet;
use crate::runtime::{Harness, HarnessError, Subject, TestStatus};
use crate::suite_model::{emit_source, parse_suite, recognize_assertions, SuiteError, TestMethod, TestSuite};
use crate::type_profiler::{profile, TypeProfile};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Parse(#[from] SuiteError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl EngineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            EngineError::Usage(_) | EngineError::Parse(_) | EngineError::Io { .. } => 1,
            EngineError::Harness(_) => 2,
        }
    }
}

/// A harness error that ends the run rather than one operation.
fn fatal(e: &HarnessError) -> bool {
    matches!(e, HarnessError::Spawn { .. } | HarnessError::Io(_) | HarnessError::Protocol(_))
}

#[derive(Debug, Clone)]
pub struct Config {
    pub test_file: PathBuf,
    pub project_root: Option<PathBuf>,
    pub module_under_test: Option<String>,
    /// Observation runs (F).
    pub runs: usize,
    /// Input amplification iterations (n).
    pub iterations: usize,
    /// Pool bound (T).
    pub max_pool: usize,
    pub seed: u64,
    pub amplifiers: Vec<Amplifier>,
    pub timeout_factor: f64,
    /// Timeout of observation, profiling and green runs, in seconds.
    pub timeout: f64,
    pub parallel: usize,
    pub cache_file: Option<PathBuf>,
    /// Wall-clock cap per class, in seconds.
    pub budget: Option<f64>,
    pub timings: bool,
    pub dump_observations: bool,
    pub dump_profile: bool,
}

impl Config {
    pub fn new(test_file: impl Into<PathBuf>) -> Config {
        Config {
            test_file: test_file.into(),
            project_root: None,
            module_under_test: None,
            runs: 2,
            iterations: 3,
            max_pool: 200,
            seed: 0,
            amplifiers: Amplifier::ALL.to_vec(),
            timeout_factor: DEFAULT_TIMEOUT_FACTOR,
            timeout: 30.0,
            parallel: std::thread::available_parallelism().map(|n| n.get().min(8)).unwrap_or(1),
            cache_file: None,
            budget: None,
            timings: false,
            dump_observations: false,
            dump_profile: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::Usage(m.to_string()));
        if self.runs < 1 {
            return bad("-F must be at least 1");
        }
        if self.iterations < 1 {
            return bad("-n must be at least 1");
        }
        if self.max_pool < 1 {
            return bad("-T must be at least 1");
        }
        if !(self.timeout_factor > 0.0) {
            return bad("--timeout-factor must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Score {
    pub covered_lines: usize,
    pub killed_mutants: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectedTest {
    pub name: String,
    pub ancestor: String,
    pub new_lines: usize,
    pub new_kills: Vec<String>,
    pub modification_count: i64,
    pub transformations: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ScoreReport {
    pub covered_lines: usize,
    pub killed_mutants: usize,
    /// Mutants counted in the score (timeouts and invalid ones excluded).
    pub mutants: usize,
    pub timeouts: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Metrics {
    /// Mutation score of the original class, percent.
    pub mso: Option<f64>,
    pub msa: Option<f64>,
    pub msi: Option<f64>,
    /// Relative increase in killed mutants, percent; undefined when the
    /// original class kills none.
    pub rmsi: Option<f64>,
    pub mo: usize,
    pub ma: usize,
}

impl Metrics {
    pub fn compute(original: &ScoreReport, amplified: &ScoreReport, mo: usize, ma: usize) -> Metrics {
        let ms = |s: &ScoreReport| (s.mutants > 0).then(|| 100.0 * s.killed_mutants as f64 / s.mutants as f64);
        let (mso, msa) = (ms(original), ms(amplified));
        let rmsi = (original.killed_mutants > 0).then(|| {
            100.0 * (amplified.killed_mutants as f64 - original.killed_mutants as f64) / original.killed_mutants as f64
        });
        Metrics { mso, msa, msi: mso.zip(msa).map(|(o, a)| a - o), rmsi, mo, ma }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CandidateStats {
    pub generated: usize,
    pub dropped: usize,
    pub evaluated: usize,
    /// Pool size after each iteration, per amplified test.
    pub pool_sizes: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ClassReport {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub module_under_test: Option<String>,
    pub usage_counts: BTreeMap<String, usize>,
    pub original: ScoreReport,
    pub amplified: ScoreReport,
    pub metrics: Metrics,
    pub selected: Vec<SelectedTest>,
    /// Methods selected at first, then dropped as redundant.
    pub pruned: usize,
    pub candidates: CandidateStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observations: Option<BTreeMap<String, ObservationSet>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profiles: Option<BTreeMap<String, TypeProfile>>,
}

impl ClassReport {
    fn skipped(reason: impl Into<String>) -> ClassReport {
        ClassReport { status: "skipped".into(), reason: Some(reason.into()), ..Default::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub module_under_test: Option<String>,
    pub runs: usize,
    pub iterations: usize,
    pub max_pool: usize,
    pub seed: u64,
    pub amplifiers: Vec<String>,
    pub timeout_factor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub test_file: String,
    pub config: ConfigEcho,
    pub classes: BTreeMap<String, ClassReport>,
}

pub struct Outcome {
    pub suite: TestSuite,
    pub source: String,
    pub report: Report,
}

// ---------------------------------------------------------------- selection

/// Selection state of one class: accumulated coverage, live mutants and
/// the score.
pub struct Selector {
    pub subject: Subject,
    pub files: Vec<PathBuf>,
    pub project_root: PathBuf,
    pub covered: BTreeMap<PathBuf, BTreeSet<usize>>,
    pub mutants: BTreeMap<String, Mutant>,
    pub cache: MutantCache,
    pub score: Score,
    pub selected: Vec<SelectedTest>,
    /// Green-run seconds per test of the class.
    pub seconds: BTreeMap<String, f64>,
    pub timeout_factor: f64,
    pub timeout: f64,
    pub parallel: usize,
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("original test {0} does not pass: {1}")]
    NotGreen(String, String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Selector {
    /// Scores the tests of `subject` from scratch: coverage, mutants on the
    /// covered lines and a run of every test against each of them. Cached
    /// kills and timeouts are taken over without running.
    #[allow(clippy::too_many_arguments)]
    pub fn baseline(
        harness: &mut Harness,
        subject: Subject,
        files: Vec<PathBuf>,
        project_root: &Path,
        cache: MutantCache,
        timeout_factor: f64,
        timeout: f64,
        parallel: usize,
    ) -> Result<Selector, SelectError> {
        let tests: Vec<String> = subject.test_class().tests().map(|t| t.name.clone()).collect();
        let runs = harness.run_tests(&subject.ctx, &subject.class, &tests, true, timeout)?;
        let mut s = Selector {
            subject,
            files,
            project_root: project_root.to_path_buf(),
            covered: BTreeMap::new(),
            mutants: BTreeMap::new(),
            cache,
            score: Score::default(),
            selected: Vec::new(),
            seconds: BTreeMap::new(),
            timeout_factor,
            timeout,
            parallel,
        };
        for (name, r) in &runs {
            if r.status == TestStatus::Fail {
                return Err(SelectError::NotGreen(name.clone(), r.detail.clone().unwrap_or_default()));
            }
            s.seconds.insert(name.clone(), r.seconds);
            for (f, l) in &r.lines {
                if s.files.contains(f) {
                    s.covered.entry(f.clone()).or_default().insert(*l);
                }
            }
        }
        let covered = s.covered.clone();
        s.add_mutants(harness, &covered, Phase::Baseline)?;
        s.refresh_score();
        Ok(s)
    }

    fn refresh_score(&mut self) {
        self.score = Score {
            covered_lines: self.covered.values().map(BTreeSet::len).sum(),
            killed_mutants: self.mutants.values().filter(|m| m.status == MutantStatus::Killed).count(),
        };
    }

    pub fn report(&self) -> ScoreReport {
        let counted = |m: &&Mutant| !matches!(m.status, MutantStatus::Timeout | MutantStatus::Discarded);
        ScoreReport {
            covered_lines: self.score.covered_lines,
            killed_mutants: self.score.killed_mutants,
            mutants: self.mutants.values().filter(counted).count(),
            timeouts: self.mutants.values().filter(|m| m.status == MutantStatus::Timeout).count(),
        }
    }

    fn suite_tests(&self) -> Vec<String> {
        self.subject.test_class().tests().map(|t| t.name.clone()).collect()
    }

    fn suite_timeout(&self) -> f64 {
        mutant_timeout(self.seconds.values().sum(), self.timeout_factor)
    }

    fn record(&mut self, results: &BTreeMap<String, MutantStatus>, phase: Phase) -> Vec<String> {
        let mut killed = Vec::new();
        for (id, st) in results {
            self.cache.record(id, *st, phase);
            if let Some(m) = self.mutants.get_mut(id) {
                if m.status.is_live() {
                    m.status = *st;
                    if *st == MutantStatus::Killed {
                        killed.push(id.clone());
                    }
                }
            }
        }
        killed
    }

    /// Generates mutants on `lines` and runs the current tests against the
    /// ones the cache cannot settle.
    fn add_mutants(
        &mut self,
        harness: &mut Harness,
        lines: &BTreeMap<PathBuf, BTreeSet<usize>>,
        phase: Phase,
    ) -> Result<(), SelectError> {
        let mut fresh = Vec::new();
        for mut m in generate_mutants(&self.files, &self.project_root, lines)? {
            if self.mutants.contains_key(&m.id) {
                continue;
            }
            match self.cache.status(&m.id) {
                Some(st @ (MutantStatus::Killed | MutantStatus::Timeout | MutantStatus::Discarded)) => m.status = st,
                _ => fresh.push(m.id.clone()),
            }
            self.mutants.insert(m.id.clone(), m);
        }
        if fresh.is_empty() {
            return Ok(());
        }
        let targets: Vec<&Mutant> = fresh.iter().map(|id| &self.mutants[id]).collect();
        let results = run_against_mutants(
            harness,
            &self.subject.ctx,
            &self.subject.class,
            &self.suite_tests(),
            &targets,
            self.suite_timeout(),
            self.parallel,
        )?;
        self.record(&results, phase);
        Ok(())
    }

    /// Evaluates one candidate against the current state and keeps it when
    /// it covers new lines or kills a live mutant.
    pub fn consider(&mut self, harness: &mut Harness, candidate: &AmplifiedCandidate) -> Result<Option<SelectedTest>, SelectError> {
        let ancestor = crate::assertion_amplifier::ancestor_of(&candidate.method);
        let mut method = candidate.method.clone();
        method.name = self.subject.test_class().fresh_name(&ancestor);
        let ctx = self.subject.ctx_with(std::slice::from_ref(&method));
        let runs = harness.run_tests(&ctx, &self.subject.class, std::slice::from_ref(&method.name), true, self.timeout)?;
        let Some(run) = runs.get(&method.name).filter(|r| r.status == TestStatus::Pass) else {
            log::debug!("candidate of {ancestor} is not green under selection");
            return Ok(None);
        };
        let mut mine: BTreeMap<PathBuf, BTreeSet<usize>> = BTreeMap::new();
        for (f, l) in &run.lines {
            if self.files.contains(f) {
                mine.entry(f.clone()).or_default().insert(*l);
            }
        }
        let mut new_lines: BTreeMap<PathBuf, BTreeSet<usize>> = BTreeMap::new();
        for (f, ls) in &mine {
            let have = self.covered.get(f);
            let extra: BTreeSet<usize> = ls.iter().filter(|l| !have.is_some_and(|h| h.contains(l))).copied().collect();
            if !extra.is_empty() {
                new_lines.insert(f.clone(), extra);
            }
        }
        let n_new: usize = new_lines.values().map(BTreeSet::len).sum();
        if n_new > 0 {
            for (f, ls) in &new_lines {
                self.covered.entry(f.clone()).or_default().extend(ls);
            }
            self.add_mutants(harness, &new_lines, Phase::Amplification)?;
        }
        // only mutants on lines the candidate executes can change its outcome
        let targets: Vec<&Mutant> = self
            .mutants
            .values()
            .filter(|m| m.status.is_live() && mine.get(&m.target_file).is_some_and(|ls| ls.contains(&m.line)))
            .collect();
        let new_kills = if targets.is_empty() {
            Vec::new()
        } else {
            let results = run_against_mutants(
                harness,
                &ctx,
                &self.subject.class,
                std::slice::from_ref(&method.name),
                &targets,
                mutant_timeout(run.seconds, self.timeout_factor),
                self.parallel,
            )?;
            self.record(&results, Phase::Amplification)
        };
        self.refresh_score();
        if n_new == 0 && new_kills.is_empty() {
            return Ok(None);
        }
        let seconds = run.seconds;
        let name = self.subject.add_test(method);
        self.seconds.insert(name.clone(), seconds);
        let sel = SelectedTest {
            name,
            ancestor,
            new_lines: n_new,
            new_kills,
            modification_count: candidate.modification_count,
            transformations: candidate.n_transformations,
        };
        self.selected.push(sel.clone());
        Ok(Some(sel))
    }

    /// Considers candidates in order; returns the kept ones.
    pub fn select(&mut self, harness: &mut Harness, candidates: &[AmplifiedCandidate]) -> Result<Vec<SelectedTest>, SelectError> {
        let mut kept = Vec::new();
        for c in candidates {
            if let Some(s) = self.consider(harness, c)? {
                kept.push(s);
            }
        }
        Ok(kept)
    }

    /// Drops kept methods made redundant by later ones, latest first. A
    /// method goes when the suite without it still reaches the same score.
    /// Returns the dropped names.
    pub fn prune(&mut self, harness: &mut Harness) -> Result<Vec<String>, SelectError> {
        let mut dropped = Vec::new();
        for i in (0..self.selected.len()).rev() {
            let name = self.selected[i].name.clone();
            let without = self.subject.without_test(&name);
            let s = Selector::baseline(
                harness,
                without.clone(),
                self.files.clone(),
                &self.project_root,
                MutantCache::default(),
                self.timeout_factor,
                self.timeout,
                self.parallel,
            )?;
            if s.score == self.score {
                log::debug!("{name} is subsumed by later methods");
                self.subject = without;
                self.selected.remove(i);
                dropped.push(name);
            }
        }
        dropped.reverse();
        if !dropped.is_empty() {
            self.reattribute(harness)?;
        }
        Ok(dropped)
    }

    /// Replays the kept methods, in order, on a fresh baseline so that the
    /// per-method attribution reflects the final suite.
    fn reattribute(&mut self, harness: &mut Harness) -> Result<(), SelectError> {
        let kept = std::mem::take(&mut self.selected);
        let mut base = self.subject.clone();
        for s in &kept {
            base = base.without_test(&s.name);
        }
        let mut fresh = Selector::baseline(
            harness,
            base,
            self.files.clone(),
            &self.project_root,
            MutantCache::default(),
            self.timeout_factor,
            self.timeout,
            self.parallel,
        )?;
        for (i, s) in kept.iter().enumerate() {
            let method = self.subject.test_class().test(&s.name).expect("kept method in class").clone();
            let c = AmplifiedCandidate {
                method,
                transformations: Vec::new(),
                n_transformations: s.transformations,
                n_all_assertions: 0,
                n_original_assertions: 0,
                modification_count: s.modification_count,
                ordinal: i,
            };
            if fresh.consider(harness, &c)?.is_none() {
                log::warn!("{} no longer improves the score on replay", s.name);
            }
        }
        if fresh.score != self.score {
            log::warn!("replayed score {:?} differs from {:?}", fresh.score, self.score);
        }
        fresh.cache = std::mem::take(&mut self.cache);
        *self = fresh;
        Ok(())
    }

    pub fn into_cache(self) -> MutantCache {
        self.cache
    }
}

/// Score of a suite recomputed without any cache: fresh coverage and every
/// test run against every mutant of the covered lines.
pub fn recompute_score(
    harness: &mut Harness,
    subject: &Subject,
    files: &[PathBuf],
    project_root: &Path,
    timeout_factor: f64,
    parallel: usize,
) -> Result<ScoreReport, SelectError> {
    let s = Selector::baseline(
        harness,
        subject.clone(),
        files.to_vec(),
        project_root,
        MutantCache::default(),
        timeout_factor,
        30.0,
        parallel,
    )?;
    Ok(s.report())
}

// ---------------------------------------------------------------- main loop

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EngineError + '_ {
    move |source| EngineError::Io { path: path.to_path_buf(), source }
}

/// Runs the whole pipeline on `cfg.test_file` and returns the amplified
/// suite and the report. Nothing is written.
pub fn amplify_suite(cfg: &Config, harness: &mut Harness) -> Result<Outcome, EngineError> {
    cfg.validate()?;
    if cfg.amplifiers.is_empty() {
        log::info!("no amplifiers enabled; only assertion amplification runs");
    }
    let source = std::fs::read_to_string(&cfg.test_file).map_err(io_err(&cfg.test_file))?;
    let suite = parse_suite(&source, &cfg.test_file)?;
    let root = match &cfg.project_root {
        Some(r) => std::fs::canonicalize(r).map_err(io_err(r))?,
        None => find_project_root(&cfg.test_file),
    };
    let acfg = AssertionConfig { runs: cfg.runs, timeout: cfg.timeout, ..Default::default() };
    let icfg = InputConfig { amplifiers: cfg.amplifiers.clone(), iterations: cfg.iterations, max_pool: cfg.max_pool };

    let class_names: Vec<String> = suite.classes().map(|c| c.name.clone()).collect();
    let mut discovered = BTreeMap::new();
    for name in &class_names {
        let tc = suite.class(name).expect("listed class");
        discovered.insert(name.clone(), discover_module_under_test(tc, &cfg.test_file, &root, cfg.module_under_test.as_deref()));
    }

    let mut fingerprint_parts: Vec<Vec<u8>> = vec![source.clone().into_bytes()];
    let files: BTreeSet<&PathBuf> = discovered.values().flatten().flat_map(|d| &d.module.source_files).collect();
    for f in files {
        fingerprint_parts.push(f.to_string_lossy().into_owned().into_bytes());
        fingerprint_parts.push(std::fs::read(f).map_err(io_err(f))?);
    }
    let parts: Vec<&[u8]> = fingerprint_parts.iter().map(Vec::as_slice).collect();
    let fingerprint = MutantCache::fingerprint_of(&parts);
    let mut cache = match &cfg.cache_file {
        Some(p) => MutantCache::load(p, &fingerprint),
        None => MutantCache::new(fingerprint),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = suite.clone();
    let mut classes = BTreeMap::new();
    for name in &class_names {
        let report = match &discovered[name] {
            Err(e) => ClassReport::skipped(format!("module under test: {e}")),
            Ok(d) => {
                let subject = Subject::new(suite.clone(), name, &root, d.module.source_files.clone());
                let started = Instant::now();
                let r = amplify_class(harness, cfg, &acfg, &icfg, subject, d.module.source_files.clone(), &root, &mut cache, &mut rng);
                match r {
                    Ok((mut report, tc)) => {
                        report.module_under_test = Some(d.module.name.clone());
                        report.usage_counts = d.counts.clone();
                        if let Some(t) = report.timings.as_mut() {
                            t.insert("total".into(), started.elapsed().as_secs_f64());
                        }
                        if let Some(c) = out.class_mut(name) {
                            *c = tc;
                        }
                        report
                    }
                    Err(SelectError::Harness(e)) if fatal(&e) => return Err(e.into()),
                    Err(e) => {
                        let mut r = ClassReport::skipped(e.to_string());
                        r.module_under_test = Some(d.module.name.clone());
                        r.usage_counts = d.counts.clone();
                        r
                    }
                }
            }
        };
        classes.insert(name.clone(), report);
    }
    if let Some(p) = &cfg.cache_file {
        cache.save(p).map_err(io_err(p))?;
    }
    let report = Report {
        tool: "ampforge".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        test_file: cfg.test_file.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        config: ConfigEcho {
            module_under_test: cfg.module_under_test.clone(),
            runs: cfg.runs,
            iterations: cfg.iterations,
            max_pool: cfg.max_pool,
            seed: cfg.seed,
            amplifiers: cfg.amplifiers.iter().map(|a| a.name().to_string()).collect(),
            timeout_factor: cfg.timeout_factor,
        },
        classes,
    };
    let source = emit_source(&out);
    Ok(Outcome { suite: out, source, report })
}

#[allow(clippy::too_many_arguments)]
fn amplify_class(
    harness: &mut Harness,
    cfg: &Config,
    acfg: &AssertionConfig,
    icfg: &InputConfig,
    subject: Subject,
    files: Vec<PathBuf>,
    root: &Path,
    cache: &mut MutantCache,
    rng: &mut ChaCha8Rng,
) -> Result<(ClassReport, crate::suite_model::TestClass), SelectError> {
    let mut timings: BTreeMap<String, f64> = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |key: &str, timings: &mut BTreeMap<String, f64>| {
        *timings.entry(key.to_string()).or_default() += clock.elapsed().as_secs_f64();
        clock = Instant::now();
    };
    let originals: Vec<TestMethod> = subject.test_class().tests().cloned().collect();
    let mut sel = Selector::baseline(
        harness,
        subject,
        files,
        root,
        std::mem::take(cache),
        cfg.timeout_factor,
        cfg.timeout,
        cfg.parallel,
    )?;
    lap("baseline", &mut timings);
    let original = sel.report();
    let mut report = ClassReport { status: "amplified".into(), original, ..Default::default() };
    let mut observations = BTreeMap::new();
    let mut profiles = BTreeMap::new();
    let started = Instant::now();
    let over_budget = |started: &Instant| cfg.budget.is_some_and(|b| started.elapsed().as_secs_f64() > b);

    let result: Result<(), SelectError> = (|| {
        for t in &originals {
            if over_budget(&started) {
                report.reason = Some("class budget exhausted".into());
                break;
            }
            let n_orig = recognize_assertions(t, &acfg.table).len();
            let a_test = match amplify_assertions(harness, &sel.subject, t, acfg) {
                Ok(a) => {
                    if cfg.dump_observations {
                        observations.insert(t.name.clone(), a.observations.clone());
                    }
                    let c = AmplifiedCandidate::new(a.method.clone(), n_orig, &acfg.table, 0);
                    report.candidates.evaluated += 1;
                    sel.consider(harness, &c)?;
                    Some(a.method)
                }
                Err(AmplifyError::Harness(e)) if fatal(&e) => return Err(e.into()),
                Err(e) => {
                    log::info!("assertion amplification of {} failed: {e}", t.name);
                    None
                }
            };
            lap("assertion_amplification", &mut timings);
            let tp = match profile(harness, &sel.subject, &t.name, cfg.timeout) {
                Ok(p) => p,
                Err(crate::type_profiler::ProfileError::Harness(e)) if fatal(&e) => return Err(e.into()),
                Err(e) => {
                    log::info!("profiling {} failed: {e}", t.name);
                    TypeProfile::default()
                }
            };
            if cfg.dump_profile {
                profiles.insert(t.name.clone(), tp.clone());
            }
            lap("profiling", &mut timings);
            let base = a_test.as_ref().unwrap_or(t);
            let ir = amplify_inputs(harness, &sel.subject, base, n_orig, icfg, acfg, &tp, rng);
            report.candidates.generated += ir.candidates.len() + ir.dropped.len();
            report.candidates.dropped += ir.dropped.len();
            report.candidates.pool_sizes.insert(t.name.clone(), ir.pool_sizes.clone());
            lap("input_amplification", &mut timings);
            for c in &ir.candidates {
                if over_budget(&started) {
                    report.reason = Some("class budget exhausted".into());
                    break;
                }
                report.candidates.evaluated += 1;
                sel.consider(harness, c)?;
            }
            lap("selection", &mut timings);
        }
        Ok(())
    })();
    result?;
    report.pruned = sel.prune(harness)?.len();
    lap("pruning", &mut timings);
    report.amplified = sel.report();
    report.selected = sel.selected.clone();
    report.metrics = Metrics::compute(&report.original, &report.amplified, originals.len(), report.selected.len());
    if cfg.timings {
        report.timings = Some(timings);
    }
    if cfg.dump_observations {
        report.observations = Some(observations);
    }
    if cfg.dump_profile {
        report.profiles = Some(profiles);
    }
    let tc = sel.subject.test_class().clone();
    *cache = sel.into_cache();
    Ok((report, tc))
}

/// Default output path: `<stem>_amplified.py` beside the test file.
pub fn default_output(test_file: &Path) -> PathBuf {
    let stem = test_file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "tests".into());
    test_file.with_file_name(format!("{stem}_amplified.py"))
}

/// Default report path: the output path with a `.report.json` suffix.
pub fn default_report(output: &Path) -> PathBuf {
    output.with_extension("report.json")
}

/// Writes the amplified suite and the report.
pub fn write_outcome(outcome: &Outcome, output: &Path, report: &Path) -> Result<(), EngineError> {
    std::fs::write(output, &outcome.source).map_err(io_err(output))?;
    let json = serde_json::to_string_pretty(&outcome.report).expect("report serializes");
    std::fs::write(report, json + "\n").map_err(io_err(report))?;
    Ok(())
}
