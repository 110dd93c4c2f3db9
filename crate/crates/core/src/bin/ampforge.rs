use std::path::PathBuf;
use std::process::ExitCode;

use ampforge::engine::{amplify_suite, default_output, default_report, write_outcome, Config};
use ampforge::input_amplifier::parse_amplifiers;
use ampforge::runtime::Harness;
use clap::Parser;

/// Amplifies a unittest test file: new test methods derived from the
/// existing ones, kept when they cover new lines or kill new mutants.
#[derive(Parser, Debug)]
#[command(name = "ampforge", version)]
struct Cli {
    /// Test file to amplify.
    #[arg(long)]
    test_file: PathBuf,
    /// Module under test for every class, as a dotted name.
    #[arg(long)]
    module_under_test: Option<String>,
    /// Input amplification iterations.
    #[arg(short = 'n', default_value_t = 3)]
    iterations: usize,
    /// Observation runs per test.
    #[arg(short = 'F', default_value_t = 2)]
    runs: usize,
    /// Candidates kept per iteration.
    #[arg(short = 'T', default_value_t = 200)]
    max_pool: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated amplifiers: literal, unify, remove_call, duplicate_call, add_call.
    #[arg(long, default_value = "literal,unify,remove_call,duplicate_call,add_call")]
    amplifiers: String,
    /// Mutant timeout as a multiple of the green run time (at least 1 s).
    #[arg(long, default_value_t = 3.0)]
    timeout_factor: f64,
    /// Amplified suite path [default: <test file stem>_amplified.py].
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report path [default: output path with .report.json].
    #[arg(long)]
    report: Option<PathBuf>,
    /// Mutant cache to read and update.
    #[arg(long)]
    cache_file: Option<PathBuf>,
    /// Include per-test observations in the report.
    #[arg(long)]
    dump_observations: bool,
    /// Include per-test type profiles in the report.
    #[arg(long)]
    dump_profile: bool,
    /// Project root [default: nearest directory with setup.py, pyproject.toml, setup.cfg or .git].
    #[arg(long)]
    project_root: Option<PathBuf>,
    /// Include wall-clock timings in the report (makes it non-reproducible).
    #[arg(long)]
    timings: bool,
    /// Wall-clock cap per class, in seconds.
    #[arg(long)]
    budget: Option<f64>,
    /// Parallel mutant runs [default: available cores, at most 8].
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let amplifiers = match parse_amplifiers(&cli.amplifiers) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let mut cfg = Config::new(&cli.test_file);
    cfg.project_root = cli.project_root;
    cfg.module_under_test = cli.module_under_test;
    cfg.runs = cli.runs;
    cfg.iterations = cli.iterations;
    cfg.max_pool = cli.max_pool;
    cfg.seed = cli.seed;
    cfg.amplifiers = amplifiers;
    cfg.timeout_factor = cli.timeout_factor;
    cfg.cache_file = cli.cache_file;
    cfg.budget = cli.budget;
    cfg.timings = cli.timings;
    cfg.dump_observations = cli.dump_observations;
    cfg.dump_profile = cli.dump_profile;
    if let Some(j) = cli.jobs {
        cfg.parallel = j.max(1);
    }
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    let mut harness = match Harness::start_default() {
        Ok(h) => h,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match amplify_suite(&cfg, &mut harness) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let output = cli.output.unwrap_or_else(|| default_output(&cli.test_file));
    let report = cli.report.unwrap_or_else(|| default_report(&output));
    if let Err(e) = write_outcome(&outcome, &output, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    for (name, c) in &outcome.report.classes {
        match &c.reason {
            Some(r) if c.status == "skipped" => println!("{name}: skipped ({r})"),
            _ => println!(
                "{name}: +{} tests, lines {} -> {}, killed {} -> {} of {}",
                c.metrics.ma,
                c.original.covered_lines,
                c.amplified.covered_lines,
                c.original.killed_mutants,
                c.amplified.killed_mutants,
                c.amplified.mutants
            ),
        }
    }
    println!("wrote {} and {}", output.display(), report.display());
    ExitCode::SUCCESS
}
