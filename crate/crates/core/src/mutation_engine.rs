//! First-order mutants of the module under test on covered lines, their
//! execution, and the kill cache.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::python::token::{tokenize, TokKind, Token};
use crate::runtime::{Context, Harness, HarnessError, MutantSource};

pub const MIN_TIMEOUT: f64 = 1.0;
pub const DEFAULT_TIMEOUT_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutantStatus {
    Unknown,
    Killed,
    Survived,
    Timeout,
    Discarded,
}

impl MutantStatus {
    /// Still worth running tests against.
    pub fn is_live(self) -> bool {
        matches!(self, MutantStatus::Unknown | MutantStatus::Survived)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mutant {
    pub id: String,
    pub target_file: PathBuf,
    pub line: usize,
    pub operator: String,
    pub original_fragment: String,
    pub mutated_fragment: String,
    pub status: MutantStatus,
    /// Byte range of the original fragment in the file.
    pub span: (usize, usize),
}

impl Mutant {
    /// The mutated file contents, given the original contents.
    pub fn apply(&self, original: &str) -> String {
        format!("{}{}{}", &original[..self.span.0], self.mutated_fragment, &original[self.span.1..])
    }
}

/// (operator, replacement) for a token, or `None`.
fn replacement(tok: &Token, prev: Option<&Token>) -> Option<(&'static str, &'static str)> {
    // binary position: after an operand
    let binary = prev.is_some_and(|p| match p.kind {
        TokKind::Name => !is_keyword_like(&p.text),
        TokKind::Number | TokKind::Str => true,
        TokKind::Op => matches!(p.text.as_str(), ")" | "]" | "}"),
        _ => false,
    });
    let r = match (tok.kind, tok.text.as_str()) {
        (TokKind::Op, "+") => ("arithmetic", "-"),
        (TokKind::Op, "-") => ("arithmetic", "+"),
        (TokKind::Op, "*") if binary => ("arithmetic", "//"),
        (TokKind::Op, "//") => ("arithmetic", "*"),
        (TokKind::Op, "/") => ("arithmetic", "*"),
        (TokKind::Op, "==") => ("comparison", "!="),
        (TokKind::Op, "!=") => ("comparison", "=="),
        (TokKind::Op, "<") => ("comparison", ">="),
        (TokKind::Op, ">=") => ("comparison", "<"),
        (TokKind::Op, ">") => ("comparison", "<="),
        (TokKind::Op, "<=") => ("comparison", ">"),
        (TokKind::Name, "True") => ("boolean_literal", "False"),
        (TokKind::Name, "False") => ("boolean_literal", "True"),
        (TokKind::Op, "+=") => ("augmented_assignment", "-="),
        (TokKind::Op, "-=") => ("augmented_assignment", "+="),
        (TokKind::Op, "*=") => ("augmented_assignment", "//="),
        (TokKind::Op, "//=") => ("augmented_assignment", "*="),
        (TokKind::Op, "/=") => ("augmented_assignment", "*="),
        (TokKind::Name, "and") => ("boolean_operator", "or"),
        (TokKind::Name, "or") => ("boolean_operator", "and"),
        _ => return None,
    };
    Some(r)
}

fn is_keyword_like(s: &str) -> bool {
    matches!(
        s,
        "and" | "or" | "not" | "in" | "is" | "if" | "else" | "elif" | "return" | "yield" | "lambda" | "await"
            | "assert" | "del" | "for" | "while" | "with" | "as" | "import" | "from" | "raise" | "print"
    )
}

fn mutant_id(file_key: &str, line: usize, operator: &str, ordinal: usize) -> String {
    let digest = Sha256::digest(format!("{file_key}\0{line}\0{operator}\0{ordinal}").as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Byte offset of every line start (1-based lines at index line-1).
fn line_starts(src: &str) -> Vec<usize> {
    std::iter::once(0).chain(src.match_indices('\n').map(|(i, _)| i + 1)).collect()
}

/// Mutants of one file restricted to `covered` lines. `file_key` names the
/// file stably in ids (a path relative to the project root).
pub fn mutants_of_source(path: &Path, file_key: &str, source: &str, covered: &BTreeSet<usize>) -> Vec<Mutant> {
    if covered.is_empty() {
        return Vec::new();
    }
    let Ok(tokens) = tokenize(source) else { return Vec::new() };
    let starts = line_starts(source);
    let mut ordinals: BTreeMap<(usize, &str), usize> = BTreeMap::new();
    let mut out = Vec::new();
    for (i, tok) in tokens.iter().enumerate() {
        if !covered.contains(&tok.line) {
            continue;
        }
        let prev = i.checked_sub(1).map(|j| &tokens[j]);
        let Some((operator, to)) = replacement(tok, prev) else { continue };
        let Some(&ls) = starts.get(tok.line - 1) else { continue };
        let start = ls + source[ls..].char_indices().nth(tok.col).map(|(b, _)| b).unwrap_or(0);
        let end = start + tok.text.len();
        if source.get(start..end) != Some(tok.text.as_str()) {
            continue;
        }
        let ordinal = ordinals.entry((tok.line, operator)).or_default();
        out.push(Mutant {
            id: mutant_id(file_key, tok.line, operator, *ordinal),
            target_file: path.to_path_buf(),
            line: tok.line,
            operator: operator.to_string(),
            original_fragment: tok.text.clone(),
            mutated_fragment: to.to_string(),
            status: MutantStatus::Unknown,
            span: (start, end),
        });
        *ordinal += 1;
    }
    out
}

/// Mutants of the module files on the given covered lines, file by file.
pub fn generate_mutants(
    files: &[PathBuf],
    project_root: &Path,
    covered: &BTreeMap<PathBuf, BTreeSet<usize>>,
) -> std::io::Result<Vec<Mutant>> {
    let mut out = Vec::new();
    for f in files {
        let Some(lines) = covered.get(f) else { continue };
        let source = std::fs::read_to_string(f)?;
        let key = f.strip_prefix(project_root).unwrap_or(f).to_string_lossy().replace('\\', "/");
        out.extend(mutants_of_source(f, &key, &source, lines));
    }
    Ok(out)
}

/// Per-mutant timeout from the duration of the green run.
pub fn mutant_timeout(baseline_seconds: f64, factor: f64) -> f64 {
    (factor * baseline_seconds).max(MIN_TIMEOUT)
}

/// Runs `tests` of `class` against each mutant in isolated children.
/// Nothing is written to disk; the patched source is served on import.
pub fn run_against_mutants(
    harness: &mut Harness,
    ctx: &Context,
    class: &str,
    tests: &[String],
    mutants: &[&Mutant],
    timeout: f64,
    parallel: usize,
) -> Result<BTreeMap<String, MutantStatus>, HarnessError> {
    if tests.is_empty() {
        return Ok(mutants.iter().map(|m| (m.id.clone(), MutantStatus::Survived)).collect());
    }
    let mut originals: BTreeMap<&Path, String> = BTreeMap::new();
    for m in mutants {
        if !originals.contains_key(m.target_file.as_path()) {
            originals.insert(&m.target_file, std::fs::read_to_string(&m.target_file)?);
        }
    }
    let sources: Vec<String> = mutants.iter().map(|m| m.apply(&originals[m.target_file.as_path()])).collect();
    let payload: Vec<MutantSource<'_>> = mutants
        .iter()
        .zip(&sources)
        .map(|(m, s)| MutantSource { id: &m.id, path: &m.target_file, source: s })
        .collect();
    let raw = harness.run_mutants(ctx, class, tests, &payload, timeout, parallel)?;
    Ok(mutants
        .iter()
        .map(|m| {
            let status = match raw.get(&m.id).map(String::as_str) {
                Some("killed") => MutantStatus::Killed,
                Some("survived") => MutantStatus::Survived,
                Some("timeout") => MutantStatus::Timeout,
                _ => MutantStatus::Discarded,
            };
            (m.id.clone(), status)
        })
        .collect())
}

pub fn run_against_mutant(
    harness: &mut Harness,
    ctx: &Context,
    class: &str,
    tests: &[String],
    mutant: &Mutant,
    timeout: f64,
) -> Result<MutantStatus, HarnessError> {
    let r = run_against_mutants(harness, ctx, class, tests, &[mutant], timeout, 1)?;
    Ok(r.get(&mutant.id).copied().unwrap_or(MutantStatus::Discarded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Baseline,
    Amplification,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub status: MutantStatus,
    pub phase: Phase,
}

/// Kill/survive ledger. Killed and timed-out mutants are never run again.
/// A persisted cache is reused only for the same module and test sources,
/// and only its baseline entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MutantCache {
    pub fingerprint: String,
    pub entries: BTreeMap<String, CacheEntry>,
    /// class → (covered lines, killed mutants)
    pub scores: BTreeMap<String, (usize, usize)>,
}

impl MutantCache {
    pub fn new(fingerprint: String) -> Self {
        MutantCache { fingerprint, ..Default::default() }
    }

    /// Fingerprint of everything a cached status depends on.
    pub fn fingerprint_of(parts: &[&[u8]]) -> String {
        let mut h = Sha256::new();
        for p in parts {
            h.update((p.len() as u64).to_le_bytes());
            h.update(p);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Loads `path` if it exists and matches `fingerprint`.
    pub fn load(path: &Path, fingerprint: &str) -> MutantCache {
        let loaded = std::fs::read_to_string(path).ok().and_then(|s| serde_json::from_str::<MutantCache>(&s).ok());
        match loaded {
            Some(mut c) if c.fingerprint == fingerprint => {
                c.entries.retain(|_, e| e.phase == Phase::Baseline);
                c.scores.clear();
                c
            }
            _ => MutantCache::new(fingerprint.to_string()),
        }
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(path, json + "\n")
    }

    pub fn status(&self, id: &str) -> Option<MutantStatus> {
        self.entries.get(id).map(|e| e.status)
    }

    /// Records a result. A kill is permanent.
    pub fn record(&mut self, id: &str, status: MutantStatus, phase: Phase) {
        if self.status(id) == Some(MutantStatus::Killed) {
            return;
        }
        self.entries.insert(id.to_string(), CacheEntry { status, phase });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lines(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn operator_table() {
        let src = "x = a + b * c\nif a >= 0 and not b:\n    y = -a\nz = f(*args)\nflag = True\nn //= 2\n";
        let ms = mutants_of_source(Path::new("m.py"), "m.py", src, &lines(&[1, 2, 3, 4, 5, 6]));
        let got: Vec<(usize, &str, &str)> =
            ms.iter().map(|m| (m.line, m.original_fragment.as_str(), m.mutated_fragment.as_str())).collect();
        assert_eq!(
            got,
            [
                (1, "+", "-"),
                (1, "*", "//"),
                (2, ">=", "<"),
                (2, "and", "or"),
                (3, "-", "+"),
                (5, "True", "False"),
                (6, "//=", "*="),
            ]
        );
        for m in &ms {
            let out = m.apply(src);
            assert_ne!(out, src);
            assert_eq!(out.lines().count(), src.lines().count());
        }
    }

    #[test]
    fn only_covered_lines() {
        let src = "a = 1 + 2\nb = 3 - 4\n";
        assert!(mutants_of_source(Path::new("m.py"), "m.py", src, &BTreeSet::new()).is_empty());
        let ms = mutants_of_source(Path::new("m.py"), "m.py", src, &lines(&[2]));
        assert_eq!(ms.len(), 1);
        assert_eq!(ms[0].line, 2);
    }

    #[test]
    fn ids_are_stable_and_distinct() {
        let src = "a = b + c + d\n";
        let x = mutants_of_source(Path::new("m.py"), "m.py", src, &lines(&[1]));
        let y = mutants_of_source(Path::new("m.py"), "m.py", src, &lines(&[1]));
        assert_eq!(x, y);
        assert_ne!(x[0].id, x[1].id);
    }

    #[test]
    fn kills_are_permanent() {
        let mut c = MutantCache::new("f".into());
        c.record("a", MutantStatus::Killed, Phase::Baseline);
        c.record("a", MutantStatus::Survived, Phase::Amplification);
        assert_eq!(c.status("a"), Some(MutantStatus::Killed));
    }

    #[test]
    fn timeout_floor() {
        assert_eq!(mutant_timeout(0.01, 3.0), 1.0);
        assert_eq!(mutant_timeout(2.0, 3.0), 6.0);
    }
}
