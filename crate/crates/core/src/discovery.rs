//! Finds the module under test of a test class: project-local imports are
//! candidates, the most used one wins.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::python::{Expr, Stmt};
use crate::suite_model::{Import, Member, TestClass};

const ROOT_MARKERS: [&str; 4] = ["setup.py", "pyproject.toml", "setup.cfg", ".git"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleUnderTest {
    pub name: String,
    /// The module file, or the package directory.
    pub root_path: PathBuf,
    pub source_files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum DiscoveryError {
    #[error("no project module imported by the test class")]
    NoCandidate,
    #[error("modules tie on usage: {0:?}")]
    AmbiguousTie(BTreeMap<String, usize>),
    #[error("module `{0}` not found in the project")]
    Unresolved(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct Discovered {
    pub module: ModuleUnderTest,
    /// Usage count per candidate; empty for an override.
    pub counts: BTreeMap<String, usize>,
}

/// Nearest ancestor of `start` holding a project marker, else `start`.
pub fn find_project_root(start: &Path) -> PathBuf {
    let start = std::fs::canonicalize(start).unwrap_or_else(|_| start.to_path_buf());
    let dir = if start.is_file() { start.parent().map(Path::to_path_buf).unwrap_or_default() } else { start };
    dir.ancestors()
        .find(|d| ROOT_MARKERS.iter().any(|m| d.join(m).exists()))
        .map(Path::to_path_buf)
        .unwrap_or(dir)
}

fn is_test_file(p: &Path) -> bool {
    let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.starts_with("test_") || name.ends_with("_test.py") || name == "conftest.py"
}

fn python_files(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(entries) = std::fs::read_dir(dir) else { return };
    let mut entries: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            if p.join("__init__.py").exists() {
                python_files(&p, out);
            }
        } else if p.extension().is_some_and(|e| e == "py") && !is_test_file(&p) {
            out.push(p);
        }
    }
}

/// Module or package `dotted` found below `base`.
fn locate(base: &Path, dotted: &str) -> Option<ModuleUnderTest> {
    if dotted.is_empty() {
        return None;
    }
    let rel: PathBuf = dotted.split('.').collect();
    let file = base.join(&rel).with_extension("py");
    if file.is_file() {
        return Some(ModuleUnderTest { name: dotted.to_string(), root_path: file.clone(), source_files: vec![file] });
    }
    let pkg = base.join(&rel);
    if pkg.join("__init__.py").is_file() {
        let mut files = Vec::new();
        python_files(&pkg, &mut files);
        return Some(ModuleUnderTest { name: dotted.to_string(), root_path: pkg, source_files: files });
    }
    None
}

/// Resolves an absolute dotted name against the search path of a test.
pub fn resolve_module(dotted: &str, test_dir: &Path, project_root: &Path) -> Option<ModuleUnderTest> {
    let root = std::fs::canonicalize(project_root).ok()?;
    for base in [test_dir, project_root] {
        let Some(m) = locate(base, dotted) else { continue };
        let canon = std::fs::canonicalize(&m.root_path).ok()?;
        if !canon.starts_with(&root) || m.source_files.is_empty() {
            return None;
        }
        let source_files = m.source_files.iter().filter_map(|f| std::fs::canonicalize(f).ok()).collect();
        return Some(ModuleUnderTest { name: m.name, root_path: canon, source_files });
    }
    None
}

fn resolve_import(imp: &Import, test_dir: &Path, project_root: &Path) -> Option<ModuleUnderTest> {
    let try_name = |dotted: &str| {
        if imp.level == 0 {
            return resolve_module(dotted, test_dir, project_root);
        }
        let mut base = test_dir.to_path_buf();
        for _ in 1..imp.level {
            base = base.parent()?.to_path_buf();
        }
        let m = locate(&base, dotted)?;
        let root = std::fs::canonicalize(project_root).ok()?;
        let canon = std::fs::canonicalize(&m.root_path).ok()?;
        canon.starts_with(&root).then(|| ModuleUnderTest {
            name: m.name,
            root_path: canon,
            source_files: m.source_files.iter().filter_map(|f| std::fs::canonicalize(f).ok()).collect(),
        })
    };
    // `from pkg import sub` names a submodule when one exists
    if let Some(n) = imp.name.as_deref().filter(|n| *n != "*") {
        let sub = if imp.module.is_empty() { n.to_string() } else { format!("{}.{n}", imp.module) };
        if let Some(m) = try_name(&sub) {
            return Some(m);
        }
    }
    try_name(&imp.module)
}

/// Project modules imported in the scope of `tc`, in import order.
pub fn collect_project_imports(tc: &TestClass, test_path: &Path, project_root: &Path) -> Vec<ModuleUnderTest> {
    let test_path = std::fs::canonicalize(test_path).unwrap_or_else(|_| test_path.to_path_buf());
    let test_dir = test_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out: Vec<ModuleUnderTest> = Vec::new();
    for imp in &tc.imports_in_scope {
        let Some(m) = resolve_import(imp, &test_dir, project_root) else { continue };
        if m.source_files.contains(&test_path) || is_test_file(&m.root_path) {
            continue;
        }
        if !out.iter().any(|o| o.root_path == m.root_path) {
            out.push(m);
        }
    }
    out
}

fn statements(tc: &TestClass) -> Vec<&Stmt> {
    fn push<'a>(s: &'a Stmt, out: &mut Vec<&'a Stmt>) {
        out.push(s);
        if let Stmt::With { body, .. } = s {
            body.iter().for_each(|b| push(b, out));
        }
    }
    let mut out = Vec::new();
    // fixtures first so receivers bound in setUp are known
    let mut methods: Vec<_> = tc.members.iter().filter_map(|m| if let Member::Fixture(f) = m { Some(f) } else { None }).collect();
    methods.extend(tc.members.iter().filter_map(|m| if let Member::Test(t) = m { Some(t) } else { None }));
    for m in methods {
        m.body.iter().for_each(|s| push(&s.node, &mut out));
    }
    out
}

/// Which candidate an import binding or dotted reference belongs to.
struct Attribution {
    /// local name → candidate index
    bindings: BTreeMap<String, usize>,
    star: Option<usize>,
    known: BTreeSet<String>,
}

impl Attribution {
    fn owner(&self, e: &Expr) -> Option<usize> {
        match e {
            Expr::Name(n) => self.bindings.get(n).copied(),
            Expr::Attribute { value, .. } => self.owner(value),
            _ => None,
        }
    }

    fn star_owner(&self, e: &Expr) -> Option<usize> {
        match e {
            Expr::Name(n) if !self.known.contains(n) && !crate::python::is_builtin(n) => self.star,
            _ => None,
        }
    }
}

/// Static usage count per candidate: constructor and function call
/// occurrences plus the distinct names used through the candidate
/// (the binding itself and methods called on its objects).
pub fn usage_counts(tc: &TestClass, candidates: &[ModuleUnderTest], test_path: &Path, project_root: &Path) -> Vec<usize> {
    let test_dir = std::fs::canonicalize(test_path)
        .ok()
        .and_then(|p| p.parent().map(Path::to_path_buf))
        .unwrap_or_default();
    let mut attr = Attribution { bindings: BTreeMap::new(), star: None, known: BTreeSet::new() };
    for imp in &tc.imports_in_scope {
        let resolved = resolve_import(imp, &test_dir, project_root);
        let idx = resolved.and_then(|m| candidates.iter().position(|c| c.root_path == m.root_path));
        match (imp.binding(), idx) {
            (Some(b), Some(i)) => {
                attr.bindings.insert(b.clone(), i);
                attr.known.insert(b);
            }
            (Some(b), None) => {
                attr.known.insert(b);
            }
            (None, Some(i)) => attr.star = attr.star.or(Some(i)),
            (None, None) => {}
        }
    }
    let stmts = statements(tc);
    for s in &stmts {
        if let Stmt::Assign { targets, .. } = s {
            for t in targets {
                if let Expr::Name(n) = t {
                    attr.known.insert(n.clone());
                }
            }
        }
    }
    // receivers: names assigned from calls into a candidate
    let mut receivers: BTreeMap<String, usize> = BTreeMap::new();
    for s in &stmts {
        if let Stmt::Assign { targets, value: Expr::Call { func, .. } } = s {
            if let Some(i) = attr.owner(func).or_else(|| attr.star_owner(func)) {
                for t in targets {
                    if let Some(d) = t.dotted() {
                        receivers.insert(d, i);
                    }
                }
            }
        }
    }
    let mut calls = vec![0usize; candidates.len()];
    let mut names: Vec<BTreeSet<String>> = vec![BTreeSet::new(); candidates.len()];
    for s in &stmts {
        for e in s.expressions() {
            e.walk(&mut |x| match x {
                Expr::Call { func, .. } => {
                    if let Some(i) = attr.owner(func).or_else(|| attr.star_owner(func)) {
                        calls[i] += 1;
                        if let Some(d) = func.dotted() {
                            names[i].insert(d);
                        }
                    } else if let Expr::Attribute { value, attr: method } = func.as_ref() {
                        if let Some(&i) = value.dotted().and_then(|d| receivers.get(&d)) {
                            names[i].insert(method.clone());
                        }
                    }
                }
                Expr::Name(_) | Expr::Attribute { .. } => {
                    if let (Some(i), Some(d)) = (attr.owner(x), x.dotted()) {
                        names[i].insert(d);
                    }
                }
                _ => {}
            });
        }
    }
    // a dotted reference also walks its prefixes; keep the longest only
    for set in &mut names {
        let all: Vec<String> = set.iter().cloned().collect();
        set.retain(|n| !all.iter().any(|o| o.len() > n.len() && o.starts_with(n.as_str()) && o.as_bytes()[n.len()] == b'.'));
    }
    calls.iter().zip(&names).map(|(c, n)| c + n.len()).collect()
}

/// Picks the module under test of `tc`. An override wins outright;
/// otherwise the candidate with the highest usage count, exact ties being
/// an error.
pub fn discover_module_under_test(
    tc: &TestClass,
    test_path: &Path,
    project_root: &Path,
    override_name: Option<&str>,
) -> Result<Discovered, DiscoveryError> {
    if let Some(name) = override_name {
        let test_dir = std::fs::canonicalize(test_path)
            .ok()
            .and_then(|p| p.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        let module = resolve_module(name, &test_dir, project_root).ok_or_else(|| DiscoveryError::Unresolved(name.into()))?;
        return Ok(Discovered { module, counts: BTreeMap::new() });
    }
    let candidates = collect_project_imports(tc, test_path, project_root);
    choose(tc, candidates, test_path, project_root)
}

fn choose(
    tc: &TestClass,
    candidates: Vec<ModuleUnderTest>,
    test_path: &Path,
    project_root: &Path,
) -> Result<Discovered, DiscoveryError> {
    if candidates.is_empty() {
        return Err(DiscoveryError::NoCandidate);
    }
    let usage = usage_counts(tc, &candidates, test_path, project_root);
    let counts: BTreeMap<String, usize> = candidates.iter().map(|c| c.name.clone()).zip(usage.iter().copied()).collect();
    let best = *usage.iter().max().expect("non-empty");
    let winners: Vec<usize> = (0..usage.len()).filter(|&i| usage[i] == best).collect();
    if winners.len() > 1 {
        return Err(DiscoveryError::AmbiguousTie(counts));
    }
    let module = candidates.into_iter().nth(winners[0]).expect("index in range");
    Ok(Discovered { module, counts })
}
