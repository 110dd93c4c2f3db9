//! Bridge to the subject-language runtime. A long-lived Python server
//! process executes requests; every request that touches user code runs in
//! a forked child, so the server itself never imports the project.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

const HARNESS: &str = include_str!("harness.py");

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot start `{python}`: {source}")]
    Spawn { python: String, source: std::io::Error },
    #[error("harness i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("harness protocol: {0}")]
    Protocol(String),
    #[error("execution failed: {0}")]
    Failed(String),
    #[error("execution timed out")]
    Timeout,
}

/// Everything the runtime needs to load a test module.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Context {
    pub test_path: PathBuf,
    pub test_dir: PathBuf,
    pub project_root: PathBuf,
    pub module_name: String,
    /// Test module source to execute in place of the file's contents.
    pub source: String,
    pub mut_files: Vec<PathBuf>,
}

impl Context {
    pub fn new(test_path: &Path, project_root: &Path, source: String, mut_files: Vec<PathBuf>) -> Context {
        let test_path = std::fs::canonicalize(test_path).unwrap_or_else(|_| test_path.to_path_buf());
        let test_dir = test_path.parent().map(Path::to_path_buf).unwrap_or_default();
        let module_name = test_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "test_module".into());
        Context {
            test_path,
            test_dir,
            project_root: std::fs::canonicalize(project_root).unwrap_or_else(|_| project_root.to_path_buf()),
            module_name,
            source,
            mut_files: mut_files.iter().map(|p| std::fs::canonicalize(p).unwrap_or_else(|_| p.clone())).collect(),
        }
    }

    pub fn with_source(&self, source: String) -> Context {
        Context { source, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestRun {
    pub status: TestStatus,
    pub detail: Option<String>,
    pub seconds: f64,
    /// (file, line) pairs executed in the module under test.
    pub lines: Vec<(PathBuf, usize)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MutantSource<'a> {
    pub id: &'a str,
    pub path: &'a Path,
    pub source: &'a str,
}

pub struct Harness {
    python: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

impl Harness {
    /// Starts the server with `$AMPFORGE_PYTHON` or `python3`.
    pub fn start_default() -> Result<Harness, HarnessError> {
        let python = std::env::var("AMPFORGE_PYTHON").unwrap_or_else(|_| "python3".into());
        Harness::start(&python)
    }

    pub fn start(python: &str) -> Result<Harness, HarnessError> {
        let mut child = Command::new(python)
            .arg("-c")
            .arg(HARNESS)
            .env("PYTHONHASHSEED", "0")
            .env("PYTHONDONTWRITEBYTECODE", "1")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| HarnessError::Spawn { python: python.to_string(), source })?;
        let stdin = child.stdin.take().ok_or_else(|| HarnessError::Protocol("no stdin".into()))?;
        let stdout = BufReader::new(child.stdout.take().ok_or_else(|| HarnessError::Protocol("no stdout".into()))?);
        let mut h = Harness { python: python.to_string(), child, stdin, stdout, next_id: 0 };
        h.call("ping", json!({}))?;
        Ok(h)
    }

    pub fn python(&self) -> &str {
        &self.python
    }

    fn call(&mut self, op: &str, mut body: Value) -> Result<Value, HarnessError> {
        self.next_id += 1;
        body["op"] = json!(op);
        body["id"] = json!(self.next_id);
        let mut line = serde_json::to_string(&body).map_err(|e| HarnessError::Protocol(e.to_string()))?;
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()?;
        let mut resp = String::new();
        if self.stdout.read_line(&mut resp)? == 0 {
            return Err(HarnessError::Protocol("server exited".into()));
        }
        let mut v: Value = serde_json::from_str(&resp).map_err(|e| HarnessError::Protocol(e.to_string()))?;
        if v["id"] != json!(self.next_id) {
            return Err(HarnessError::Protocol("response id mismatch".into()));
        }
        if v["timeout"] == json!(true) {
            return Err(HarnessError::Timeout);
        }
        if v["ok"] != json!(true) {
            return Err(HarnessError::Failed(v["error"].as_str().unwrap_or("unknown error").to_string()));
        }
        Ok(v["result"].take())
    }

    fn decode<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, HarnessError> {
        serde_json::from_value(v).map_err(|e| HarnessError::Protocol(e.to_string()))
    }

    /// Runs each named test of `class` on its own, optionally tracing line
    /// coverage of the module under test.
    pub fn run_tests(
        &mut self,
        ctx: &Context,
        class: &str,
        methods: &[String],
        coverage: bool,
        timeout: f64,
    ) -> Result<BTreeMap<String, TestRun>, HarnessError> {
        let v = self.call(
            "run",
            json!({"ctx": ctx, "class": class, "methods": methods, "coverage": coverage, "timeout": timeout}),
        )?;
        Self::decode(v)
    }

    /// Runs the named tests against each mutant in a fresh child. Status per
    /// id: `killed`, `survived`, `timeout` or `invalid`.
    pub fn run_mutants(
        &mut self,
        ctx: &Context,
        class: &str,
        methods: &[String],
        mutants: &[MutantSource<'_>],
        timeout: f64,
        parallel: usize,
    ) -> Result<BTreeMap<String, String>, HarnessError> {
        if mutants.is_empty() {
            return Ok(BTreeMap::new());
        }
        let v = self.call(
            "run_mutants",
            json!({"ctx": ctx, "class": class, "methods": methods, "mutants": mutants,
                   "timeout": timeout, "parallel": parallel}),
        )?;
        Self::decode(v)
    }

    pub fn observe(&mut self, ctx: &Context, class: &str, statements: Value, timeout: f64) -> Result<Value, HarnessError> {
        self.call("observe", json!({"ctx": ctx, "class": class, "statements": statements, "timeout": timeout}))
    }

    pub fn profile(&mut self, ctx: &Context, class: &str, method: &str, timeout: f64) -> Result<Value, HarnessError> {
        self.call("profile", json!({"ctx": ctx, "class": class, "method": method, "timeout": timeout}))
    }
}

impl Drop for Harness {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A test class prepared for execution: the parsed suite, the class being
/// amplified and the runtime context of its file.
#[derive(Debug, Clone)]
pub struct Subject {
    pub suite: crate::suite_model::TestSuite,
    pub class: String,
    pub ctx: Context,
}

impl Subject {
    pub fn new(suite: crate::suite_model::TestSuite, class: &str, project_root: &Path, mut_files: Vec<PathBuf>) -> Subject {
        let source = crate::suite_model::emit_source(&suite);
        let ctx = Context::new(&suite.path, project_root, source, mut_files);
        Subject { suite, class: class.to_string(), ctx }
    }

    /// Source of the suite with `extra` appended to the subject class.
    pub fn source_with(&self, extra: &[crate::suite_model::TestMethod]) -> String {
        let mut suite = self.suite.clone();
        if let Some(c) = suite.class_mut(&self.class) {
            for m in extra {
                c.members.push(crate::suite_model::Member::Test(m.clone()));
            }
        }
        crate::suite_model::emit_source(&suite)
    }

    pub fn ctx_with(&self, extra: &[crate::suite_model::TestMethod]) -> Context {
        if extra.is_empty() {
            return self.ctx.clone();
        }
        self.ctx.with_source(self.source_with(extra))
    }

    /// Adds a test to the subject class and returns its final name.
    pub fn add_test(&mut self, m: crate::suite_model::TestMethod) -> String {
        let name = self.suite.class_mut(&self.class).expect("subject class exists").add_test(m);
        self.ctx = self.ctx.with_source(crate::suite_model::emit_source(&self.suite));
        name
    }

    /// The subject without test method `name`.
    pub fn without_test(&self, name: &str) -> Subject {
        let mut suite = self.suite.clone();
        if let Some(c) = suite.class_mut(&self.class) {
            c.members.retain(|m| !matches!(m, crate::suite_model::Member::Test(t) if t.name == name));
        }
        let ctx = self.ctx.with_source(crate::suite_model::emit_source(&suite));
        Subject { suite, class: self.class.clone(), ctx }
    }

    pub fn test_class(&self) -> &crate::suite_model::TestClass {
        self.suite.class(&self.class).expect("subject class exists")
    }
}
