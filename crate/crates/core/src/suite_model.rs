//! In-memory model of a unittest test file: test classes, fixtures, test
//! methods as statement lists, and the assertion sites inside them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::python::parser::{
    build_blocks, header_colon, join_tokens, parse_simple_statement, parse_with_items, split_semicolons, Block,
};
use crate::python::token::{tokenize, TokKind, Token};
use crate::python::unparse;
use crate::python::{Arg, Constant, Expr, RawCode, Stmt};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{path}: syntax error at line {line}: {message}")]
    Syntax { path: PathBuf, line: usize, message: String },
    #[error("{0}: no unittest.TestCase subclass found")]
    NoTestClasses(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Written by the developer (or inserted by an input transformation).
    Original,
    /// An assertion of the handwritten test, or the bare expression left
    /// after stripping one. Assertion amplification regenerates these.
    Regenerated,
    /// An assertion added by amplification.
    Synthesized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Statement {
    pub node: Stmt,
    /// Line in the file the statement was parsed from.
    pub line: Option<usize>,
    pub provenance: Provenance,
}

impl Statement {
    pub fn new(node: Stmt, provenance: Provenance) -> Statement {
        Statement { node, line: None, provenance }
    }

    pub fn original(node: Stmt) -> Statement {
        Statement::new(node, Provenance::Original)
    }

    pub fn source(&self) -> String {
        let mut out = Vec::new();
        unparse::stmt_lines(&self.node, 0, &mut out);
        out.join("\n")
    }
}

/// Structural equality: lines and provenance are not compared.
impl PartialEq for Statement {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Original,
    Amplified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteralOperator {
    Zero,
    Increment,
    Decrement,
    Double,
    Halve,
    Concat,
    Substring,
    Empty,
    RandomChar,
    Negate,
    Unify,
}

/// One recorded input transformation. Replaying a method's log on the
/// stripped ancestor reproduces the amplified body before assertions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Transformation {
    Literal { stmt: usize, ordinal: usize, operator: LiteralOperator, from: Constant, to: Constant },
    RemoveCall { stmt: usize },
    DuplicateCall { stmt: usize },
    AddCall { position: usize, statement: Stmt },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineage {
    pub ancestor: String,
    pub transformations: Vec<Transformation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestMethod {
    pub name: String,
    /// Decorator lines, without indentation.
    pub decorators: Vec<String>,
    pub body: Vec<Statement>,
    pub origin: Origin,
    pub lineage: Option<Lineage>,
    pub line: Option<usize>,
    /// Original text, emitted while the body is unchanged so comments and
    /// formatting of untouched methods survive.
    #[serde(skip)]
    verbatim: Option<(RawCode, Vec<Stmt>, String)>,
}

impl PartialEq for TestMethod {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.decorators == other.decorators && self.body == other.body
    }
}

impl TestMethod {
    pub fn new(name: impl Into<String>, body: Vec<Statement>) -> TestMethod {
        TestMethod {
            name: name.into(),
            decorators: Vec::new(),
            body,
            origin: Origin::Original,
            lineage: None,
            line: None,
            verbatim: None,
        }
    }

    /// A copy with no attachment to the source text it was parsed from.
    pub fn detached(&self) -> TestMethod {
        TestMethod { verbatim: None, ..self.clone() }
    }

    fn unchanged(&self) -> Option<&RawCode> {
        let (raw, nodes, name) = self.verbatim.as_ref()?;
        let same = *name == self.name
            && nodes.len() == self.body.len()
            && nodes.iter().zip(&self.body).all(|(a, b)| *a == b.node);
        same.then_some(raw)
    }

    /// Source lines of the method at the given indentation level.
    pub fn source_lines(&self, indent: usize) -> Vec<String> {
        let pad = "    ".repeat(indent);
        if let Some(raw) = self.unchanged() {
            return raw.indented(&pad);
        }
        let mut out: Vec<String> = self.decorators.iter().map(|d| format!("{pad}{d}")).collect();
        out.push(format!("{pad}def {}(self):", self.name));
        if self.body.is_empty() {
            out.push(format!("{pad}    pass"));
        }
        for s in &self.body {
            unparse::stmt_lines(&s.node, indent + 1, &mut out);
        }
        out
    }

    pub fn source(&self) -> String {
        let mut s = self.source_lines(0).join("\n");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Member {
    /// `setUp` / `tearDown`.
    Fixture(TestMethod),
    Test(TestMethod),
    /// Anything else in the class body, kept verbatim.
    Other { code: RawCode, name: Option<String> },
}

impl Member {
    pub fn name(&self) -> Option<&str> {
        match self {
            Member::Fixture(m) | Member::Test(m) => Some(&m.name),
            Member::Other { name, .. } => name.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Import {
    /// Dotted module path as written, without leading dots.
    pub module: String,
    /// Imported name for `from` imports; `*` for star imports.
    pub name: Option<String>,
    pub alias: Option<String>,
    /// Number of leading dots of a relative import.
    pub level: usize,
    pub line: usize,
}

impl Import {
    pub fn is_star(&self) -> bool {
        self.name.as_deref() == Some("*")
    }

    /// Local name bound by the import; `None` for star imports.
    pub fn binding(&self) -> Option<String> {
        if self.is_star() {
            return None;
        }
        if let Some(a) = &self.alias {
            return Some(a.clone());
        }
        match &self.name {
            Some(n) => Some(n.clone()),
            None => self.module.split('.').next().map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestClass {
    pub name: String,
    pub bases: Vec<String>,
    pub decorators: Vec<String>,
    pub members: Vec<Member>,
    pub imports_in_scope: Vec<Import>,
    pub line: usize,
}

impl TestClass {
    pub fn tests(&self) -> impl Iterator<Item = &TestMethod> {
        self.members.iter().filter_map(|m| match m {
            Member::Test(t) => Some(t),
            _ => None,
        })
    }

    pub fn test(&self, name: &str) -> Option<&TestMethod> {
        self.tests().find(|t| t.name == name)
    }

    pub fn fixture(&self, name: &str) -> Option<&TestMethod> {
        self.members.iter().find_map(|m| match m {
            Member::Fixture(f) if f.name == name => Some(f),
            _ => None,
        })
    }

    pub fn setup(&self) -> Option<&TestMethod> {
        self.fixture("setUp")
    }

    pub fn member_names(&self) -> BTreeSet<String> {
        self.members.iter().filter_map(|m| m.name().map(str::to_string)).collect()
    }

    /// First `<ancestor>_amp_<k>` (k >= 1) not yet used in the class.
    pub fn fresh_name(&self, ancestor: &str) -> String {
        let used = self.member_names();
        (1..)
            .map(|k| format!("{ancestor}_amp_{k}"))
            .find(|n| !used.contains(n))
            .expect("unbounded range")
    }

    /// Appends a test, renaming it if its name is taken.
    pub fn add_test(&mut self, mut m: TestMethod) -> String {
        if self.member_names().contains(&m.name) {
            let base = m.lineage.as_ref().map(|l| l.ancestor.clone()).unwrap_or_else(|| m.name.clone());
            m.name = self.fresh_name(&base);
        }
        let name = m.name.clone();
        self.members.push(Member::Test(m));
        name
    }

    pub fn source_lines(&self) -> Vec<String> {
        let mut out = self.decorators.clone();
        if self.bases.is_empty() {
            out.push(format!("class {}:", self.name));
        } else {
            out.push(format!("class {}({}):", self.name, self.bases.join(", ")));
        }
        if self.members.is_empty() {
            out.push("    pass".into());
        }
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                out.push(String::new());
            }
            match m {
                Member::Fixture(t) | Member::Test(t) => out.extend(t.source_lines(1)),
                Member::Other { code, .. } => out.extend(code.indented("    ")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Item {
    Raw(RawCode),
    Class(TestClass),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub path: PathBuf,
    pub items: Vec<Item>,
    /// Module-level imports, in source order.
    pub imports: Vec<Import>,
}

impl TestSuite {
    pub fn classes(&self) -> impl Iterator<Item = &TestClass> {
        self.items.iter().filter_map(|i| match i {
            Item::Class(c) => Some(c),
            _ => None,
        })
    }

    pub fn classes_mut(&mut self) -> impl Iterator<Item = &mut TestClass> {
        self.items.iter_mut().filter_map(|i| match i {
            Item::Class(c) => Some(c),
            _ => None,
        })
    }

    pub fn class(&self, name: &str) -> Option<&TestClass> {
        self.classes().find(|c| c.name == name)
    }

    pub fn class_mut(&mut self, name: &str) -> Option<&mut TestClass> {
        self.classes_mut().find(|c| c.name == name)
    }

    pub fn source(&self) -> String {
        emit_source(self)
    }
}

pub fn emit_source(suite: &TestSuite) -> String {
    let mut out: Vec<String> = Vec::new();
    for (i, item) in suite.items.iter().enumerate() {
        if i > 0 {
            out.push(String::new());
            out.push(String::new());
        }
        match item {
            Item::Raw(r) => out.extend(r.indented("")),
            Item::Class(c) => out.extend(c.source_lines()),
        }
    }
    let mut s = out.join("\n");
    s.push('\n');
    s
}

pub fn parse_suite_file(path: &Path) -> Result<TestSuite, Box<dyn std::error::Error + Send + Sync>> {
    let src = std::fs::read_to_string(path)?;
    Ok(parse_suite(&src, path)?)
}

/// Parses a test file. Fails on syntax errors and on files that define no
/// `unittest.TestCase` subclass.
pub fn parse_suite(source: &str, path: &Path) -> Result<TestSuite, SuiteError> {
    let syntax = |e: crate::python::SyntaxError| SuiteError::Syntax {
        path: path.to_path_buf(),
        line: e.line,
        message: e.message,
    };
    let tokens = tokenize(source).map_err(syntax)?;
    let blocks = build_blocks(&tokens).map_err(syntax)?;
    let lines: Vec<&str> = source.lines().collect();

    let mut imports = Vec::new();
    for b in &blocks {
        collect_imports(b, &mut imports);
    }
    let mut case_bases = test_case_names(&imports);

    let mut items = Vec::new();
    let mut cursor = 1usize;
    let mut pending: Vec<&Block> = Vec::new();
    for b in &blocks {
        if b.first().is_op("@") {
            pending.push(b);
            continue;
        }
        let class = if b.starts_with_keyword("class") {
            parse_class(b, &pending, &lines, &case_bases, &imports).map_err(syntax)?
        } else {
            None
        };
        if let Some(class) = class {
            let start = pending.first().map(|d| d.start_line).unwrap_or(b.start_line);
            push_region(&mut items, &lines, cursor, start.saturating_sub(1));
            cursor = b.end_line + 1;
            case_bases.insert(class.name.clone());
            items.push(Item::Class(class));
        }
        pending.clear();
    }
    push_region(&mut items, &lines, cursor, lines.len());

    let suite = TestSuite { path: path.to_path_buf(), items, imports };
    if suite.classes().next().is_none() {
        return Err(SuiteError::NoTestClasses(path.to_path_buf()));
    }
    Ok(suite)
}

fn push_region(items: &mut Vec<Item>, lines: &[&str], from: usize, to: usize) {
    if from > to || from == 0 {
        return;
    }
    let slice = &lines[from - 1..to.min(lines.len())];
    let first = slice.iter().position(|l| !l.trim().is_empty());
    let last = slice.iter().rposition(|l| !l.trim().is_empty());
    if let (Some(a), Some(b)) = (first, last) {
        items.push(Item::Raw(RawCode::from_source_lines(&slice[a..=b], "")));
    }
}

fn test_case_names(imports: &[Import]) -> BTreeSet<String> {
    let mut names = BTreeSet::new();
    for imp in imports {
        if imp.module != "unittest" || imp.level != 0 {
            continue;
        }
        match &imp.name {
            None => {
                let local = imp.alias.clone().unwrap_or_else(|| "unittest".into());
                names.insert(format!("{local}.TestCase"));
                names.insert(format!("{local}.IsolatedAsyncioTestCase"));
            }
            Some(n) if n == "TestCase" || n == "IsolatedAsyncioTestCase" => {
                names.insert(imp.alias.clone().unwrap_or_else(|| n.clone()));
            }
            Some(n) if n == "*" => {
                names.insert("TestCase".into());
            }
            _ => {}
        }
    }
    names
}

/// Imports anywhere outside function and class bodies.
fn collect_imports(b: &Block, out: &mut Vec<Import>) {
    if b.starts_with_keyword("def") || b.starts_with_keyword("class") || b.starts_with_keyword("async") {
        return;
    }
    for part in split_semicolons(&b.tokens) {
        out.extend(parse_import_tokens(part));
    }
    if let Some(inline) = b.inline_body() {
        for part in split_semicolons(inline) {
            out.extend(parse_import_tokens(part));
        }
    }
    for c in &b.children {
        collect_imports(c, out);
    }
}

/// Parses one `import` / `from ... import` statement; other statements
/// yield nothing.
pub fn parse_import_tokens(toks: &[Token]) -> Vec<Import> {
    let Some(first) = toks.first() else { return Vec::new() };
    let line = first.line;
    let mut out = Vec::new();
    if first.is_keyword("import") {
        for group in split_commas(&toks[1..]) {
            let (path, alias) = split_alias(group);
            if !path.is_empty() {
                out.push(Import { module: path, name: None, alias, level: 0, line });
            }
        }
    } else if first.is_keyword("from") {
        let Some(imp) = toks.iter().position(|t| t.is_keyword("import")) else { return out };
        let mut level = 0;
        let mut module = String::new();
        for t in &toks[1..imp] {
            match t.text.as_str() {
                "." => level += 1,
                "..." => level += 3,
                s => module.push_str(s),
            }
        }
        let rest: Vec<Token> = toks[imp + 1..].iter().filter(|t| !t.is_op("(") && !t.is_op(")")).cloned().collect();
        for group in split_commas(&rest) {
            let (name, alias) = split_alias(group);
            if !name.is_empty() {
                out.push(Import { module: module.clone(), name: Some(name), alias, level, line });
            }
        }
    }
    out
}

fn split_commas(toks: &[Token]) -> Vec<&[Token]> {
    toks.split(|t| t.is_op(",")).filter(|g| !g.is_empty()).collect()
}

fn split_alias(group: &[Token]) -> (String, Option<String>) {
    match group.iter().position(|t| t.is_keyword("as")) {
        Some(i) => (
            group[..i].iter().map(|t| t.text.as_str()).collect(),
            group.get(i + 1).map(|t| t.text.clone()),
        ),
        None => (group.iter().map(|t| t.text.as_str()).collect(), None),
    }
}

fn block_lines<'a, 'b>(lines: &'b [&'a str], start: usize, end: usize) -> &'b [&'a str] {
    &lines[start - 1..end.min(lines.len())]
}

fn leading_ws(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

fn raw_span(lines: &[&str], start: usize, end: usize) -> RawCode {
    let span = block_lines(lines, start, end);
    RawCode::from_source_lines(span, leading_ws(span[0]))
}

fn parse_class(
    b: &Block,
    decorators: &[&Block],
    lines: &[&str],
    case_bases: &BTreeSet<String>,
    imports: &[Import],
) -> Result<Option<TestClass>, crate::python::SyntaxError> {
    let toks = &b.tokens;
    if b.children.is_empty() || toks.len() < 3 || toks[1].kind != TokKind::Name {
        return Ok(None);
    }
    let name = toks[1].text.clone();
    let mut bases = Vec::new();
    if toks[2].is_op("(") {
        let close = toks.len() - 2;
        if !toks[close].is_op(")") {
            return Ok(None);
        }
        let mut depth = 0;
        let mut start = 3;
        for i in 3..=close {
            let t = &toks[i];
            if (t.is_op(",") && depth == 0) || i == close {
                if i > start {
                    bases.push(join_tokens(&toks[start..i]));
                }
                start = i + 1;
            } else if t.is_op("(") || t.is_op("[") {
                depth += 1;
            } else if t.is_op(")") || t.is_op("]") {
                depth -= 1;
            }
        }
    }
    if !bases.iter().any(|base| case_bases.contains(base)) {
        return Ok(None);
    }
    let decorators = decorators
        .iter()
        .flat_map(|d| block_lines(lines, d.start_line, d.end_line).iter().map(|l| l.trim().to_string()))
        .collect();

    let mut members = Vec::new();
    let mut pending: Vec<&Block> = Vec::new();
    for c in &b.children {
        if c.first().is_op("@") {
            pending.push(c);
            continue;
        }
        let start = pending.first().map(|d| d.start_line).unwrap_or(c.start_line);
        let member = match simple_method(c) {
            Some(mname) => {
                let is_fixture = mname == "setUp" || mname == "tearDown";
                if pending.is_empty() && is_fixture || mname.starts_with("test") {
                    let decs = pending
                        .iter()
                        .flat_map(|d| block_lines(lines, d.start_line, d.end_line).iter().map(|l| l.trim().to_string()))
                        .collect();
                    let method = parse_method(mname, decs, c, lines, start)?;
                    if is_fixture {
                        Member::Fixture(method)
                    } else {
                        Member::Test(method)
                    }
                } else {
                    Member::Other { code: raw_span(lines, start, c.end_line), name: Some(mname.to_string()) }
                }
            }
            None => {
                let name = if c.starts_with_keyword("def") || c.starts_with_keyword("class") {
                    c.tokens.get(1).map(|t| t.text.clone())
                } else if c.starts_with_keyword("async") {
                    c.tokens.get(2).map(|t| t.text.clone())
                } else {
                    None
                };
                Member::Other { code: raw_span(lines, start, c.end_line), name }
            }
        };
        members.push(member);
        pending.clear();
    }
    Ok(Some(TestClass {
        name,
        bases,
        decorators,
        members,
        imports_in_scope: imports.to_vec(),
        line: b.start_line,
    }))
}

/// Name of a `def name(self):` method with an indented body.
fn simple_method(b: &Block) -> Option<&str> {
    let t = &b.tokens;
    if !b.starts_with_keyword("def") || b.children.is_empty() || t.len() < 6 {
        return None;
    }
    let mut i = 2;
    let ok = t[1].kind == TokKind::Name && t[i].is_op("(") && t[i + 1].kind == TokKind::Name
        && t[i + 1].text == "self";
    if !ok {
        return None;
    }
    i += 2;
    if t[i].is_op(",") {
        i += 1;
    }
    if !t[i].is_op(")") {
        return None;
    }
    (header_colon(t) == Some(t.len() - 1)).then_some(t[1].text.as_str())
}

fn parse_method(
    name: &str,
    decorators: Vec<String>,
    b: &Block,
    lines: &[&str],
    start: usize,
) -> Result<TestMethod, crate::python::SyntaxError> {
    let body = parse_body(&b.children, lines)?;
    let verbatim = raw_span(lines, start, b.end_line);
    let nodes = body.iter().map(|s| s.node.clone()).collect();
    Ok(TestMethod {
        name: name.to_string(),
        decorators,
        body,
        origin: Origin::Original,
        lineage: None,
        line: Some(b.start_line),
        verbatim: Some((verbatim, nodes, name.to_string())),
    })
}

const CLAUSES: &[&str] = &["elif", "else", "except", "finally"];
const COMPOUND: &[&str] = &["if", "for", "while", "try", "with", "def", "class", "async", "match"];

fn parse_body(blocks: &[Block], lines: &[&str]) -> Result<Vec<Statement>, crate::python::SyntaxError> {
    let mut out: Vec<Statement> = Vec::new();
    let mut i = 0;
    while i < blocks.len() {
        let b = &blocks[i];
        // `else:` / `except:` clauses belong to the preceding statement
        let mut j = i + 1;
        while j < blocks.len() && CLAUSES.iter().any(|k| blocks[j].starts_with_keyword(k)) {
            j += 1;
        }
        let end = blocks[j - 1].end_line;
        if b.first().is_op("@") {
            // decorated nested function: keep it and its target together
            let mut k = i;
            while k < blocks.len() && blocks[k].first().is_op("@") {
                k += 1;
            }
            let last = blocks.get(k).map(|x| x.end_line).unwrap_or(end);
            out.push(Statement { node: Stmt::Raw(raw_span(lines, b.start_line, last)), line: Some(b.start_line), provenance: Provenance::Original });
            i = (k + 1).min(blocks.len());
            continue;
        }
        let node = if j > i + 1 {
            Stmt::Raw(raw_span(lines, b.start_line, end))
        } else if !b.children.is_empty() || is_compound(b) {
            compound(b, lines)?
        } else {
            let parts = split_semicolons(&b.tokens);
            if parts.len() > 1 {
                for p in parts {
                    out.push(Statement { node: parse_simple_statement(p), line: Some(p[0].line), provenance: Provenance::Original });
                }
                i = j;
                continue;
            }
            match parse_simple_statement(&b.tokens) {
                Stmt::Raw(_) => Stmt::Raw(raw_span(lines, b.start_line, b.end_line)),
                s => s,
            }
        };
        out.push(Statement { node, line: Some(b.start_line), provenance: Provenance::Original });
        i = j;
    }
    Ok(out)
}

fn is_compound(b: &Block) -> bool {
    COMPOUND.iter().any(|k| b.starts_with_keyword(k)) && header_colon(&b.tokens).is_some()
}

fn compound(b: &Block, lines: &[&str]) -> Result<Stmt, crate::python::SyntaxError> {
    if b.starts_with_keyword("with") {
        if let Some(colon) = header_colon(&b.tokens) {
            if let Ok(items) = parse_with_items(&b.tokens[..colon]) {
                let body = match b.inline_body() {
                    Some(inline) => split_semicolons(inline).into_iter().map(parse_simple_statement).collect(),
                    None => parse_body(&b.children, lines)?.into_iter().map(|s| s.node).collect(),
                };
                return Ok(Stmt::With { items, body });
            }
        }
    }
    Ok(Stmt::Raw(raw_span(lines, b.start_line, b.end_line)))
}

// ---------------------------------------------------------------------------
// assertions

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssertKind {
    Equal,
    True,
    False,
    IsInstance,
    Raises,
    AlmostEqual,
    IsNone,
    Other,
}

/// Maps assertion method names of the test framework to kinds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssertionTable {
    kinds: BTreeMap<String, AssertKind>,
    context_managers: BTreeSet<String>,
}

impl Default for AssertionTable {
    fn default() -> Self {
        use AssertKind::*;
        let mut kinds = BTreeMap::new();
        let mut add = |names: &[&str], k: AssertKind| {
            for n in names {
                kinds.insert(n.to_string(), k);
            }
        };
        add(&["assertEqual", "assertEquals", "failUnlessEqual"], Equal);
        add(&["assertTrue", "assert_", "failUnless"], True);
        add(&["assertFalse", "failIf"], False);
        add(&["assertIsInstance"], IsInstance);
        add(&["assertRaises", "assertRaisesRegex", "assertRaisesRegexp", "failUnlessRaises"], Raises);
        add(&["assertAlmostEqual", "assertAlmostEquals", "failUnlessAlmostEqual"], AlmostEqual);
        add(&["assertIsNone"], IsNone);
        add(
            &[
                "assertNotEqual", "assertNotEquals", "failIfEqual", "assertNotAlmostEqual",
                "assertNotAlmostEquals", "failIfAlmostEqual", "assertIs", "assertIsNot",
                "assertIsNotNone", "assertIn", "assertNotIn", "assertNotIsInstance", "assertGreater",
                "assertGreaterEqual", "assertLess", "assertLessEqual", "assertRegex",
                "assertRegexpMatches", "assertNotRegex", "assertNotRegexpMatches", "assertCountEqual",
                "assertMultiLineEqual", "assertSequenceEqual", "assertListEqual", "assertTupleEqual",
                "assertSetEqual", "assertDictEqual", "assertDictContainsSubset", "assertWarns",
                "assertWarnsRegex", "assertLogs", "assertNoLogs", "fail",
            ],
            Other,
        );
        let context_managers = [
            "assertRaises", "assertRaisesRegex", "assertRaisesRegexp", "failUnlessRaises", "assertWarns",
            "assertWarnsRegex", "assertLogs", "assertNoLogs",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        AssertionTable { kinds, context_managers }
    }
}

impl AssertionTable {
    pub fn with(mut self, name: &str, kind: AssertKind) -> Self {
        self.kinds.insert(name.to_string(), kind);
        self
    }

    pub fn with_context_manager(mut self, name: &str, kind: AssertKind) -> Self {
        self.kinds.insert(name.to_string(), kind);
        self.context_managers.insert(name.to_string());
        self
    }

    pub fn kind(&self, method: &str) -> Option<AssertKind> {
        self.kinds.get(method).copied()
    }

    /// `self.<assertion>(...)` calls: (method name, kind, args).
    pub fn match_call<'a>(&self, e: &'a Expr) -> Option<(&'a str, AssertKind, &'a [Arg])> {
        let Expr::Call { func, args } = e else { return None };
        let Expr::Attribute { value, attr } = func.as_ref() else { return None };
        if !matches!(value.as_ref(), Expr::Name(n) if n == "self") {
            return None;
        }
        self.kind(attr).map(|k| (attr.as_str(), k, args.as_slice()))
    }

    /// `with self.assertRaises(...)`-style blocks.
    pub fn match_with<'a>(&self, s: &'a Stmt) -> Option<(&'a str, AssertKind, &'a [Stmt])> {
        let Stmt::With { items, body } = s else { return None };
        items.iter().find_map(|it| {
            let (name, kind, _) = self.match_call(&it.context)?;
            self.context_managers.contains(name).then_some((name, kind, body.as_slice()))
        })
    }

    fn is_callable_form(&self, name: &str, args: &[Arg]) -> bool {
        self.context_managers.contains(name) && args.len() >= 2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionSite {
    pub method: String,
    /// Index of the statement in the method body.
    pub index: usize,
    pub kind: AssertKind,
    pub assertion: String,
    /// The expression under test, when there is a single one.
    pub asserted: Option<Expr>,
}

pub fn recognize_assertions(method: &TestMethod, table: &AssertionTable) -> Vec<AssertionSite> {
    let mut sites = Vec::new();
    for (index, st) in method.body.iter().enumerate() {
        let site = |assertion: &str, kind, asserted| AssertionSite {
            method: method.name.clone(),
            index,
            kind,
            assertion: assertion.to_string(),
            asserted,
        };
        if let Stmt::Expr(e) = &st.node {
            if let Some((name, kind, args)) = table.match_call(e) {
                sites.push(site(name, kind, asserted_expression(table, name, args)));
            }
        } else if let Some((name, kind, body)) = table.match_with(&st.node) {
            let asserted = match body {
                [Stmt::Expr(e)] => Some(e.clone()),
                _ => None,
            };
            sites.push(site(name, kind, asserted));
        }
    }
    sites
}

/// The sub-expression an assertion checks: the called function for the
/// callable form of context-manager assertions, otherwise the first
/// positional argument that performs a call.
fn asserted_expression(table: &AssertionTable, name: &str, args: &[Arg]) -> Option<Expr> {
    if table.is_callable_form(name, args) {
        if let Arg::Positional(f) = &args[1] {
            let rest: Vec<Arg> = args[2..].iter().filter(|a| !matches!(a, Arg::Keyword(k, _) if k == "msg")).cloned().collect();
            return Some(Expr::Call { func: Box::new(f.clone()), args: rest });
        }
        return None;
    }
    args.iter().find_map(|a| match a {
        Arg::Positional(e) if e.contains_call() => Some(e.clone()),
        _ => None,
    })
}

/// Removes every assertion, keeping the calls they made as bare statements.
/// Assertions added by amplification disappear entirely; assertion blocks
/// are replaced by their bodies. Idempotent.
pub fn strip_assertions(method: &TestMethod, table: &AssertionTable) -> TestMethod {
    let mut out = method.detached();
    out.body = strip_statements(&method.body, table);
    out
}

fn strip_statements(body: &[Statement], table: &AssertionTable) -> Vec<Statement> {
    let mut out = Vec::new();
    for st in body {
        match &st.node {
            Stmt::Expr(e) => {
                if let Some((name, _, args)) = table.match_call(e) {
                    if st.provenance == Provenance::Synthesized {
                        continue;
                    }
                    if let Some(x) = asserted_expression(table, name, args) {
                        out.push(Statement { node: Stmt::Expr(x), line: st.line, provenance: Provenance::Regenerated });
                    }
                } else {
                    out.push(st.clone());
                }
            }
            Stmt::With { items, body } => {
                if table.match_with(&st.node).is_some() {
                    let inner: Vec<Statement> = body
                        .iter()
                        .map(|s| Statement { node: s.clone(), line: st.line, provenance: Provenance::Original })
                        .collect();
                    out.extend(strip_statements(&inner, table));
                } else {
                    let inner: Vec<Statement> = body.iter().cloned().map(Statement::original).collect();
                    let body = strip_statements(&inner, table).into_iter().map(|s| s.node).collect();
                    out.push(Statement { node: Stmt::With { items: items.clone(), body }, ..st.clone() });
                }
            }
            _ => out.push(st.clone()),
        }
    }
    out
}

/// Builds `self.<name>(args...)` as a statement.
pub fn assertion_call(name: &str, args: Vec<Arg>) -> Stmt {
    Stmt::Expr(Expr::Call { func: Box::new(Expr::attr(Expr::name("self"), name)), args })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SRC: &str = "\
# header comment
import unittest
from bank import SmallFund as SF


class Helper:
    pass


class TestFund(unittest.TestCase):
    \"\"\"Doc.\"\"\"

    def setUp(self):
        self.b = SF(\"x\")  # make one

    def test_a(self):
        self.b.deposit(10)
        self.assertEqual(self.b.get_balance(), 10)
        with self.assertRaises(ValueError):
            self.b.deposit(-1)

    def helper(self, x):
        return x


if __name__ == '__main__':
    unittest.main()
";

    #[test]
    fn parses_structure() {
        let s = parse_suite(SRC, Path::new("t.py")).unwrap();
        let classes: Vec<_> = s.classes().map(|c| c.name.as_str()).collect();
        assert_eq!(classes, ["TestFund"]);
        let c = s.class("TestFund").unwrap();
        assert!(c.setup().is_some());
        assert_eq!(c.tests().count(), 1);
        assert_eq!(c.test("test_a").unwrap().body.len(), 3);
        assert_eq!(s.imports.len(), 2);
        assert_eq!(s.imports[1].binding().as_deref(), Some("SF"));
    }

    #[test]
    fn unchanged_source_round_trips() {
        let s = parse_suite(SRC, Path::new("t.py")).unwrap();
        assert_eq!(emit_source(&s), SRC);
    }

    #[test]
    fn strip_keeps_calls() {
        let s = parse_suite(SRC, Path::new("t.py")).unwrap();
        let t = s.class("TestFund").unwrap().test("test_a").unwrap();
        let table = AssertionTable::default();
        let sites = recognize_assertions(t, &table);
        assert_eq!(sites.len(), 2);
        let stripped = strip_assertions(t, &table);
        assert_eq!(
            stripped.source(),
            "def test_a(self):\n    self.b.deposit(10)\n    self.b.get_balance()\n    self.b.deposit(-1)\n"
        );
        assert_eq!(strip_assertions(&stripped, &table), stripped);
    }

    #[test]
    fn fresh_names_skip_taken() {
        let s = parse_suite(SRC, Path::new("t.py")).unwrap();
        let mut c = s.class("TestFund").unwrap().clone();
        assert_eq!(c.fresh_name("test_a"), "test_a_amp_1");
        c.add_test(TestMethod::new("test_a_amp_1", vec![]));
        assert_eq!(c.fresh_name("test_a"), "test_a_amp_2");
    }
}
