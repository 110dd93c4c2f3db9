//! Traced execution of stripped test methods: per-statement return values,
//! receiver states and exceptions, filtered for nondeterminism over repeated
//! runs.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::python::{Constant, DictItem, Expr, Stmt};
use crate::runtime::{Harness, HarnessError, Subject};
use crate::suite_model::TestMethod;

/// Nesting limit for object members. Receivers are snapshotted at depth 0,
/// their members at depth 1 as literals or type-only objects.
pub const D_MAX: usize = 1;
/// Maximum number of wrapped (raising) statements per method.
pub const W_MAX: usize = 16;

#[derive(Debug, Error)]
pub enum ObserveError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("more than {W_MAX} raising statements")]
    ExhaustedWraps,
    #[error("statement {0} raises nondeterministically")]
    Flaky(usize),
    #[error("fixture failed: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeInfo {
    /// Fully qualified runtime type name.
    pub name: String,
    /// Expression naming the type in the test module, if any.
    pub expr: Option<String>,
    /// Nearest nameable proper base class (never `object`).
    pub base_expr: Option<String>,
    pub in_mut: bool,
}

impl TypeInfo {
    pub fn best_expr(&self) -> Option<&str> {
        self.expr.as_deref().or(self.base_expr.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberSnapshot {
    pub name: String,
    /// Zero-argument getter (true) or attribute (false).
    pub call: bool,
    pub snap: Snapshot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnapshotKind {
    Literal,
    Collection,
    Object,
    ExceptionRaised,
    Opaque,
}

/// Structural record of a runtime value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "k", rename_all = "snake_case")]
pub enum Snapshot {
    None,
    Bool { v: bool },
    Int { v: String },
    /// `repr` of a finite float; equality is exact.
    Float { v: String },
    Str { v: String },
    List { items: Vec<Snapshot> },
    Tuple { items: Vec<Snapshot> },
    Set { items: Vec<Snapshot> },
    Frozenset { items: Vec<Snapshot> },
    Dict { items: Vec<(Snapshot, Snapshot)> },
    Object {
        #[serde(rename = "type")]
        ty: TypeInfo,
        /// `None` once the depth limit is reached.
        members: Option<Vec<MemberSnapshot>>,
    },
    Opaque {
        #[serde(rename = "type")]
        ty: TypeInfo,
    },
    Raises {
        #[serde(rename = "type")]
        ty: TypeInfo,
    },
}

impl Snapshot {
    pub fn kind(&self) -> SnapshotKind {
        match self {
            Snapshot::None | Snapshot::Bool { .. } | Snapshot::Int { .. } | Snapshot::Float { .. } | Snapshot::Str { .. } => {
                SnapshotKind::Literal
            }
            Snapshot::List { .. } | Snapshot::Tuple { .. } | Snapshot::Set { .. } | Snapshot::Frozenset { .. } | Snapshot::Dict { .. } => {
                SnapshotKind::Collection
            }
            Snapshot::Object { .. } => SnapshotKind::Object,
            Snapshot::Raises { .. } => SnapshotKind::ExceptionRaised,
            Snapshot::Opaque { .. } => SnapshotKind::Opaque,
        }
    }

    pub fn type_name(&self) -> String {
        match self {
            Snapshot::None => "builtins.NoneType".into(),
            Snapshot::Bool { .. } => "builtins.bool".into(),
            Snapshot::Int { .. } => "builtins.int".into(),
            Snapshot::Float { .. } => "builtins.float".into(),
            Snapshot::Str { .. } => "builtins.str".into(),
            Snapshot::List { .. } => "builtins.list".into(),
            Snapshot::Tuple { .. } => "builtins.tuple".into(),
            Snapshot::Set { .. } => "builtins.set".into(),
            Snapshot::Frozenset { .. } => "builtins.frozenset".into(),
            Snapshot::Dict { .. } => "builtins.dict".into(),
            Snapshot::Object { ty, .. } | Snapshot::Opaque { ty } | Snapshot::Raises { ty } => ty.name.clone(),
        }
    }

    pub fn members(&self) -> &[MemberSnapshot] {
        match self {
            Snapshot::Object { members: Some(m), .. } => m,
            _ => &[],
        }
    }

    /// Source literal reproducing the value, for literal and collection kinds.
    pub fn to_expr(&self) -> Option<Expr> {
        let list = |items: &[Snapshot]| items.iter().map(Snapshot::to_expr).collect::<Option<Vec<_>>>();
        Some(match self {
            Snapshot::None => Expr::Const(Constant::None),
            Snapshot::Bool { v } => Expr::Const(Constant::Bool(*v)),
            Snapshot::Int { v } => match v.parse::<i128>() {
                Ok(i) if i.unsigned_abs() <= i64::MAX as u128 => Expr::Const(Constant::Int(i)),
                _ => Expr::Const(Constant::Verbatim(v.clone())),
            },
            Snapshot::Float { v } => Expr::Const(Constant::Float(v.parse().ok()?)),
            Snapshot::Str { v } => Expr::Const(Constant::Str(v.clone())),
            Snapshot::List { items } => Expr::List(list(items)?),
            Snapshot::Tuple { items } => Expr::Tuple(list(items)?),
            Snapshot::Set { items } => Expr::Set(list(items)?),
            Snapshot::Frozenset { items } => {
                let inner = if items.is_empty() { vec![] } else { vec![Expr::Set(list(items)?)] };
                Expr::call(Expr::name("frozenset"), inner)
            }
            Snapshot::Dict { items } => Expr::Dict(
                items
                    .iter()
                    .map(|(k, v)| Some(DictItem::Pair(k.to_expr()?, v.to_expr()?)))
                    .collect::<Option<Vec<_>>>()?,
            ),
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservationSource {
    ReturnValue,
    ReceiverState,
    Exception,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Statement index in the stripped method.
    pub line: usize,
    pub source: ObservationSource,
    /// Expression reproducing the value right after the statement.
    pub target: String,
    pub snapshot: Snapshot,
}

impl Observation {
    fn key(&self) -> (usize, ObservationSource, String) {
        (self.line, self.source, self.target.clone())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    pub lines: BTreeMap<usize, Vec<Observation>>,
    pub wrapped: BTreeSet<usize>,
}

impl ObservationSet {
    pub fn all(&self) -> impl Iterator<Item = &Observation> {
        self.lines.values().flatten()
    }

    pub fn at(&self, line: usize) -> &[Observation] {
        self.lines.get(&line).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn return_value(&self, line: usize) -> Option<&Observation> {
        self.at(line).iter().find(|o| o.source == ObservationSource::ReturnValue)
    }

    pub fn exception(&self, line: usize) -> Option<&Observation> {
        self.at(line).iter().find(|o| o.source == ObservationSource::Exception)
    }

    fn push(&mut self, o: Observation) {
        self.lines.entry(o.line).or_default().push(o);
    }

    fn sort(&mut self) {
        for obs in self.lines.values_mut() {
            obs.sort_by(|a, b| a.source.cmp(&b.source).then_with(|| a.target.cmp(&b.target)));
        }
    }
}

/// The exception that escaped an unwrapped statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaisedAt {
    pub line: usize,
    pub exception: TypeInfo,
}

#[derive(Deserialize)]
struct WireLine {
    index: usize,
    mut_call: bool,
    ret: Option<Snapshot>,
    exc: Option<TypeInfo>,
    states: BTreeMap<String, Snapshot>,
}

#[derive(Deserialize)]
struct WireRaised {
    index: usize,
    #[serde(rename = "type")]
    ty: TypeInfo,
}

#[derive(Deserialize)]
struct WireRun {
    lines: Vec<WireLine>,
    raised: Option<WireRaised>,
    teardown_error: Option<String>,
}

/// What the harness executes for one statement.
struct Plan {
    src: String,
    expr_stmt: bool,
    target: Option<String>,
    refs: Vec<String>,
}

fn plan(method: &TestMethod) -> Vec<Plan> {
    let mut locals = BTreeSet::new();
    method
        .body
        .iter()
        .map(|st| {
            bind_names(&st.node, &mut locals);
            let (expr_stmt, target) = match &st.node {
                Stmt::Expr(_) => (true, None),
                Stmt::Assign { targets, .. } => match targets.as_slice() {
                    [Expr::Name(n)] => (false, Some(n.clone())),
                    _ => (false, None),
                },
                _ => (false, None),
            };
            Plan { src: st.source(), expr_stmt, target, refs: references(&st.node, &locals) }
        })
        .collect()
}

fn bind_names(s: &Stmt, out: &mut BTreeSet<String>) {
    let mut add = |e: &Expr| {
        e.walk(&mut |x| {
            if let Expr::Name(n) = x {
                out.insert(n.clone());
            }
        })
    };
    match s {
        Stmt::Assign { targets, .. } => targets.iter().filter(|t| !matches!(t, Expr::Attribute { .. } | Expr::Subscript { .. })).for_each(&mut add),
        Stmt::AugAssign { target: t @ Expr::Name(_), .. } => add(t),
        Stmt::With { items, body } => {
            items.iter().filter_map(|i| i.target.as_ref()).for_each(&mut add);
            for b in body {
                bind_names(b, out);
            }
        }
        _ => {}
    }
}

/// `self.<attr>` receivers and known locals mentioned by the statement.
fn references(s: &Stmt, locals: &BTreeSet<String>) -> Vec<String> {
    let mut refs = BTreeSet::new();
    let mut visit = |e: &Expr| {
        let mut callees = BTreeSet::new();
        e.walk(&mut |x| {
            if let Expr::Call { func, .. } = x {
                callees.insert(crate::python::expr_to_source(func));
            }
        });
        e.walk(&mut |x| match x {
            Expr::Attribute { value, attr } if matches!(value.as_ref(), Expr::Name(n) if n == "self") => {
                let text = format!("self.{attr}");
                if !callees.contains(&text) {
                    refs.insert(text);
                }
            }
            Expr::Name(n) if n != "self" && locals.contains(n) => {
                refs.insert(n.clone());
            }
            _ => {}
        });
    };
    match s {
        Stmt::With { body, .. } => {
            for e in s.expressions() {
                visit(e);
            }
            for b in body {
                refs.extend(references(b, locals));
            }
        }
        _ => s.expressions().into_iter().for_each(&mut visit),
    }
    refs.into_iter().collect()
}

pub struct RunOutcome {
    pub observations: ObservationSet,
    pub raised: Option<RaisedAt>,
}

/// One traced execution of `method` with the given statements wrapped.
pub fn run_traced(
    harness: &mut Harness,
    subject: &Subject,
    method: &TestMethod,
    wrapped: &BTreeSet<usize>,
    timeout: f64,
) -> Result<RunOutcome, ObserveError> {
    let plans = plan(method);
    let statements: Vec<_> = plans
        .iter()
        .enumerate()
        .map(|(i, p)| {
            json!({
                "src": p.src,
                "mode": if p.expr_stmt { "expr" } else { "exec" },
                "target": p.target,
                "refs": p.refs,
                "wrapped": wrapped.contains(&i),
            })
        })
        .collect();
    let raw = harness.observe(&subject.ctx, &subject.class, json!(statements), timeout).map_err(|e| match e {
        HarnessError::Failed(msg) => ObserveError::Fixture(msg),
        other => ObserveError::Harness(other),
    })?;
    let run: WireRun = serde_json::from_value(raw).map_err(|e| HarnessError::Protocol(e.to_string()))?;
    if let Some(err) = run.teardown_error {
        return Err(ObserveError::Fixture(err));
    }
    let mut set = ObservationSet { wrapped: wrapped.clone(), ..Default::default() };
    for line in run.lines {
        let i = line.index;
        let p = &plans[i];
        if wrapped.contains(&i) {
            // a wrapped statement that did not raise is recorded as `None`
            let snapshot = match line.exc {
                Some(ty) => Snapshot::Raises { ty },
                None => Snapshot::None,
            };
            set.push(Observation { line: i, source: ObservationSource::Exception, target: p.src.clone(), snapshot });
            continue;
        }
        let mut returned = false;
        if let Some(ret) = line.ret.filter(|r| line.mut_call && *r != Snapshot::None) {
            let target = if p.expr_stmt { Some(p.src.clone()) } else { p.target.clone() };
            if let Some(target) = target {
                returned = p.expr_stmt;
                set.push(Observation { line: i, source: ObservationSource::ReturnValue, target, snapshot: ret });
            }
        }
        if returned {
            continue;
        }
        for (r, snap) in line.states {
            for m in snap.members() {
                let target = if m.call { format!("{r}.{}()", m.name) } else { format!("{r}.{}", m.name) };
                set.push(Observation { line: i, source: ObservationSource::ReceiverState, target, snapshot: m.snap.clone() });
            }
        }
    }
    set.sort();
    let raised = run.raised.map(|r| RaisedAt { line: r.index, exception: r.ty });
    Ok(RunOutcome { observations: set, raised })
}

/// Observes `method` F times, wrapping raising statements, and keeps only
/// observations identical in every run.
pub fn observe(
    harness: &mut Harness,
    subject: &Subject,
    method: &TestMethod,
    runs: usize,
    timeout: f64,
) -> Result<ObservationSet, ObserveError> {
    let runs = runs.max(1);
    let mut wrapped = BTreeSet::new();
    'restart: loop {
        let mut sets: Vec<ObservationSet> = Vec::new();
        while sets.len() < runs {
            let out = run_traced(harness, subject, method, &wrapped, timeout)?;
            if let Some(r) = out.raised {
                if wrapped.len() >= W_MAX {
                    return Err(ObserveError::ExhaustedWraps);
                }
                log::debug!("wrapping statement {} of {} ({})", r.line, method.name, r.exception.name);
                wrapped.insert(r.line);
                continue 'restart;
            }
            sets.push(out.observations);
        }
        return filter_stable(sets);
    }
}

/// Intersection of runs by (line, source, target) with equal snapshots.
pub fn filter_stable(mut sets: Vec<ObservationSet>) -> Result<ObservationSet, ObserveError> {
    let mut first = sets.remove(0);
    for line in first.wrapped.clone() {
        let exc = first.exception(line).map(|o| o.snapshot.clone());
        let stable = matches!(exc, Some(Snapshot::Raises { .. }))
            && sets.iter().all(|s| s.exception(line).map(|o| &o.snapshot) == exc.as_ref());
        if !stable {
            return Err(ObserveError::Flaky(line));
        }
    }
    let others: Vec<BTreeMap<_, _>> = sets
        .iter()
        .map(|s| s.all().map(|o| (o.key(), &o.snapshot)).collect())
        .collect();
    for obs in first.lines.values_mut() {
        obs.retain(|o| {
            let key = o.key();
            others.iter().all(|m| m.get(&key) == Some(&&o.snapshot))
        });
    }
    first.lines.retain(|_, v| !v.is_empty());
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(line: usize, target: &str, v: i64) -> Observation {
        Observation {
            line,
            source: ObservationSource::ReceiverState,
            target: target.into(),
            snapshot: Snapshot::Int { v: v.to_string() },
        }
    }

    #[test]
    fn filter_keeps_only_equal_observations() {
        let mut a = ObservationSet::default();
        a.push(obs(0, "self.b.x()", 1));
        a.push(obs(0, "self.b.t()", 5));
        let mut b = ObservationSet::default();
        b.push(obs(0, "self.b.x()", 1));
        b.push(obs(0, "self.b.t()", 6));
        let kept = filter_stable(vec![a, b]).unwrap();
        let targets: Vec<_> = kept.all().map(|o| o.target.as_str()).collect();
        assert_eq!(targets, ["self.b.x()"]);
    }

    #[test]
    fn single_run_is_unfiltered() {
        let mut a = ObservationSet::default();
        a.push(obs(1, "self.b.t()", 5));
        assert_eq!(filter_stable(vec![a.clone()]).unwrap(), a);
    }

    #[test]
    fn literal_snapshots_render() {
        let s = Snapshot::List { items: vec![Snapshot::Int { v: "10".into() }, Snapshot::Int { v: "100".into() }] };
        assert_eq!(crate::python::expr_to_source(&s.to_expr().unwrap()), "[10, 100]");
        let e = Snapshot::Set { items: vec![] }.to_expr().unwrap();
        assert_eq!(crate::python::expr_to_source(&e), "set()");
    }

    #[test]
    fn references_find_receivers() {
        let st = crate::python::parse_stmt("self.b.deposit(x + self.n)").unwrap();
        let locals: BTreeSet<String> = ["x".to_string()].into();
        assert_eq!(references(&st, &locals), ["self.b", "self.n", "x"]);
        let st = crate::python::parse_stmt("self.helper(1)").unwrap();
        assert!(references(&st, &locals).is_empty());
    }
}
