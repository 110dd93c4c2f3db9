//! Regenerates assertions from observations: strip, observe, then insert
//! assertions line by line.

use thiserror::Error;

use crate::observer::{self, Observation, ObservationSet, ObservationSource, ObserveError, Snapshot};
use crate::python::{parse_expr, Arg, Constant, Expr, Stmt, WithItem};
use crate::runtime::{Harness, HarnessError, Subject, TestStatus};
use crate::suite_model::{
    assertion_call, recognize_assertions, strip_assertions, AssertKind, AssertionTable, Lineage, Origin, Provenance,
    Statement, TestMethod,
};

/// Default `places` of the framework's almost-equal assertion.
pub const DEFAULT_PLACES: u32 = 7;

#[derive(Debug, Error)]
pub enum AmplifyError {
    #[error(transparent)]
    Observe(#[from] ObserveError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("amplified test does not pass: {0}")]
    NotGreen(String),
}

#[derive(Debug, Clone)]
pub struct AssertionConfig {
    /// Number of observation runs (F).
    pub runs: usize,
    pub places: u32,
    pub timeout: f64,
    pub table: AssertionTable,
}

impl Default for AssertionConfig {
    fn default() -> Self {
        AssertionConfig { runs: 2, places: DEFAULT_PLACES, timeout: 30.0, table: AssertionTable::default() }
    }
}

#[derive(Debug, Clone)]
pub struct Amplified {
    pub method: TestMethod,
    pub observations: ObservationSet,
}

fn self_call(name: &str, args: Vec<Expr>) -> Stmt {
    assertion_call(name, args.into_iter().map(Arg::Positional).collect())
}

/// Assertions reproducing one observation. Values that cannot be written
/// as literals yield an is-instance check for return values and nothing for
/// state members.
pub fn synthesize_assertion(obs: &Observation, places: u32) -> Vec<Stmt> {
    let Ok(target) = parse_expr(&obs.target) else { return Vec::new() };
    let snap = &obs.snapshot;
    match snap {
        Snapshot::Bool { v: true } => vec![self_call("assertTrue", vec![target])],
        Snapshot::Bool { v: false } => vec![self_call("assertFalse", vec![target])],
        Snapshot::None => vec![self_call("assertIsNone", vec![target])],
        Snapshot::Float { .. } => {
            let Some(lit) = snap.to_expr() else { return Vec::new() };
            let mut args = vec![Arg::Positional(target), Arg::Positional(lit)];
            if places != DEFAULT_PLACES {
                args.push(Arg::Keyword("places".into(), Expr::Const(Constant::Int(places as i128))));
            }
            vec![assertion_call("assertAlmostEqual", args)]
        }
        Snapshot::Object { ty, .. } | Snapshot::Opaque { ty } => {
            if obs.source != ObservationSource::ReturnValue {
                return Vec::new();
            }
            match ty.best_expr().and_then(|e| parse_expr(e).ok()) {
                Some(t) => vec![self_call("assertIsInstance", vec![target, t])],
                None => Vec::new(),
            }
        }
        Snapshot::Raises { .. } => Vec::new(),
        _ => match snap.to_expr() {
            Some(lit) => vec![self_call("assertEqual", vec![target, lit])],
            None => Vec::new(),
        },
    }
}

fn raises_block(stmt: Stmt, exc: &Snapshot) -> Option<Stmt> {
    let Snapshot::Raises { ty } = exc else { return None };
    let ty = parse_expr(ty.best_expr()?).ok()?;
    let context = Expr::Call {
        func: Box::new(Expr::attr(Expr::name("self"), "assertRaises")),
        args: vec![Arg::Positional(ty)],
    };
    Some(Stmt::With { items: vec![WithItem { context, target: None }], body: vec![stmt] })
}

/// Inserts assertions for `obs` into the stripped body.
///
/// A bare expression statement with an observed return value is replaced by
/// the assertion on it. State observations follow their statement in target
/// order; a state assertion is left out when the same expression is asserted
/// as a return value further down with only such bare lines in between.
pub fn add_assertions(stripped: &[Statement], obs: &ObservationSet, places: u32) -> Vec<Statement> {
    let bare_return = |k: usize| {
        matches!(stripped[k].node, Stmt::Expr(_)) && !obs.wrapped.contains(&k) && obs.return_value(k).is_some()
    };
    let asserted_later = |i: usize, target: &str| {
        let mut k = i + 1;
        while k < stripped.len() && bare_return(k) {
            if obs.return_value(k).is_some_and(|o| o.target == target) {
                return true;
            }
            k += 1;
        }
        false
    };
    let mut out = Vec::new();
    for (i, st) in stripped.iter().enumerate() {
        if obs.wrapped.contains(&i) {
            match obs.exception(i).and_then(|o| raises_block(st.node.clone(), &o.snapshot)) {
                Some(block) => out.push(Statement { node: block, line: st.line, provenance: Provenance::Synthesized }),
                None => out.push(st.clone()),
            }
            continue;
        }
        let ret = obs.return_value(i).map(|o| synthesize_assertion(o, places)).unwrap_or_default();
        let regenerated = if st.provenance == Provenance::Regenerated {
            Provenance::Regenerated
        } else {
            Provenance::Synthesized
        };
        match (&st.node, ret.is_empty()) {
            (Stmt::Expr(_), false) => {
                out.extend(ret.into_iter().map(|node| Statement { node, line: st.line, provenance: regenerated }));
            }
            (_, _) => {
                out.push(st.clone());
                out.extend(ret.into_iter().map(|node| Statement { node, line: st.line, provenance: Provenance::Synthesized }));
            }
        }
        for o in obs.at(i).iter().filter(|o| o.source == ObservationSource::ReceiverState) {
            if asserted_later(i, &o.target) {
                continue;
            }
            for node in synthesize_assertion(o, places) {
                out.push(Statement { node, line: st.line, provenance: Provenance::Synthesized });
            }
        }
    }
    out
}

/// Name of the handwritten test a method descends from.
pub fn ancestor_of(method: &TestMethod) -> String {
    method.lineage.as_ref().map(|l| l.ancestor.clone()).unwrap_or_else(|| method.name.clone())
}

/// Strips `method`, observes it `cfg.runs` times and regenerates its
/// assertions. The result carries a provisional fresh name and has been
/// run once against the unmutated module.
pub fn amplify_assertions(
    harness: &mut Harness,
    subject: &Subject,
    method: &TestMethod,
    cfg: &AssertionConfig,
) -> Result<Amplified, AmplifyError> {
    let stripped = strip_assertions(method, &cfg.table);
    let observations = observer::observe(harness, subject, &stripped, cfg.runs, cfg.timeout)?;
    let ancestor = ancestor_of(method);
    let mut amplified = TestMethod::new(subject.test_class().fresh_name(&ancestor), add_assertions(&stripped.body, &observations, cfg.places));
    amplified.origin = Origin::Amplified;
    amplified.lineage = Some(Lineage {
        ancestor,
        transformations: method.lineage.as_ref().map(|l| l.transformations.clone()).unwrap_or_default(),
    });
    check_green(harness, subject, &amplified, cfg.timeout)?;
    Ok(Amplified { method: amplified, observations })
}

/// Runs `method` inside its class against the unmutated module.
pub fn check_green(harness: &mut Harness, subject: &Subject, method: &TestMethod, timeout: f64) -> Result<(), AmplifyError> {
    let ctx = subject.ctx_with(std::slice::from_ref(method));
    let runs = harness.run_tests(&ctx, &subject.class, std::slice::from_ref(&method.name), false, timeout)?;
    match runs.get(&method.name) {
        Some(r) if r.status == TestStatus::Pass => Ok(()),
        Some(r) => Err(AmplifyError::NotGreen(r.detail.clone().unwrap_or_default())),
        None => Err(AmplifyError::NotGreen("test did not run".into())),
    }
}

/// (kind, asserted expression, expected value) for every assertion of a
/// method, in body order.
pub fn assertion_triples(method: &TestMethod, table: &AssertionTable) -> Vec<(AssertKind, String, Option<String>)> {
    recognize_assertions(method, table)
        .into_iter()
        .map(|site| {
            let st = &method.body[site.index].node;
            let expected = match st {
                Stmt::Expr(Expr::Call { args, .. }) => {
                    args.iter().filter_map(|a| match a {
                        Arg::Positional(e) => Some(e),
                        _ => None,
                    })
                    .nth(1)
                    .map(crate::python::expr_to_source)
                }
                Stmt::With { items, .. } => items.first().and_then(|i| match &i.context {
                    Expr::Call { args, .. } => args.first().map(|a| crate::python::expr_to_source(a.value())),
                    _ => None,
                }),
                _ => None,
            };
            let asserted = site.asserted.as_ref().map(crate::python::expr_to_source).unwrap_or_else(|| {
                match st {
                    Stmt::Expr(Expr::Call { args, .. }) => args.first().map(|a| crate::python::expr_to_source(a.value())).unwrap_or_default(),
                    _ => String::new(),
                }
            });
            (site.kind, asserted, expected)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observer::{TypeInfo};

    fn o(line: usize, source: ObservationSource, target: &str, snapshot: Snapshot) -> Observation {
        Observation { line, source, target: target.into(), snapshot }
    }

    #[test]
    fn literal_kinds_map_to_assertions() {
        let show = |s: Snapshot| {
            synthesize_assertion(&o(0, ObservationSource::ReceiverState, "self.b.x()", s), 7)
                .iter()
                .map(|st| Statement::original(st.clone()).source())
                .collect::<Vec<_>>()
        };
        assert_eq!(show(Snapshot::Int { v: "10".into() }), ["self.assertEqual(self.b.x(), 10)"]);
        assert_eq!(show(Snapshot::Bool { v: false }), ["self.assertFalse(self.b.x())"]);
        assert_eq!(show(Snapshot::Float { v: "0.5".into() }), ["self.assertAlmostEqual(self.b.x(), 0.5)"]);
        assert_eq!(show(Snapshot::None), ["self.assertIsNone(self.b.x())"]);
        let ty = TypeInfo { name: "m.A".into(), expr: Some("A".into()), base_expr: None, in_mut: true };
        assert!(show(Snapshot::Object { ty, members: None }).is_empty());
    }

    #[test]
    fn return_objects_become_isinstance() {
        let ty = TypeInfo { name: "m.A".into(), expr: Some("A".into()), base_expr: None, in_mut: true };
        let st = synthesize_assertion(&o(0, ObservationSource::ReturnValue, "self.b.me()", Snapshot::Object { ty, members: None }), 7);
        assert_eq!(Statement::original(st[0].clone()).source(), "self.assertIsInstance(self.b.me(), A)");
    }

    #[test]
    fn places_are_explicit_only_when_not_default() {
        let st = synthesize_assertion(&o(0, ObservationSource::ReturnValue, "f()", Snapshot::Float { v: "1.5".into() }), 3);
        assert_eq!(Statement::original(st[0].clone()).source(), "self.assertAlmostEqual(f(), 1.5, places=3)");
    }
}
