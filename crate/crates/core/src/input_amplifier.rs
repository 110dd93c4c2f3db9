//! Input amplification: literal and call transformations applied for `n`
//! rounds with random pruning to `T`, then assertion amplification and
//! sorting by modification count.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assertion_amplifier::{amplify_assertions, AssertionConfig};
use crate::python::{parse_expr, Arg, Constant, Expr, Stmt};
use crate::runtime::{Harness, Subject};
use crate::suite_model::{
    recognize_assertions, strip_assertions, AssertionTable, Lineage, LiteralOperator, Origin, Statement, TestMethod,
    Transformation,
};
use crate::type_profiler::{sample_value, TypeProfile};

const RANDOM_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amplifier {
    /// Numbers, strings and booleans.
    Literal,
    /// A literal replaced by another literal of the same type in the method.
    Unify,
    RemoveCall,
    DuplicateCall,
    AddCall,
}

impl Amplifier {
    pub const ALL: [Amplifier; 5] =
        [Amplifier::Literal, Amplifier::Unify, Amplifier::RemoveCall, Amplifier::DuplicateCall, Amplifier::AddCall];

    pub fn name(self) -> &'static str {
        match self {
            Amplifier::Literal => "literal",
            Amplifier::Unify => "unify",
            Amplifier::RemoveCall => "remove_call",
            Amplifier::DuplicateCall => "duplicate_call",
            Amplifier::AddCall => "add_call",
        }
    }

    /// Whether this amplifier can transform anything in `m`.
    pub fn applies_to(self, m: &TestMethod, profile: &TypeProfile) -> bool {
        match self {
            Amplifier::Literal | Amplifier::Unify => !literal_sites(m).is_empty(),
            Amplifier::RemoveCall | Amplifier::DuplicateCall => (0..m.body.len()).any(|i| is_tracked_call(&m.body[i].node, profile)),
            Amplifier::AddCall => !profile.callables.is_empty(),
        }
    }

    /// Single-transformation variants of `m`.
    pub fn apply(self, m: &TestMethod, profile: &TypeProfile, rng: &mut ChaCha8Rng) -> Vec<Transformation> {
        match self {
            Amplifier::Literal => literal_variants(m, rng),
            Amplifier::Unify => unify_variants(m),
            Amplifier::RemoveCall => tracked_calls(m, profile).map(|stmt| Transformation::RemoveCall { stmt }).collect(),
            Amplifier::DuplicateCall => tracked_calls(m, profile).map(|stmt| Transformation::DuplicateCall { stmt }).collect(),
            Amplifier::AddCall => add_call_variants(m, profile, rng),
        }
    }
}

impl fmt::Display for Amplifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Amplifier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Amplifier::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| format!("unknown amplifier `{}` (known: {})", s.trim(), Amplifier::ALL.map(|a| a.name()).join(", ")))
    }
}

/// Parses a comma-separated amplifier list.
pub fn parse_amplifiers(csv: &str) -> Result<Vec<Amplifier>, String> {
    let mut out = Vec::new();
    for part in csv.split(',').filter(|p| !p.trim().is_empty()) {
        let a: Amplifier = part.parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------- literals

fn is_amplifiable(c: &Constant) -> bool {
    matches!(c, Constant::Int(_) | Constant::Float(_) | Constant::Str(_) | Constant::Bool(_))
}

fn same_type(a: &Constant, b: &Constant) -> bool {
    std::mem::discriminant(a) == std::mem::discriminant(b)
}

/// Literal sites as (statement, ordinal within statement, value).
pub fn literal_sites(m: &TestMethod) -> Vec<(usize, usize, Constant)> {
    let mut out = Vec::new();
    for (i, st) in m.body.iter().enumerate() {
        // docstrings and other bare constants
        if matches!(st.node, Stmt::Expr(Expr::Const(_))) {
            continue;
        }
        let mut ordinal = 0;
        for e in st.node.expressions() {
            e.walk(&mut |x| {
                if let Expr::Const(c) = x {
                    if is_amplifiable(c) {
                        out.push((i, ordinal, c.clone()));
                        ordinal += 1;
                    }
                }
            });
        }
    }
    out
}

fn set_literal(st: &mut Stmt, ordinal: usize, to: &Constant) -> bool {
    let mut seen = 0;
    let mut done = false;
    for e in st.expressions_mut() {
        e.walk_mut(&mut |x| {
            if done {
                return false;
            }
            if let Expr::Const(c) = x {
                if is_amplifiable(c) {
                    if seen == ordinal {
                        *c = to.clone();
                        done = true;
                    }
                    seen += 1;
                }
            }
            true
        });
    }
    done
}

/// Values produced by the literal operators, paired with the operator.
pub fn literal_values(c: &Constant, rng: &mut ChaCha8Rng) -> Vec<(LiteralOperator, Constant)> {
    use LiteralOperator::*;
    let mut out: Vec<(LiteralOperator, Constant)> = match c {
        Constant::Int(v) => vec![
            (Zero, Constant::Int(0)),
            (Increment, Constant::Int(v + 1)),
            (Decrement, Constant::Int(v - 1)),
            (Double, Constant::Int(v * 2)),
            (Halve, Constant::Int(v.div_euclid(2))),
        ],
        Constant::Float(v) => vec![
            (Zero, Constant::Float(0.0)),
            (Increment, Constant::Float(v + 1.0)),
            (Decrement, Constant::Float(v - 1.0)),
            (Double, Constant::Float(v * 2.0)),
            (Halve, Constant::Float(v / 2.0)),
        ],
        Constant::Bool(b) => vec![(Negate, Constant::Bool(!b))],
        Constant::Str(s) if s.is_empty() => {
            let ch = RANDOM_CHARS[rng.gen_range(0..RANDOM_CHARS.len())] as char;
            vec![(RandomChar, Constant::Str(ch.to_string()))]
        }
        Constant::Str(s) => {
            let chars: Vec<char> = s.chars().collect();
            let half = chars.len() / 2;
            let start = rng.gen_range(0..=chars.len() - half);
            vec![
                (Concat, Constant::Str(format!("{s}{s}"))),
                (Substring, Constant::Str(chars[start..start + half].iter().collect())),
                (Empty, Constant::Str(String::new())),
            ]
        }
        _ => Vec::new(),
    };
    let mut seen = vec![c.clone()];
    out.retain(|(_, v)| {
        let finite = !matches!(v, Constant::Float(f) if !f.is_finite());
        let fresh = finite && !seen.contains(v);
        seen.push(v.clone());
        fresh
    });
    out
}

fn literal_variants(m: &TestMethod, rng: &mut ChaCha8Rng) -> Vec<Transformation> {
    let mut out = Vec::new();
    for (stmt, ordinal, from) in literal_sites(m) {
        for (operator, to) in literal_values(&from, rng) {
            out.push(Transformation::Literal { stmt, ordinal, operator, from: from.clone(), to });
        }
    }
    out
}

fn unify_variants(m: &TestMethod) -> Vec<Transformation> {
    let sites = literal_sites(m);
    let mut values: Vec<Constant> = Vec::new();
    for (_, _, c) in &sites {
        if !values.contains(c) {
            values.push(c.clone());
        }
    }
    let mut out = Vec::new();
    for (stmt, ordinal, from) in &sites {
        for to in values.iter().filter(|v| same_type(v, from) && *v != from) {
            out.push(Transformation::Literal {
                stmt: *stmt,
                ordinal: *ordinal,
                operator: LiteralOperator::Unify,
                from: from.clone(),
                to: to.clone(),
            });
        }
    }
    out
}

// ---------------------------------------------------------------- calls

fn receiver_root(e: &Expr) -> Option<String> {
    match e {
        Expr::Name(n) => Some(n.clone()),
        Expr::Attribute { value, attr } if matches!(value.as_ref(), Expr::Name(n) if n == "self") => Some(format!("self.{attr}")),
        Expr::Attribute { value, .. } | Expr::Call { func: value, .. } | Expr::Subscript { value, .. } => receiver_root(value),
        _ => None,
    }
}

/// Expression statements calling a method of a profiled receiver or a
/// function of the module under test.
fn is_tracked_call(st: &Stmt, profile: &TypeProfile) -> bool {
    let Stmt::Expr(Expr::Call { func, .. }) = st else { return false };
    if let Expr::Attribute { value, .. } = func.as_ref() {
        if receiver_root(value).is_some_and(|r| profile.receivers.contains_key(&r)) {
            return true;
        }
    }
    let callee = crate::python::expr_to_source(func);
    profile.callables.iter().any(|c| c.owner.is_none() && c.expr.as_deref() == Some(callee.as_str()))
}

fn tracked_calls<'a>(m: &'a TestMethod, profile: &'a TypeProfile) -> impl Iterator<Item = usize> + 'a {
    (0..m.body.len()).filter(move |&i| is_tracked_call(&m.body[i].node, profile))
}

/// First statement binding `name` in the body.
fn binding_index(m: &TestMethod, name: &str) -> Option<usize> {
    m.body.iter().position(|st| match &st.node {
        Stmt::Assign { targets, .. } => targets.iter().any(|t| crate::python::expr_to_source(t) == name),
        _ => false,
    })
}

fn add_call_variants(m: &TestMethod, profile: &TypeProfile, rng: &mut ChaCha8Rng) -> Vec<Transformation> {
    // receivers with the first position a call on them may be inserted at
    let receivers: Vec<(&String, &String, usize)> = profile
        .receivers
        .iter()
        .filter_map(|(r, ty)| match binding_index(m, r) {
            Some(i) => Some((r, ty, i + 1)),
            None if r.starts_with("self.") => Some((r, ty, 0)),
            None => None,
        })
        .collect();
    let functions: Vec<_> = profile.callables.iter().filter(|c| c.owner.is_none() && c.expr.is_some()).collect();
    let mut out = Vec::new();
    for position in 0..=m.body.len() {
        let mut options: Vec<(Option<&str>, &crate::type_profiler::Callable)> = Vec::new();
        for (r, ty, from) in &receivers {
            if position >= *from {
                options.extend(profile.methods_of(ty).map(|c| (Some(r.as_str()), c)));
            }
        }
        options.extend(functions.iter().map(|c| (None, *c)));
        if options.is_empty() {
            continue;
        }
        let (receiver, callable) = options[rng.gen_range(0..options.len())];
        let mut args = Vec::new();
        for pos in 0..callable.arity {
            let types = profile.param_types(&callable.qualname, pos);
            if types.is_empty() {
                break;
            }
            let ty = types[rng.gen_range(0..types.len())];
            match sample_value(ty, profile, rng) {
                Ok(c) => args.push(Arg::Positional(Expr::Const(c))),
                Err(_) => break,
            }
        }
        if args.len() != callable.arity {
            continue;
        }
        let func = match receiver {
            Some(r) => match parse_expr(r) {
                Ok(e) => Expr::attr(e, &callable.name),
                Err(_) => continue,
            },
            None => match callable.expr.as_deref().map(parse_expr) {
                Some(Ok(e)) => e,
                _ => continue,
            },
        };
        let statement = Stmt::Expr(Expr::Call { func: Box::new(func), args });
        out.push(Transformation::AddCall { position, statement });
    }
    out
}

// ---------------------------------------------------------------- replay

/// Applies one transformation to a method body. Returns `None` when the
/// transformation does not fit the body.
pub fn apply(body: &[Statement], t: &Transformation) -> Option<Vec<Statement>> {
    let mut out = body.to_vec();
    match t {
        Transformation::Literal { stmt, ordinal, to, .. } => {
            let st = out.get_mut(*stmt)?;
            if !set_literal(&mut st.node, *ordinal, to) {
                return None;
            }
        }
        Transformation::RemoveCall { stmt } => {
            if *stmt >= out.len() {
                return None;
            }
            out.remove(*stmt);
        }
        Transformation::DuplicateCall { stmt } => {
            let copy = out.get(*stmt)?.clone();
            out.insert(stmt + 1, copy);
        }
        Transformation::AddCall { position, statement } => {
            if *position > out.len() {
                return None;
            }
            out.insert(*position, Statement::original(statement.clone()));
        }
    }
    Some(out)
}

/// Replays a transformation log on a stripped method. The result records
/// the log as its lineage.
pub fn replay(stripped: &TestMethod, log: &[Transformation]) -> Option<TestMethod> {
    let mut m = stripped.detached();
    for t in log {
        m.body = apply(&m.body, t)?;
    }
    if !log.is_empty() {
        let ancestor = stripped.lineage.as_ref().map(|l| l.ancestor.clone()).unwrap_or_else(|| stripped.name.clone());
        m.origin = Origin::Amplified;
        m.lineage = Some(Lineage { ancestor, transformations: log.to_vec() });
    }
    Some(m)
}

// ---------------------------------------------------------------- loop

#[derive(Debug, Clone, Serialize)]
pub struct Generated {
    pub variants: Vec<TestMethod>,
    /// Pool size after pruning, per iteration.
    pub pool_sizes: Vec<usize>,
}

/// The transformation rounds of input amplification, without assertion
/// amplification. Variants carry their lineage and transformation log.
pub fn generate(
    stripped: &TestMethod,
    amps: &[Amplifier],
    n: usize,
    t: usize,
    profile: &TypeProfile,
    rng: &mut ChaCha8Rng,
) -> Generated {
    let ancestor = stripped.lineage.as_ref().map(|l| l.ancestor.clone()).unwrap_or_else(|| stripped.name.clone());
    let mut root = stripped.detached();
    root.lineage = Some(Lineage { ancestor: ancestor.clone(), transformations: Vec::new() });
    let mut seen: Vec<Vec<Statement>> = vec![root.body.clone()];
    let mut temp = vec![root];
    let mut results: Vec<TestMethod> = Vec::new();
    let mut pool_sizes = Vec::new();
    if amps.is_empty() {
        return Generated { variants: results, pool_sizes };
    }
    for _ in 0..n {
        let mut round_rng = ChaCha8Rng::from_seed(rng.gen());
        let mut pool: Vec<TestMethod> = Vec::new();
        for m in &temp {
            let log = &m.lineage.as_ref().expect("variants carry lineage").transformations;
            for amp in amps {
                for tr in amp.apply(m, profile, &mut round_rng) {
                    let Some(body) = apply(&m.body, &tr) else { continue };
                    if seen.contains(&body) {
                        continue;
                    }
                    seen.push(body.clone());
                    let mut transformations = log.clone();
                    transformations.push(tr);
                    let mut v = TestMethod::new(m.name.clone(), body);
                    v.origin = Origin::Amplified;
                    v.lineage = Some(Lineage { ancestor: ancestor.clone(), transformations });
                    pool.push(v);
                }
            }
        }
        if pool.len() > t {
            let mut keep = sample(&mut round_rng, pool.len(), t).into_vec();
            keep.sort_unstable();
            let mut it = keep.into_iter().peekable();
            pool = pool
                .into_iter()
                .enumerate()
                .filter_map(|(i, v)| {
                    if it.peek() == Some(&i) {
                        it.next();
                        Some(v)
                    } else {
                        None
                    }
                })
                .collect();
        }
        pool_sizes.push(pool.len());
        results.extend(pool.iter().cloned());
        if pool.is_empty() {
            break;
        }
        temp = pool;
    }
    Generated { variants: results, pool_sizes }
}

#[derive(Debug, Clone, Serialize)]
pub struct AmplifiedCandidate {
    pub method: TestMethod,
    pub transformations: Vec<Transformation>,
    pub n_transformations: usize,
    pub n_all_assertions: usize,
    pub n_original_assertions: usize,
    pub modification_count: i64,
    /// Generation order, the final tie-breaker.
    pub ordinal: usize,
}

impl AmplifiedCandidate {
    pub fn new(method: TestMethod, n_original_assertions: usize, table: &AssertionTable, ordinal: usize) -> Self {
        let transformations = method.lineage.as_ref().map(|l| l.transformations.clone()).unwrap_or_default();
        let n_all_assertions = recognize_assertions(&method, table).len();
        let n_transformations = transformations.len();
        AmplifiedCandidate {
            modification_count: modification_count(n_all_assertions, n_transformations, n_original_assertions),
            method,
            transformations,
            n_transformations,
            n_all_assertions,
            n_original_assertions,
            ordinal,
        }
    }
}

pub fn modification_count(n_all_assertions: usize, n_transformations: usize, n_original_assertions: usize) -> i64 {
    n_all_assertions as i64 + n_transformations as i64 - n_original_assertions as i64
}

/// Ascending modification count, then fewer transformations, then
/// generation order.
pub fn sort_candidates(c: &mut [AmplifiedCandidate]) {
    c.sort_by_key(|a| (a.modification_count, a.n_transformations, a.ordinal));
}

#[derive(Debug, Clone)]
pub struct InputConfig {
    pub amplifiers: Vec<Amplifier>,
    pub iterations: usize,
    pub max_pool: usize,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig { amplifiers: Amplifier::ALL.to_vec(), iterations: 3, max_pool: 200 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct InputResult {
    pub candidates: Vec<AmplifiedCandidate>,
    pub pool_sizes: Vec<usize>,
    /// Variants dropped during assertion amplification, with the reason.
    pub dropped: Vec<(Vec<Transformation>, String)>,
}

/// Full input amplification of `test`: generate variants of its stripped
/// form, assertion-amplify each (dropping those that fail), sort.
#[allow(clippy::too_many_arguments)]
pub fn amplify_inputs(
    harness: &mut Harness,
    subject: &Subject,
    test: &TestMethod,
    n_original_assertions: usize,
    cfg: &InputConfig,
    acfg: &AssertionConfig,
    profile: &TypeProfile,
    rng: &mut ChaCha8Rng,
) -> InputResult {
    let stripped = strip_assertions(test, &acfg.table);
    let generated = generate(&stripped, &cfg.amplifiers, cfg.iterations, cfg.max_pool, profile, rng);
    let mut result = InputResult { pool_sizes: generated.pool_sizes, ..Default::default() };
    let mut bodies: BTreeSet<String> = BTreeSet::new();
    for (ordinal, v) in generated.variants.into_iter().enumerate() {
        match amplify_assertions(harness, subject, &v, acfg) {
            Ok(a) => {
                if bodies.insert(a.method.source_lines(0)[1..].join("\n")) {
                    result.candidates.push(AmplifiedCandidate::new(a.method, n_original_assertions, &acfg.table, ordinal));
                }
            }
            Err(e) => {
                log::debug!("dropping variant of {}: {e}", test.name);
                let log = v.lineage.map(|l| l.transformations).unwrap_or_default();
                result.dropped.push((log, e.to_string()));
            }
        }
    }
    sort_candidates(&mut result.candidates);
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    #[test]
    fn number_operators() {
        let vals: Vec<_> = literal_values(&Constant::Int(10), &mut rng()).into_iter().map(|(_, v)| v).collect();
        assert_eq!(vals, [0, 11, 9, 20, 5].map(Constant::Int));
        // duplicates and the original value are dropped
        let vals: Vec<_> = literal_values(&Constant::Int(0), &mut rng()).into_iter().map(|(_, v)| v).collect();
        assert_eq!(vals, [1, -1].map(Constant::Int));
        let vals: Vec<_> = literal_values(&Constant::Int(-5), &mut rng()).into_iter().map(|(_, v)| v).collect();
        assert_eq!(vals, [0, -4, -6, -10, -3].map(Constant::Int));
    }

    #[test]
    fn string_operators() {
        let vals = literal_values(&Constant::Str("Iwena Kroka".into()), &mut rng());
        let Constant::Str(doubled) = &vals[0].1 else { panic!() };
        assert_eq!(doubled.len(), 22);
        let Constant::Str(sub) = &vals[1].1 else { panic!() };
        assert_eq!(sub.chars().count(), 5);
        assert!("Iwena Kroka".contains(sub.as_str()));
        assert_eq!(vals[2].1, Constant::Str(String::new()));
        let vals = literal_values(&Constant::Str(String::new()), &mut rng());
        let Constant::Str(c) = &vals[0].1 else { panic!() };
        assert!(c.len() == 1 && c.chars().all(|c| c.is_ascii_alphanumeric()));
    }

    #[test]
    fn amplifier_names_parse() {
        assert_eq!(parse_amplifiers("literal, add_call").unwrap(), [Amplifier::Literal, Amplifier::AddCall]);
        assert!(parse_amplifiers("literal,bogus").is_err());
    }
}
