//! Dynamic type profile of a test: argument types of calls into the module
//! under test, types of test variables, literal value pools and the
//! callables available for call insertion.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::observer::Snapshot;
use crate::python::Constant;
use crate::runtime::{Harness, HarnessError, Subject};

pub const INT_RANGE: (i64, i64) = (-65536, 65535);
pub const MAX_STR_LEN: usize = 8;
/// Probability of drawing from the value pool instead of generating.
pub const P_POOL: f64 = 0.5;

pub const INT: &str = "builtins.int";
pub const STR: &str = "builtins.str";
pub const BOOL: &str = "builtins.bool";

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("profiled test did not pass: {0}")]
    NotGreen(String),
    #[error("no values available for type {0}")]
    UnsupportedType(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Callable {
    /// Receiver type for methods; `None` for module-level functions.
    pub owner: Option<String>,
    pub name: String,
    pub qualname: String,
    /// Required positional parameters, excluding the receiver.
    pub arity: usize,
    /// Expression calling a function from the test module.
    pub expr: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile {
    /// callable qualified name → parameter position → observed type names.
    pub arg_types: BTreeMap<String, BTreeMap<usize, BTreeSet<String>>>,
    pub var_types: BTreeMap<String, BTreeSet<String>>,
    pub value_pool: BTreeMap<String, Vec<Snapshot>>,
    pub callables: BTreeSet<Callable>,
    /// Test variables (`b`, `self.b`) holding module-under-test objects.
    pub receivers: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct Wire {
    status: String,
    detail: Option<String>,
    arg_types: BTreeMap<String, Vec<String>>,
    var_types: BTreeMap<String, Vec<String>>,
    value_pool: BTreeMap<String, Vec<Snapshot>>,
    receivers: BTreeMap<String, String>,
    callables: Vec<Callable>,
}

impl TypeProfile {
    pub fn is_empty(&self) -> bool {
        self.arg_types.is_empty() && self.var_types.is_empty() && self.callables.is_empty()
    }

    /// Observed types of parameter `pos` of `callable`.
    pub fn param_types(&self, callable: &str, pos: usize) -> Vec<&str> {
        self.arg_types
            .get(callable)
            .and_then(|m| m.get(&pos))
            .map(|s| s.iter().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Callables that can be invoked on a receiver of type `ty`.
    pub fn methods_of<'a>(&'a self, ty: &'a str) -> impl Iterator<Item = &'a Callable> + 'a {
        self.callables.iter().filter(move |c| c.owner.as_deref() == Some(ty))
    }
}

/// Profiles the original test method with its fixtures.
pub fn profile(harness: &mut Harness, subject: &Subject, method: &str, timeout: f64) -> Result<TypeProfile, ProfileError> {
    let raw = harness.profile(&subject.ctx, &subject.class, method, timeout)?;
    let w: Wire = serde_json::from_value(raw).map_err(|e| HarnessError::Protocol(e.to_string()))?;
    if w.status != "pass" {
        return Err(ProfileError::NotGreen(w.detail.unwrap_or(w.status)));
    }
    let mut p = TypeProfile {
        var_types: w.var_types.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect(),
        value_pool: w.value_pool,
        receivers: w.receivers,
        callables: w.callables.into_iter().collect(),
        ..Default::default()
    };
    for (key, types) in w.arg_types {
        let Some((name, pos)) = key.rsplit_once('#') else { continue };
        let Ok(pos) = pos.parse::<usize>() else { continue };
        p.arg_types.entry(name.to_string()).or_default().entry(pos).or_default().extend(types);
    }
    Ok(p)
}

fn snapshot_constant(s: &Snapshot) -> Option<Constant> {
    match s {
        Snapshot::None => Some(Constant::None),
        Snapshot::Bool { v } => Some(Constant::Bool(*v)),
        Snapshot::Int { v } => v.parse::<i128>().ok().map(Constant::Int),
        Snapshot::Float { v } => v.parse::<f64>().ok().map(Constant::Float),
        Snapshot::Str { v } => Some(Constant::Str(v.clone())),
        _ => None,
    }
}

/// Characters of generated strings: printable ASCII without quotes.
pub fn string_alphabet() -> Vec<char> {
    (0x20u8..0x7f).map(char::from).filter(|c| *c != '\'' && *c != '"').collect()
}

/// Draws a literal of `type_name`: from the value pool with probability
/// [`P_POOL`] (or always, for types that cannot be generated), otherwise
/// freshly generated.
pub fn sample_value<R: Rng + ?Sized>(type_name: &str, profile: &TypeProfile, rng: &mut R) -> Result<Constant, ProfileError> {
    let pool: Vec<Constant> = profile
        .value_pool
        .get(type_name)
        .map(|v| v.iter().filter_map(snapshot_constant).collect())
        .unwrap_or_default();
    let generatable = matches!(type_name, INT | STR | BOOL);
    let from_pool = !pool.is_empty() && (!generatable || rng.gen_bool(P_POOL));
    if from_pool {
        return Ok(pool[rng.gen_range(0..pool.len())].clone());
    }
    match type_name {
        INT => Ok(Constant::Int(rng.gen_range(INT_RANGE.0..=INT_RANGE.1) as i128)),
        BOOL => Ok(Constant::Bool(rng.gen_bool(0.5))),
        STR => {
            let alphabet = string_alphabet();
            let len = rng.gen_range(0..=MAX_STR_LEN);
            Ok(Constant::Str((0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())]).collect()))
        }
        other => Err(ProfileError::UnsupportedType(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_ints_stay_in_range() {
        let p = TypeProfile::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let Constant::Int(v) = sample_value(INT, &p, &mut rng).unwrap() else { panic!() };
            assert!((-65536..=65535).contains(&v));
        }
    }

    #[test]
    fn pool_only_types() {
        let mut p = TypeProfile::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_value("builtins.float", &p, &mut rng), Err(ProfileError::UnsupportedType(_))));
        p.value_pool.insert("builtins.float".into(), vec![Snapshot::Float { v: "2.5".into() }]);
        assert_eq!(sample_value("builtins.float", &p, &mut rng).unwrap(), Constant::Float(2.5));
    }
}
