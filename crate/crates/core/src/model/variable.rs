use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// A discrete random variable with states `0..cardinality`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Variable {
    name: String,
    cardinality: usize,
}

impl Variable {
    pub fn new(name: impl Into<String>, cardinality: usize) -> Result<Self> {
        let name = name.into();
        if !is_identifier(&name) {
            return Err(Error::invalid(format!("`{name}` is not a valid variable name")));
        }
        if cardinality < 2 {
            return Err(Error::invalid(format!(
                "variable `{name}` needs at least 2 states, got {cardinality}"
            )));
        }
        Ok(Variable { name, cardinality })
    }

    /// Shorthand for a two-state variable.
    pub fn binary(name: impl Into<String>) -> Self {
        Variable::new(name, 2).expect("binary variable name must be an identifier")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cardinality(&self) -> usize {
        self.cardinality
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.cardinality)
    }
}

/// Names are ASCII letters, digits and `_`, not starting with a digit.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks that names are unique.
pub(crate) fn check_unique(vars: &[Variable]) -> Result<()> {
    for (i, v) in vars.iter().enumerate() {
        if vars[..i].iter().any(|w| w.name == v.name) {
            return Err(Error::invalid(format!("duplicate variable `{}`", v.name)));
        }
    }
    Ok(())
}

/// A (possibly partial) binding of variable names to state indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    bindings: BTreeMap<String, usize>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, state: usize) -> Self {
        self.bindings.insert(name.into(), state);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, state: usize) {
        self.bindings.insert(name.into(), state);
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.bindings.get(name).copied()
    }

    pub fn remove(&mut self, name: &str) -> Option<usize> {
        self.bindings.remove(name)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Builds a full assignment from per-variable states in table order.
    pub fn from_states(vars: &[Variable], states: &[usize]) -> Self {
        let bindings = vars
            .iter()
            .zip(states)
            .map(|(v, &s)| (v.name.clone(), s))
            .collect();
        Assignment { bindings }
    }

    /// Every bound state must be in range for a known variable.
    pub fn validate(&self, vars: &[Variable]) -> Result<()> {
        for (name, state) in self.iter() {
            let var = vars
                .iter()
                .find(|v| v.name == name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))?;
            if state >= var.cardinality {
                return Err(Error::invalid(format!(
                    "state {state} out of range for `{name}` (cardinality {})",
                    var.cardinality
                )));
            }
        }
        Ok(())
    }
}

impl<S: Into<String>> FromIterator<(S, usize)> for Assignment {
    fn from_iter<T: IntoIterator<Item = (S, usize)>>(iter: T) -> Self {
        Assignment {
            bindings: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

impl fmt::Display for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, (k, v)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

/// Row-major enumeration of every state tuple for the given cardinalities
/// (the last position varies fastest).
pub fn state_tuples(cards: &[usize]) -> StateTuples {
    StateTuples {
        cards: cards.to_vec(),
        next: if cards.contains(&0) {
            None
        } else {
            Some(vec![0; cards.len()])
        },
    }
}

#[derive(Debug, Clone)]
pub struct StateTuples {
    cards: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl Iterator for StateTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut pos = succ.len();
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            succ[pos] += 1;
            if succ[pos] < self.cards[pos] {
                self.next = Some(succ);
                break;
            }
            succ[pos] = 0;
        }
        Some(current)
    }
}
