use std::fmt;

use crate::cr::Block;
use crate::error::{Error, Result};
use crate::model::variable::{check_unique, state_tuples, Assignment, Variable};

/// Absolute tolerance for the normalization invariant.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Inputs whose total deviates from 1 by more than this are rejected outright.
pub const INPUT_NORMALIZATION_TOL: f64 = 1e-9;

/// Explicit probability table over an ordered list of discrete variables.
///
/// Entries are stored row-major over the variable order: the last variable
/// varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    vars: Vec<Variable>,
    probs: Vec<f64>,
    strides: Vec<usize>,
    strictly_positive: bool,
}

impl JointTable {
    /// Builds a table from probabilities that already sum to one (up to
    /// input round-off, which is normalized away).
    pub fn new(vars: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        check_unique(&vars)?;
        let expected: usize = vars.iter().map(Variable::cardinality).product();
        if probs.len() != expected {
            return Err(Error::invalid(format!(
                "table has {} entries, expected {expected}",
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::invalid(format!("probability {p} is not a non-negative real")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
            return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self::normalized(vars, probs, total))
    }

    /// Builds a table by normalizing non-negative weights.
    pub fn from_weights(vars: Vec<Variable>, weights: Vec<f64>) -> Result<Self> {
        check_unique(&vars)?;
        let expected: usize = vars.iter().map(Variable::cardinality).product();
        if weights.len() != expected {
            return Err(Error::invalid(format!(
                "table has {} entries, expected {expected}",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::invalid(format!("weight {w} is not a non-negative real")));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        Ok(Self::normalized(vars, weights, total))
    }

    fn normalized(vars: Vec<Variable>, mut probs: Vec<f64>, total: f64) -> Self {
        probs.iter_mut().for_each(|p| *p /= total);
        let mut strides = vec![1; vars.len()];
        for i in (0..vars.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * vars[i + 1].cardinality();
        }
        let strictly_positive = probs.iter().all(|&p| p > 0.0);
        JointTable {
            vars,
            probs,
            strides,
            strictly_positive,
        }
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub fn names(&self) -> Vec<&str> {
        self.vars.iter().map(Variable::name).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|v| v.name() == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        Ok(&self.vars[self.index_of(name)?])
    }

    pub fn cardinality(&self, name: &str) -> Result<usize> {
        Ok(self.variable(name)?.cardinality())
    }

    /// Flat index of a full state tuple.
    pub fn offset(&self, states: &[usize]) -> usize {
        states.iter().zip(&self.strides).map(|(s, st)| s * st).sum()
    }

    pub fn prob_at(&self, states: &[usize]) -> f64 {
        self.probs[self.offset(states)]
    }

    /// Probability of a full assignment.
    pub fn prob(&self, a: &Assignment) -> Result<f64> {
        let states = self.states_of(a)?;
        Ok(self.prob_at(&states))
    }

    /// State tuple for a full assignment, in table order.
    pub fn states_of(&self, a: &Assignment) -> Result<Vec<usize>> {
        self.vars
            .iter()
            .map(|v| {
                let s = a.get(v.name()).ok_or_else(|| Error::Unbound(v.name().to_string()))?;
                if s >= v.cardinality() {
                    return Err(Error::invalid(format!(
                        "state {s} out of range for `{}`",
                        v.name()
                    )));
                }
                Ok(s)
            })
            .collect()
    }

    /// Every full state tuple in row-major order.
    pub fn state_tuples(&self) -> impl Iterator<Item = Vec<usize>> {
        let cards: Vec<usize> = self.vars.iter().map(Variable::cardinality).collect();
        state_tuples(&cards)
    }

    /// Every full assignment in row-major order.
    pub fn assignments(&self) -> impl Iterator<Item = Assignment> + '_ {
        self.state_tuples()
            .map(move |s| Assignment::from_states(&self.vars, &s))
    }

    /// Probability that every `(variable index, state)` constraint holds.
    ///
    /// Repeated constraints on one variable are allowed; contradictory ones
    /// describe an impossible event and yield 0.
    pub fn event_prob(&self, constraints: &[(usize, usize)]) -> f64 {
        let mut fixed: Vec<Option<usize>> = vec![None; self.vars.len()];
        for &(var, state) in constraints {
            match fixed[var] {
                Some(s) if s != state => return 0.0,
                _ => fixed[var] = Some(state),
            }
        }
        let base: usize = fixed
            .iter()
            .zip(&self.strides)
            .map(|(s, st)| s.unwrap_or(0) * st)
            .sum();
        let free: Vec<usize> = (0..self.vars.len()).filter(|&i| fixed[i].is_none()).collect();
        if free.is_empty() {
            return self.probs[base];
        }
        let mut counter = vec![0usize; free.len()];
        let mut offset = base;
        let mut total = 0.0;
        loop {
            total += self.probs[offset];
            let mut pos = free.len();
            loop {
                if pos == 0 {
                    return total;
                }
                pos -= 1;
                let var = free[pos];
                counter[pos] += 1;
                offset += self.strides[var];
                if counter[pos] < self.vars[var].cardinality() {
                    break;
                }
                offset -= counter[pos] * self.strides[var];
                counter[pos] = 0;
            }
        }
    }

    /// Exact marginal over `names`, keeping table order.
    pub fn marginal(&self, names: &[&str]) -> Result<JointTable> {
        let mut keep = Vec::with_capacity(names.len());
        for name in names {
            let idx = self.index_of(name)?;
            if !keep.contains(&idx) {
                keep.push(idx);
            }
        }
        keep.sort_unstable();
        let vars: Vec<Variable> = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
        let probs = state_tuples(&cards)
            .map(|states| {
                let constraints: Vec<(usize, usize)> =
                    keep.iter().copied().zip(states.iter().copied()).collect();
                self.event_prob(&constraints)
            })
            .collect();
        let total: f64 = self.probs.iter().sum();
        Ok(Self::normalized(vars, probs, total))
    }

    /// `P(target | given)` evaluated at `a`.
    pub fn conditional_prob(&self, target: &Block, given: &Block, a: &Assignment) -> Result<f64> {
        let target_event = target.resolve(self, a)?;
        let given_event = given.resolve(self, a)?;
        let denom = self.event_prob(&given_event);
        if denom <= 0.0 {
            return Err(Error::UndefinedConditional(given.to_string()));
        }
        let joint: Vec<(usize, usize)> = target_event.into_iter().chain(given_event).collect();
        Ok(self.event_prob(&joint) / denom)
    }
}

impl fmt::Display for JointTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.names();
        writeln!(f, "{}  P", names.join(" "))?;
        for states in self.state_tuples() {
            let row: Vec<String> = states.iter().map(usize::to_string).collect();
            writeln!(f, "{}  {}", row.join(" "), self.prob_at(&states))?;
        }
        Ok(())
    }
}
