//! Numeric co-occurrence rates evaluated straight from their probability
//! definitions. This is the ground truth the symbolic layer is checked
//! against.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Assignment, JointTable};

/// How a block member gets its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Binding {
    /// Read from the evaluation assignment.
    Free,
    /// Fixed to a state, e.g. the default configuration.
    Pinned(usize),
}

/// A group of variables observed as one joint event.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    members: Vec<(String, Binding)>,
}

/// Blocks of a CR in order. Variables may repeat across blocks.
pub type BlockList = Vec<Block>;

impl Block {
    pub fn new(members: Vec<(String, Binding)>) -> Result<Self> {
        for (i, (name, _)) in members.iter().enumerate() {
            if members[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::invalid(format!("variable `{name}` appears twice in one block")));
            }
        }
        Ok(Block { members })
    }

    /// Block of free variables. Panics on repeated names.
    pub fn free<S: AsRef<str>>(names: &[S]) -> Self {
        Block::new(names.iter().map(|n| (n.as_ref().to_string(), Binding::Free)).collect())
            .expect("block variables must be distinct")
    }

    pub fn single(name: impl Into<String>) -> Self {
        Block {
            members: vec![(name.into(), Binding::Free)],
        }
    }

    pub fn empty() -> Self {
        Block { members: Vec::new() }
    }

    pub fn members(&self) -> &[(String, Binding)] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.members.iter().map(|(n, _)| n.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.members.iter().any(|(n, _)| n == name)
    }

    pub fn binding(&self, name: &str) -> Option<Binding> {
        self.members.iter().find(|(n, _)| n == name).map(|(_, b)| *b)
    }

    /// Members of `self` followed by members of `other` not already present.
    pub fn union(&self, other: &Block) -> Block {
        let mut members = self.members.clone();
        for m in &other.members {
            if !self.contains(&m.0) {
                members.push(m.clone());
            }
        }
        Block { members }
    }

    /// Members whose variable satisfies `keep`, order preserved.
    pub fn filter(&self, keep: impl Fn(&str) -> bool) -> Block {
        Block {
            members: self.members.iter().filter(|(n, _)| keep(n)).cloned().collect(),
        }
    }

    /// Same variables, order-insensitive.
    pub fn same_vars(&self, other: &Block) -> bool {
        self.len() == other.len() && self.names().all(|n| other.contains(n))
    }

    /// Resolves to `(table index, state)` constraints under `a`.
    pub fn resolve(&self, table: &JointTable, a: &Assignment) -> Result<Vec<(usize, usize)>> {
        self.members
            .iter()
            .map(|(name, binding)| {
                let idx = table.index_of(name)?;
                let state = match binding {
                    Binding::Pinned(s) => *s,
                    Binding::Free => a.get(name).ok_or_else(|| Error::Unbound(name.clone()))?,
                };
                let card = table.variables()[idx].cardinality();
                if state >= card {
                    return Err(Error::invalid(format!(
                        "state {state} out of range for `{name}` (cardinality {card})"
                    )));
                }
                Ok((idx, state))
            })
            .collect()
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, binding)) in self.members.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            match binding {
                Binding::Free => write!(f, "{name}")?,
                Binding::Pinned(s) => write!(f, "{name}={s}")?,
            }
        }
        Ok(())
    }
}

/// Probability of a block's event, erroring when it is zero.
fn positive_marginal(table: &JointTable, event: &[(usize, usize)], block: &Block, a: &Assignment) -> Result<f64> {
    let p = table.event_prob(event);
    if p <= 0.0 {
        return Err(Error::UndefinedCr(format!("P({block}) = 0 at {a}")));
    }
    Ok(p)
}

/// `CR(b_1, ..., b_n) = P(b_1 ... b_n) / Π_i P(b_i)` at `a`.
///
/// The numerator treats all blocks as one joint event, so a repeated
/// variable counts once there and once per occurrence below. A zero
/// numerator over positive marginals gives 0.
pub fn cr_value(table: &JointTable, blocks: &[Block], a: &Assignment) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::UndefinedCr("CR of an empty block list".into()));
    }
    let mut denominator = 1.0;
    let mut joint = Vec::new();
    for block in blocks {
        let event = block.resolve(table, a)?;
        denominator *= positive_marginal(table, &event, block, a)?;
        joint.extend(event);
    }
    let numerator = table.event_prob(&joint);
    if numerator == 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / denominator)
}

/// `CR(b_1, ..., b_n | c) = P(b_1 ... b_n | c) / Π_i P(b_i | c)` at `a`.
pub fn conditional_cr_value(table: &JointTable, blocks: &[Block], cond: &Block, a: &Assignment) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::UndefinedCr("CR of an empty block list".into()));
    }
    let cond_event = cond.resolve(table, a)?;
    let p_cond = table.event_prob(&cond_event);
    if p_cond <= 0.0 {
        return Err(Error::UndefinedConditional(format!("{cond} at {a}")));
    }
    let mut denominator = 1.0;
    let mut joint = cond_event.clone();
    for block in blocks {
        let event = block.resolve(table, a)?;
        let with_cond: Vec<_> = event.iter().chain(&cond_event).copied().collect();
        let p = table.event_prob(&with_cond) / p_cond;
        if p <= 0.0 {
            return Err(Error::UndefinedCr(format!("P({block} | {cond}) = 0 at {a}")));
        }
        denominator *= p;
        joint.extend(event);
    }
    let numerator = table.event_prob(&joint) / p_cond;
    if numerator == 0.0 {
        return Ok(0.0);
    }
    Ok(numerator / denominator)
}

/// `CR(blocks) · Π_b P(b)`; equals `P(a)` when the blocks partition the
/// table's variables.
pub fn reconstruct_joint(table: &JointTable, blocks: &[Block], a: &Assignment) -> Result<f64> {
    let cr = cr_value(table, blocks, a)?;
    let marginals: f64 = blocks
        .iter()
        .map(|b| Ok(table.event_prob(&b.resolve(table, a)?)))
        .product::<Result<f64>>()?;
    Ok(cr * marginals)
}

/// Both sides of the marginal CR identity
/// `Σ_{x_n} CR(x_1, ..., x_n) P(x_n) = CR(x_1, ..., x_{n-1})`.
///
/// `drop` indexes a singleton free block; its variable is summed out, so
/// `a` need not bind it.
pub fn marginal_cr_check(table: &JointTable, blocks: &[Block], drop: usize, a: &Assignment) -> Result<(f64, f64)> {
    let dropped = blocks
        .get(drop)
        .ok_or_else(|| Error::precondition(format!("block index {drop} out of range")))?;
    let [(name, Binding::Free)] = dropped.members() else {
        return Err(Error::precondition("dropped block must be a single free variable"));
    };
    if blocks.len() < 2 {
        return Err(Error::precondition("need at least two blocks to drop one"));
    }
    let rest: Vec<Block> = blocks
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != drop)
        .map(|(_, b)| b.clone())
        .collect();
    let card = table.cardinality(name)?;
    let mut lhs = 0.0;
    let mut extended = a.clone();
    for s in 0..card {
        extended.set(name.clone(), s);
        let p = table.event_prob(&dropped.resolve(table, &extended)?);
        if p == 0.0 {
            continue;
        }
        lhs += cr_value(table, blocks, &extended)? * p;
    }
    let rhs = cr_value(table, &rest, a)?;
    Ok((lhs, rhs))
}
