//! Symbolic factorization expressions and the rewrite rules that transform
//! them.
//!
//! Subterms are addressed by [`Path`]s: child positions from the root
//! (`Product` children by index, a `Sum` body as child 0).

mod parse;
mod render;
mod rewrite;
mod trace;

use std::fmt;

use crate::cr::{conditional_cr_value, cr_value, Block};
use crate::error::{Error, Result};
use crate::model::{Assignment, JointTable};

pub use parse::parse_expr;
pub use rewrite::{Rewrite, Rule};
pub use trace::{replay_trace, CertContext, CertSource, Certificate, Derivation, OperationTrace, Step, TraceFile};

pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct CrTerm {
    pub blocks: Vec<Block>,
    pub cond: Option<Block>,
    pub exp: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PTerm {
    pub block: Block,
    pub cond: Option<Block>,
    pub exp: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FactorExpr {
    Product(Vec<FactorExpr>),
    /// Sums `body` over every state of `var`, which is bound inside `body`
    /// and shadows any outer binding.
    Sum { var: String, body: Box<FactorExpr> },
    Cr(CrTerm),
    P(PTerm),
    Const(f64),
}

impl FactorExpr {
    pub fn one() -> Self {
        FactorExpr::Const(1.0)
    }

    pub fn cr(blocks: Vec<Block>) -> Self {
        FactorExpr::Cr(CrTerm { blocks, cond: None, exp: 1 })
    }

    /// CR over one singleton block per name.
    pub fn cr_of<S: AsRef<str>>(names: &[S]) -> Self {
        FactorExpr::cr(names.iter().map(|n| Block::single(n.as_ref())).collect())
    }

    pub fn cr_given(blocks: Vec<Block>, cond: Block) -> Self {
        FactorExpr::Cr(CrTerm {
            blocks,
            cond: non_empty(cond),
            exp: 1,
        })
    }

    pub fn p(block: Block) -> Self {
        FactorExpr::P(PTerm { block, cond: None, exp: 1 })
    }

    pub fn p_given(block: Block, cond: Block) -> Self {
        FactorExpr::P(PTerm {
            block,
            cond: non_empty(cond),
            exp: 1,
        })
    }

    /// Product that splices nested products into place.
    pub fn product(factors: Vec<FactorExpr>) -> Self {
        let mut out = Vec::with_capacity(factors.len());
        for f in factors {
            match f {
                FactorExpr::Product(inner) => out.extend(inner),
                other => out.push(other),
            }
        }
        FactorExpr::Product(out)
    }

    pub fn sum(var: impl Into<String>, body: FactorExpr) -> Self {
        FactorExpr::Sum {
            var: var.into(),
            body: Box::new(body),
        }
    }

    /// Raises a CR or P term to a power; other nodes are returned unchanged
    /// when `k == 1` and rejected otherwise.
    pub fn pow(self, k: i32) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("exponents must be nonzero"));
        }
        match self {
            FactorExpr::Cr(mut t) => {
                t.exp *= k;
                Ok(FactorExpr::Cr(t))
            }
            FactorExpr::P(mut t) => {
                t.exp *= k;
                Ok(FactorExpr::P(t))
            }
            other if k == 1 => Ok(other),
            other => Err(Error::invalid(format!("cannot raise `{other}` to a power"))),
        }
    }

    /// Evaluates at an assignment binding every free variable.
    pub fn eval(&self, table: &JointTable, a: &Assignment) -> Result<f64> {
        match self {
            FactorExpr::Const(c) => Ok(*c),
            FactorExpr::Product(children) => children.iter().try_fold(1.0, |acc, c| Ok(acc * c.eval(table, a)?)),
            FactorExpr::Sum { var, body } => {
                let card = table.cardinality(var)?;
                let mut inner = a.clone();
                let mut total = 0.0;
                for s in 0..card {
                    inner.set(var.clone(), s);
                    total += body.eval(table, &inner)?;
                }
                Ok(total)
            }
            FactorExpr::Cr(t) => {
                let v = match &t.cond {
                    Some(c) => conditional_cr_value(table, &t.blocks, c, a)?,
                    None => cr_value(table, &t.blocks, a)?,
                };
                power(v, t.exp, || format!("{self} = 0 at {a}"))
            }
            FactorExpr::P(t) => {
                let v = match &t.cond {
                    Some(c) => table.conditional_prob(&t.block, c, a)?,
                    None => table.event_prob(&t.block.resolve(table, a)?),
                };
                power(v, t.exp, || format!("{self} = 0 at {a}"))
            }
        }
    }

    pub fn get(&self, path: &[usize]) -> Option<&FactorExpr> {
        let Some((&first, rest)) = path.split_first() else {
            return Some(self);
        };
        match self {
            FactorExpr::Product(children) => children.get(first)?.get(rest),
            FactorExpr::Sum { body, .. } if first == 0 => body.get(rest),
            _ => None,
        }
    }

    /// Replaces the node at `path`. Inside a product, a product replacement
    /// is spliced in place and a `Const(1)` replacement is dropped.
    pub fn replace(&self, path: &[usize], replacement: FactorExpr) -> Result<FactorExpr> {
        let Some((&first, rest)) = path.split_first() else {
            return Ok(replacement);
        };
        match self {
            FactorExpr::Product(children) => {
                let child = children
                    .get(first)
                    .ok_or_else(|| Error::rewrite(format!("no subterm at path {path:?}")))?;
                let mut out = Vec::with_capacity(children.len());
                out.extend_from_slice(&children[..first]);
                if rest.is_empty() {
                    match replacement {
                        FactorExpr::Product(inner) => out.extend(inner),
                        FactorExpr::Const(1.0) => {}
                        other => out.push(other),
                    }
                } else {
                    out.push(child.replace(rest, replacement)?);
                }
                out.extend_from_slice(&children[first + 1..]);
                Ok(FactorExpr::Product(out))
            }
            FactorExpr::Sum { var, body } if first == 0 => Ok(FactorExpr::Sum {
                var: var.clone(),
                body: Box::new(body.replace(rest, replacement)?),
            }),
            _ => Err(Error::rewrite(format!("no subterm at path {path:?}"))),
        }
    }

    /// Paths of every node satisfying `pred`, in pre-order.
    pub fn find_all(&self, pred: &dyn Fn(&FactorExpr) -> bool) -> Vec<Path> {
        let mut out = Vec::new();
        self.collect(&mut Vec::new(), pred, &mut out);
        out
    }

    pub fn find(&self, pred: &dyn Fn(&FactorExpr) -> bool) -> Option<Path> {
        self.find_all(pred).into_iter().next()
    }

    fn collect(&self, here: &mut Path, pred: &dyn Fn(&FactorExpr) -> bool, out: &mut Vec<Path>) {
        if pred(self) {
            out.push(here.clone());
        }
        match self {
            FactorExpr::Product(children) => {
                for (i, c) in children.iter().enumerate() {
                    here.push(i);
                    c.collect(here, pred, out);
                    here.pop();
                }
            }
            FactorExpr::Sum { body, .. } => {
                here.push(0);
                body.collect(here, pred, out);
                here.pop();
            }
            _ => {}
        }
    }

    /// True if any term pins a variable to a fixed state.
    pub fn has_pinned_bindings(&self) -> bool {
        let pinned = |b: &Block| b.members().iter().any(|(_, bind)| *bind != crate::cr::Binding::Free);
        match self {
            FactorExpr::Product(children) => children.iter().any(FactorExpr::has_pinned_bindings),
            FactorExpr::Sum { body, .. } => body.has_pinned_bindings(),
            FactorExpr::Cr(t) => t.blocks.iter().any(pinned) || t.cond.as_ref().is_some_and(pinned),
            FactorExpr::P(t) => pinned(&t.block) || t.cond.as_ref().is_some_and(pinned),
            FactorExpr::Const(_) => false,
        }
    }

    /// Every variable name referenced, bound or free, sorted.
    pub fn variables(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn visit_vars(&self, out: &mut Vec<String>) {
        let mut block = |b: &Block| out.extend(b.names().map(str::to_string));
        match self {
            FactorExpr::Product(children) => children.iter().for_each(|c| c.visit_vars(out)),
            FactorExpr::Sum { var, body } => {
                out.push(var.clone());
                body.visit_vars(out);
            }
            FactorExpr::Cr(t) => {
                t.blocks.iter().for_each(&mut block);
                t.cond.iter().for_each(block);
            }
            FactorExpr::P(t) => {
                block(&t.block);
                t.cond.iter().for_each(block);
            }
            FactorExpr::Const(_) => {}
        }
    }

    /// Normal form modulo commutativity: products flattened with unit
    /// constants dropped and factors sorted, CR blocks sorted, block
    /// members sorted. Always a product at the top.
    pub fn canonical(&self) -> FactorExpr {
        match self.canonical_node() {
            p @ FactorExpr::Product(_) => p,
            other => FactorExpr::Product(vec![other]),
        }
    }

    fn canonical_node(&self) -> FactorExpr {
        let sort_block = |b: &Block| {
            let mut m = b.members().to_vec();
            m.sort();
            Block::new(m).expect("sorting keeps members distinct")
        };
        match self {
            FactorExpr::Product(children) => {
                let mut flat = Vec::new();
                for c in children {
                    match c.canonical_node() {
                        FactorExpr::Product(inner) => flat.extend(inner),
                        FactorExpr::Const(1.0) => {}
                        other => flat.push(other),
                    }
                }
                flat.sort_by_cached_key(|f| f.to_string());
                FactorExpr::Product(flat)
            }
            FactorExpr::Sum { var, body } => FactorExpr::sum(var.clone(), body.canonical()),
            FactorExpr::Cr(t) => {
                let mut blocks: Vec<Block> = t.blocks.iter().map(sort_block).collect();
                blocks.sort_by_cached_key(|b| b.to_string());
                FactorExpr::Cr(CrTerm {
                    blocks,
                    cond: t.cond.as_ref().map(sort_block),
                    exp: t.exp,
                })
            }
            FactorExpr::P(t) => FactorExpr::P(PTerm {
                block: sort_block(&t.block),
                cond: t.cond.as_ref().map(sort_block),
                exp: t.exp,
            }),
            FactorExpr::Const(c) => FactorExpr::Const(*c),
        }
    }

    /// Equality modulo commutativity of products and of CR arguments.
    pub fn equivalent(&self, other: &FactorExpr) -> bool {
        self.canonical() == other.canonical()
    }
}

fn non_empty(b: Block) -> Option<Block> {
    (!b.is_empty()).then_some(b)
}

fn power(v: f64, exp: i32, describe: impl Fn() -> String) -> Result<f64> {
    if v == 0.0 && exp < 0 {
        return Err(Error::UndefinedCr(format!("division by zero: {}", describe())));
    }
    Ok(v.powi(exp))
}

impl fmt::Display for CrTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render::write_cr(f, self)
    }
}

impl fmt::Display for PTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        render::write_p(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variable;

    fn d2() -> JointTable {
        JointTable::new(vec![Variable::binary("A"), Variable::binary("B")], vec![0.4, 0.1, 0.1, 0.4]).unwrap()
    }

    #[test]
    fn evaluation_matches_reconstruction() {
        let e = FactorExpr::product(vec![
            FactorExpr::cr_of(&["A", "B"]),
            FactorExpr::p(Block::single("A")),
            FactorExpr::p(Block::single("B")),
        ]);
        let a = Assignment::new().with("A", 0).with("B", 0);
        assert!((e.eval(&d2(), &a).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(FactorExpr::one().eval(&d2(), &a).unwrap(), 1.0);
        assert_eq!(FactorExpr::Product(vec![]).eval(&d2(), &a).unwrap(), 1.0);
    }

    #[test]
    fn sums_shadow_outer_bindings() {
        let e = FactorExpr::sum("B", FactorExpr::p(Block::free(&["A", "B"])));
        let a = Assignment::new().with("A", 1).with("B", 0);
        assert!((e.eval(&d2(), &a).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn replace_splices_products() {
        let e = FactorExpr::product(vec![FactorExpr::cr_of(&["A"]), FactorExpr::cr_of(&["A", "B"])]);
        let r = e
            .replace(&[1], FactorExpr::product(vec![FactorExpr::cr_of(&["A"]), FactorExpr::cr_of(&["B"])]))
            .unwrap();
        let FactorExpr::Product(children) = &r else { panic!() };
        assert_eq!(children.len(), 3);
        let dropped = e.replace(&[0], FactorExpr::one()).unwrap();
        assert_eq!(dropped, FactorExpr::product(vec![FactorExpr::cr_of(&["A", "B"])]));
        assert!(e.replace(&[5], FactorExpr::one()).is_err());
    }

    #[test]
    fn negative_powers_of_zero_are_undefined() {
        let t = JointTable::new(vec![Variable::binary("A"), Variable::binary("B")], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let e = FactorExpr::cr_of(&["A", "B"]).pow(-1).unwrap();
        let a = Assignment::new().with("A", 0).with("B", 1);
        assert!(matches!(e.eval(&t, &a), Err(Error::UndefinedCr(_))));
    }

    #[test]
    fn canonical_forms_ignore_order() {
        let a = FactorExpr::product(vec![FactorExpr::cr_of(&["D", "G"]), FactorExpr::cr_of(&["S", "I"])]);
        let b = FactorExpr::product(vec![FactorExpr::cr_of(&["I", "S"]), FactorExpr::cr_of(&["G", "D"])]);
        assert!(a.equivalent(&b));
        let c = FactorExpr::product(vec![FactorExpr::cr_of(&["I", "S"]), FactorExpr::cr_of(&["G", "L"])]);
        assert!(!a.equivalent(&c));
    }
}
