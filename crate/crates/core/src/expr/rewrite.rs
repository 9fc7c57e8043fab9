//! Value-preserving rewrites. Each rule maps one target node to its
//! replacement and lists the independence statements the rewrite relies on.
//! Rules never touch siblings of the target.

use serde::{Deserialize, Serialize};

use crate::cr::Block;
use crate::error::{Error, Result};
use crate::separation::CiQuery;

use super::{CrTerm, FactorExpr, PTerm};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Rule {
    /// Splits the blocks at the listed indices (left part) from the rest:
    /// `CR(L, R) -> CR(L)·CR(R)·CR(merged L, merged R)`.
    Bipartition { left: Vec<usize> },
    /// Joins blocks `i` and `j` into one block at `j`'s position and emits
    /// `CR(b_i, b_j)`.
    Merge { i: usize, j: usize },
    /// Repeats a block right after itself and emits `P(block)`.
    Duplicate { block: usize },
    /// Expands an unconditional CR as a sum over `var`.
    Condition { var: String },
    /// `CR(x, y w) -> CR(x, w)` given `x _|_ y | w`. `x` is the index of the
    /// block kept whole, `w` the variables kept from the other block.
    Cit1 { x: usize, w: Vec<String> },
    /// `CR(w, x y) -> CR(x, w)·CR(y, w)·CR(x, y)^-1` given `x _|_ y | w`.
    /// `w` is the index of the unsplit block, `x` the variables of the other
    /// block forming the first part.
    Cit2 { w: usize, x: Vec<String> },
    /// `CR(w x, w y) -> P(w)^-1` given `x _|_ y | w`, where `w` is every
    /// variable the two blocks share.
    Cit3,
    /// `CR(b_1, ..., b_n) -> 1` given mutual independence of the blocks.
    Independence,
    /// `CR(b) -> 1`.
    SingleVar,
    /// Targets a product. Folds the CR at child `cr` and the P factors of
    /// its blocks at children `p` into one P term, conditional on the single
    /// uncovered block if there is one. The result sits where the first of
    /// those P factors was.
    Group { cr: usize, p: Vec<usize> },
}

/// Result of applying a rule to a node.
#[derive(Debug, Clone, PartialEq)]
pub struct Rewrite {
    pub replacement: FactorExpr,
    pub obligations: Vec<CiQuery>,
}

impl Rule {
    pub fn name(&self) -> &'static str {
        match self {
            Rule::Bipartition { .. } => "bipartition",
            Rule::Merge { .. } => "merge",
            Rule::Duplicate { .. } => "duplicate",
            Rule::Condition { .. } => "condition",
            Rule::Cit1 { .. } => "cit1",
            Rule::Cit2 { .. } => "cit2",
            Rule::Cit3 => "cit3",
            Rule::Independence => "independence",
            Rule::SingleVar => "single_var",
            Rule::Group { .. } => "group",
        }
    }

    /// True for rules that hold on every positive table.
    pub fn is_unconditional(&self) -> bool {
        matches!(
            self,
            Rule::Bipartition { .. } | Rule::Merge { .. } | Rule::Duplicate { .. } | Rule::Condition { .. } | Rule::SingleVar | Rule::Group { .. }
        )
    }

    pub fn apply(&self, target: &FactorExpr) -> Result<Rewrite> {
        if let Rule::Group { cr, p } = self {
            return group(target, *cr, p);
        }
        let FactorExpr::Cr(t) = target else {
            return Err(Error::rewrite(format!("{} needs a CR term, found `{target}`", self.name())));
        };
        let plain = |replacement| Rewrite {
            replacement,
            obligations: Vec::new(),
        };
        match self {
            Rule::Bipartition { left } => bipartition(t, left).map(plain),
            Rule::Merge { i, j } => merge(t, *i, *j).map(plain),
            Rule::Duplicate { block } => duplicate(t, *block).map(plain),
            Rule::Condition { var } => condition(t, var).map(plain),
            Rule::Cit1 { x, w } => cit1(t, *x, w),
            Rule::Cit2 { w, x } => cit2(t, *w, x),
            Rule::Cit3 => cit3(t),
            Rule::Independence => independence(t),
            Rule::SingleVar => {
                if t.blocks.len() != 1 {
                    return Err(Error::rewrite(format!("`{t}` has {} blocks, not one", t.blocks.len())));
                }
                Ok(plain(FactorExpr::one()))
            }
            Rule::Group { .. } => unreachable!(),
        }
    }
}

/// One block holding every member of `blocks`; shared variables must agree
/// on their binding.
pub(crate) fn merge_blocks(blocks: &[Block]) -> Result<Block> {
    let mut out = Block::empty();
    for b in blocks {
        for (name, binding) in b.members() {
            if let Some(existing) = out.binding(name) {
                if existing != *binding {
                    return Err(Error::rewrite(format!("`{name}` has conflicting bindings across merged blocks")));
                }
            }
        }
        out = out.union(b);
    }
    Ok(out)
}

fn names(b: &Block) -> Vec<String> {
    b.names().map(str::to_string).collect()
}

fn cond_names(t: &CrTerm) -> Vec<String> {
    t.cond.as_ref().map(names).unwrap_or_default()
}

fn cr_like(t: &CrTerm, blocks: Vec<Block>, exp: i32) -> FactorExpr {
    FactorExpr::Cr(CrTerm {
        blocks,
        cond: t.cond.clone(),
        exp: t.exp * exp,
    })
}

fn p_like(t: &CrTerm, block: Block, exp: i32) -> FactorExpr {
    FactorExpr::P(PTerm {
        block,
        cond: t.cond.clone(),
        exp: t.exp * exp,
    })
}

fn check_index(t: &CrTerm, i: usize) -> Result<()> {
    if i >= t.blocks.len() {
        return Err(Error::rewrite(format!("block index {i} out of range for `{t}`")));
    }
    Ok(())
}

fn bipartition(t: &CrTerm, left: &[usize]) -> Result<FactorExpr> {
    for &i in left {
        check_index(t, i)?;
    }
    let mut seen = left.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != left.len() {
        return Err(Error::rewrite("repeated block index in bipartition"));
    }
    if left.is_empty() || left.len() == t.blocks.len() {
        return Err(Error::rewrite(format!("bipartition of `{t}` needs two non-empty parts")));
    }
    let l: Vec<Block> = left.iter().map(|&i| t.blocks[i].clone()).collect();
    let r: Vec<Block> = (0..t.blocks.len())
        .filter(|i| !left.contains(i))
        .map(|i| t.blocks[i].clone())
        .collect();
    let cut = vec![merge_blocks(&l)?, merge_blocks(&r)?];
    Ok(FactorExpr::Product(vec![cr_like(t, l, 1), cr_like(t, r, 1), cr_like(t, cut, 1)]))
}

fn merge(t: &CrTerm, i: usize, j: usize) -> Result<FactorExpr> {
    check_index(t, i)?;
    check_index(t, j)?;
    if i == j {
        return Err(Error::rewrite("merge needs two distinct blocks"));
    }
    let (bi, bj) = (t.blocks[i].clone(), t.blocks[j].clone());
    let merged = merge_blocks(&[bi.clone(), bj.clone()])?;
    let mut blocks = t.blocks.clone();
    blocks[j] = merged;
    blocks.remove(i);
    Ok(FactorExpr::Product(vec![cr_like(t, blocks, 1), cr_like(t, vec![bi, bj], 1)]))
}

fn duplicate(t: &CrTerm, i: usize) -> Result<FactorExpr> {
    check_index(t, i)?;
    let b = t.blocks[i].clone();
    let mut blocks = t.blocks.clone();
    blocks.insert(i + 1, b.clone());
    Ok(FactorExpr::Product(vec![cr_like(t, blocks, 1), p_like(t, b, 1)]))
}

fn condition(t: &CrTerm, var: &str) -> Result<FactorExpr> {
    if t.cond.is_some() {
        return Err(Error::rewrite(format!("`{t}` is already conditional")));
    }
    if t.exp != 1 {
        return Err(Error::rewrite(format!("cannot condition `{t}`: exponent must be 1")));
    }
    if t.blocks.iter().any(|b| b.contains(var)) {
        return Err(Error::rewrite(format!("`{var}` already appears in `{t}`")));
    }
    let v = Block::single(var);
    let mut factors = vec![FactorExpr::cr_given(t.blocks.clone(), v.clone())];
    factors.extend(t.blocks.iter().map(|b| FactorExpr::cr(vec![b.clone(), v.clone()])));
    factors.push(FactorExpr::p(v));
    Ok(FactorExpr::sum(var, FactorExpr::Product(factors)))
}

fn two_blocks(t: &CrTerm, rule: &str) -> Result<()> {
    if t.blocks.len() != 2 {
        return Err(Error::rewrite(format!("{rule} needs a two-block CR, found `{t}`")));
    }
    Ok(())
}

fn check_disjoint(a: &Block, b: &Block, t: &CrTerm) -> Result<()> {
    if let Some(n) = a.names().find(|n| b.contains(n)) {
        return Err(Error::rewrite(format!("blocks of `{t}` share `{n}`")));
    }
    Ok(())
}

fn cit1(t: &CrTerm, x: usize, w: &[String]) -> Result<Rewrite> {
    two_blocks(t, "cit1")?;
    check_index(t, x)?;
    let other = 1 - x;
    let (xb, ob) = (&t.blocks[x], &t.blocks[other]);
    check_disjoint(xb, ob, t)?;
    if w.is_empty() {
        return Err(Error::rewrite("cit1 needs a non-empty separating set; use independence instead"));
    }
    if let Some(n) = w.iter().find(|n| !ob.contains(n)) {
        return Err(Error::rewrite(format!("`{n}` is not in the second block of `{t}`")));
    }
    let wb = ob.filter(|n| w.iter().any(|m| m == n));
    let yb = ob.filter(|n| !w.iter().any(|m| m == n));
    let mut blocks = t.blocks.clone();
    blocks[other] = wb.clone();
    let mut obligations = Vec::new();
    if !yb.is_empty() {
        let mut z = names(&wb);
        z.extend(cond_names(t));
        obligations.push(CiQuery::new(&names(xb), &names(&yb), &z));
    }
    Ok(Rewrite {
        replacement: cr_like(t, blocks, 1),
        obligations,
    })
}

fn cit2(t: &CrTerm, w: usize, x: &[String]) -> Result<Rewrite> {
    two_blocks(t, "cit2")?;
    check_index(t, w)?;
    let (wb, ob) = (&t.blocks[w], &t.blocks[1 - w]);
    check_disjoint(wb, ob, t)?;
    if let Some(n) = x.iter().find(|n| !ob.contains(n)) {
        return Err(Error::rewrite(format!("`{n}` is not in the split block of `{t}`")));
    }
    let xb = ob.filter(|n| x.iter().any(|m| m == n));
    let yb = ob.filter(|n| !x.iter().any(|m| m == n));
    if xb.is_empty() || yb.is_empty() {
        return Err(Error::rewrite(format!("cit2 needs both parts of `{ob}` non-empty")));
    }
    let mut z = names(wb);
    z.extend(cond_names(t));
    Ok(Rewrite {
        replacement: FactorExpr::Product(vec![
            cr_like(t, vec![xb.clone(), wb.clone()], 1),
            cr_like(t, vec![yb.clone(), wb.clone()], 1),
            cr_like(t, vec![xb.clone(), yb.clone()], -1),
        ]),
        obligations: vec![CiQuery::new(&names(&xb), &names(&yb), &z)],
    })
}

fn cit3(t: &CrTerm) -> Result<Rewrite> {
    two_blocks(t, "cit3")?;
    let (a, b) = (&t.blocks[0], &t.blocks[1]);
    let wb = a.filter(|n| b.contains(n));
    if wb.is_empty() {
        return Err(Error::rewrite(format!("blocks of `{t}` share no variables")));
    }
    for (n, binding) in wb.members() {
        if b.binding(n) != Some(*binding) {
            return Err(Error::rewrite(format!("`{n}` is bound differently in the blocks of `{t}`")));
        }
    }
    let xb = a.filter(|n| !wb.contains(n));
    let yb = b.filter(|n| !wb.contains(n));
    let mut obligations = Vec::new();
    if !xb.is_empty() && !yb.is_empty() {
        let mut z = names(&wb);
        z.extend(cond_names(t));
        obligations.push(CiQuery::new(&names(&xb), &names(&yb), &z));
    }
    Ok(Rewrite {
        replacement: p_like(t, wb, -1),
        obligations,
    })
}

fn independence(t: &CrTerm) -> Result<Rewrite> {
    for (i, a) in t.blocks.iter().enumerate() {
        for b in &t.blocks[i + 1..] {
            check_disjoint(a, b, t)?;
        }
    }
    let z = cond_names(t);
    let obligations = (0..t.blocks.len().saturating_sub(1))
        .map(|i| {
            let rest: Vec<String> = t.blocks[i + 1..].iter().flat_map(names).collect();
            CiQuery::new(&names(&t.blocks[i]), &rest, &z)
        })
        .collect();
    Ok(Rewrite {
        replacement: FactorExpr::one(),
        obligations,
    })
}

fn group(target: &FactorExpr, cr: usize, p: &[usize]) -> Result<Rewrite> {
    let FactorExpr::Product(children) = target else {
        return Err(Error::rewrite(format!("group needs a product, found `{target}`")));
    };
    let Some(FactorExpr::Cr(t)) = children.get(cr) else {
        return Err(Error::rewrite(format!("child {cr} is not a CR term")));
    };
    if t.exp != 1 {
        return Err(Error::rewrite(format!("cannot group `{t}`: exponent must be 1")));
    }
    if p.is_empty() {
        return Err(Error::rewrite("group needs at least one P factor"));
    }
    let mut covered = vec![false; t.blocks.len()];
    for &i in p {
        let Some(FactorExpr::P(pt)) = children.get(i) else {
            return Err(Error::rewrite(format!("child {i} is not a P term")));
        };
        if pt.exp != 1 || pt.cond != t.cond {
            return Err(Error::rewrite(format!("`{pt}` does not match the condition of `{t}`")));
        }
        let slot = t
            .blocks
            .iter()
            .enumerate()
            .position(|(k, b)| !covered[k] && b == &pt.block)
            .ok_or_else(|| Error::rewrite(format!("`{pt}` matches no free block of `{t}`")))?;
        covered[slot] = true;
    }
    let inside: Vec<Block> = t.blocks.iter().zip(&covered).filter(|(_, c)| **c).map(|(b, _)| b.clone()).collect();
    let outside: Vec<Block> = t.blocks.iter().zip(&covered).filter(|(_, c)| !**c).map(|(b, _)| b.clone()).collect();
    let block = merge_blocks(&inside)?;
    let grouped = match outside.as_slice() {
        [] => FactorExpr::P(PTerm {
            block,
            cond: t.cond.clone(),
            exp: 1,
        }),
        [given] => {
            let given = match &t.cond {
                Some(c) => merge_blocks(&[given.clone(), c.clone()])?,
                None => given.clone(),
            };
            FactorExpr::p_given(block, given)
        }
        _ => return Err(Error::rewrite(format!("group leaves {} blocks of `{t}` uncovered", outside.len()))),
    };
    let at = *p.iter().min().unwrap();
    let mut out = Vec::with_capacity(children.len());
    for (k, c) in children.iter().enumerate() {
        if k == at {
            out.push(grouped.clone());
        } else if k != cr && !p.contains(&k) {
            out.push(c.clone());
        }
    }
    Ok(Rewrite {
        replacement: FactorExpr::Product(out),
        obligations: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::model::{Assignment, JointTable, Variable};

    fn e(s: &str) -> FactorExpr {
        parse_expr(s).unwrap()
    }

    fn rewrite(rule: Rule, target: &str) -> Rewrite {
        rule.apply(&e(target)).unwrap()
    }

    // A uniform, P(B=A)=0.9, P(C=B)=0.8
    fn d3() -> JointTable {
        let mut probs = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    let pb = if a == b { 0.9 } else { 0.1 };
                    let pc = if b == c { 0.8 } else { 0.2 };
                    probs.push(0.5 * pb * pc);
                }
            }
        }
        let vars = ["A", "B", "C"].map(Variable::binary).to_vec();
        JointTable::new(vars, probs).unwrap()
    }

    fn zeros() -> Assignment {
        Assignment::new().with("A", 0).with("B", 0).with("C", 0)
    }

    #[test]
    fn bipartition_shapes() {
        let r = rewrite(Rule::Bipartition { left: vec![0] }, "CR(D,I,G,S,L)");
        assert_eq!(r.replacement.to_string(), "CR(D)·CR(I,G,S,L)·CR(D,I G S L)");
        assert!(r.obligations.is_empty());
        let r = rewrite(Rule::Bipartition { left: vec![0] }, "CR(A,B,C)");
        let v = r.replacement.eval(&d3(), &zeros()).unwrap();
        assert!((v - 2.88).abs() < 1e-12);
        assert!(Rule::Bipartition { left: vec![] }.apply(&e("CR(A,B)")).is_err());
        assert!(Rule::Bipartition { left: vec![0, 1] }.apply(&e("CR(A,B)")).is_err());
    }

    #[test]
    fn merge_places_block_at_second_index() {
        let r = rewrite(Rule::Merge { i: 2, j: 4 }, "CR(D,I,G,S,L)");
        assert_eq!(r.replacement.to_string(), "CR(D,I,S,G L)·CR(G,L)");
        let r = rewrite(Rule::Merge { i: 0, j: 1 }, "CR(A,B,C)");
        assert_eq!(r.replacement.to_string(), "CR(A B,C)·CR(A,B)");
        assert!((r.replacement.eval(&d3(), &zeros()).unwrap() - 2.88).abs() < 1e-12);
        assert!(Rule::Merge { i: 1, j: 1 }.apply(&e("CR(A,B)")).is_err());
    }

    #[test]
    fn duplicate_and_condition() {
        let r = rewrite(Rule::Duplicate { block: 0 }, "CR(A,B)");
        assert_eq!(r.replacement.to_string(), "CR(A,A,B)·P(A)");
        let r = rewrite(Rule::Duplicate { block: 0 }, "CR(A)");
        assert!((r.replacement.eval(&d3(), &zeros()).unwrap() - 1.0).abs() < 1e-12);
        let r = rewrite(Rule::Condition { var: "C".into() }, "CR(A,B,D)");
        assert_eq!(r.replacement.to_string(), "sum_C[CR(A,B,D|C)·CR(A,C)·CR(B,C)·CR(D,C)·P(C)]");
        assert!(Rule::Condition { var: "A".into() }.apply(&e("CR(A,B)")).is_err());
        assert!(Rule::Condition { var: "C".into() }.apply(&e("CR(A,B)^-1")).is_err());
    }

    #[test]
    fn cit_rules_and_obligations() {
        let r = rewrite(Rule::Cit1 { x: 0, w: vec!["B".into()] }, "CR(A,B C)");
        assert_eq!(r.replacement.to_string(), "CR(A,B)");
        assert_eq!(r.obligations, vec![CiQuery::new(&["A"], &["C"], &["B"])]);
        let (a, b) = (r.replacement.eval(&d3(), &zeros()).unwrap(), e("CR(A,B C)").eval(&d3(), &zeros()).unwrap());
        assert!((a - 1.8).abs() < 1e-12 && (b - 1.8).abs() < 1e-12);

        let r = rewrite(Rule::Cit2 { w: 0, x: vec!["A".into()] }, "CR(B,A C)");
        assert_eq!(r.replacement.to_string(), "CR(A,B)·CR(C,B)·CR(A,C)^-1");
        let before = e("CR(B,A C)").eval(&d3(), &zeros()).unwrap();
        assert!((r.replacement.eval(&d3(), &zeros()).unwrap() - before).abs() < 1e-12);

        let r = rewrite(Rule::Cit3, "CR(A B,B C)");
        assert_eq!(r.replacement.to_string(), "P(B)^-1");
        assert!((r.replacement.eval(&d3(), &zeros()).unwrap() - 2.0).abs() < 1e-12);
        assert!(rewrite(Rule::Cit3, "CR(B,B)").obligations.is_empty());
        assert!(Rule::Cit3.apply(&e("CR(A,C)")).is_err());

        let r = rewrite(Rule::Independence, "CR(A,B,C|D)");
        assert_eq!(r.replacement, FactorExpr::one());
        assert_eq!(
            r.obligations,
            vec![CiQuery::new(&["A"], &["B", "C"], &["D"]), CiQuery::new(&["B"], &["C"], &["D"])]
        );
    }

    #[test]
    fn exponent_distributes_and_conditions_carry() {
        let r = rewrite(Rule::Bipartition { left: vec![1] }, "CR(A,B,C|X)^-1");
        assert_eq!(r.replacement.to_string(), "CR(B|X)^-1·CR(A,C|X)^-1·CR(B,A C|X)^-1");
        let r = rewrite(Rule::Duplicate { block: 1 }, "CR(A,B|X)^2");
        assert_eq!(r.replacement.to_string(), "CR(A,B,B|X)^2·P(B|X)^2");
    }

    #[test]
    fn group_folds_into_conditionals() {
        let r = rewrite(Rule::Group { cr: 0, p: vec![2] }, "CR(G,D I)·P(D)·P(G)·P(I)");
        assert_eq!(r.replacement.to_string(), "P(D)·P(G|D I)·P(I)");
        let r = rewrite(Rule::Group { cr: 2, p: vec![0, 1] }, "P(A)·P(B)·CR(A,B)");
        assert_eq!(r.replacement.to_string(), "P(A B)");
        assert!(Rule::Group { cr: 0, p: vec![1] }.apply(&e("CR(A,B,C)·P(A)")).is_err());
        assert!(Rule::Group { cr: 0, p: vec![1] }.apply(&e("CR(A,B)·P(C)")).is_err());
    }

    #[test]
    fn rules_serialize_with_a_tag() {
        let json = serde_json::to_string(&Rule::Cit1 { x: 0, w: vec!["G".into()] }).unwrap();
        assert_eq!(json, r#"{"rule":"cit1","x":0,"w":["G"]}"#);
        let back: Rule = serde_json::from_str(r#"{"rule":"single_var"}"#).unwrap();
        assert_eq!(back, Rule::SingleVar);
    }
}
