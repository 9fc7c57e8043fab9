//! Factorization algorithms. The CR routes build their result through the
//! rewrite engine so every step is recorded and certified; the closed-form
//! factorizers (HC, MRF, RMRF, TCG potentials) build expressions directly.

mod bn;
mod crf;
mod hc;
mod partition;
mod tcg;

pub use bn::factorize_bn;
pub use crf::factorize_chain_crf;
pub use hc::{hc_potential, mrf_expression, mrf_factorize, rmrf_factorize};
pub use partition::{factorize_markov, factorize_tree_mn};
pub use tcg::{build_clique_graph, factorize_tcg, is_tcg, CliqueGraph, Elimination, TcgCheck, TcgResult};

use crate::cr::Block;
use crate::error::{Error, Result};
use crate::expr::{CertContext, CrTerm, Derivation, FactorExpr, OperationTrace, Path, Rule};
use crate::model::{JointTable, ModelGraph};
use crate::separation::{ci_deviation, CiQuery, CI_TOL};

/// A derived expression together with the rewrites that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub initial: FactorExpr,
    pub expr: FactorExpr,
    pub trace: OperationTrace,
}

impl Factorization {
    fn from_derivation(d: Derivation<'_>) -> Self {
        let initial = d.initial().clone();
        let (expr, trace) = d.finish();
        Factorization { initial, expr, trace }
    }
}

/// `CR(v_1, ..., v_n | cond) · Π P(v_i | cond)`.
pub fn reconstruction(vars: &[String], cond: Option<&Block>) -> FactorExpr {
    let blocks: Vec<Block> = vars.iter().map(Block::single).collect();
    let with_cond = |f: FactorExpr| match (f, cond) {
        (FactorExpr::Cr(mut t), Some(c)) => {
            t.cond = Some(c.clone());
            FactorExpr::Cr(t)
        }
        (FactorExpr::P(mut t), Some(c)) => {
            t.cond = Some(c.clone());
            FactorExpr::P(t)
        }
        (f, _) => f,
    };
    let mut factors = vec![with_cond(FactorExpr::cr(blocks.clone()))];
    factors.extend(blocks.into_iter().map(|b| with_cond(FactorExpr::p(b))));
    FactorExpr::Product(factors)
}

fn locate(expr: &FactorExpr, term: &FactorExpr) -> Result<Path> {
    expr.find(&|e| e == term)
        .ok_or_else(|| Error::rewrite(format!("`{term}` not found in `{expr}`")))
}

fn cr_term(e: &FactorExpr) -> &CrTerm {
    match e {
        FactorExpr::Cr(t) => t,
        other => panic!("expected a CR term, found `{other}`"),
    }
}

fn product_children(e: &FactorExpr) -> &[FactorExpr] {
    match e {
        FactorExpr::Product(c) => c,
        other => panic!("expected a product, found `{other}`"),
    }
}

/// Partitions the singleton block of `v` out of `main`, then reduces the
/// cut term to `CR(v, keep)` (or drops it when `keep` is empty) and drops
/// `CR(v)`. Returns the CR over the remaining blocks.
fn eliminate(d: &mut Derivation<'_>, main: &FactorExpr, v: &str, keep: &[String]) -> Result<FactorExpr> {
    let t = cr_term(main);
    let idx = t
        .blocks
        .iter()
        .position(|b| *b == Block::single(v))
        .ok_or_else(|| Error::rewrite(format!("`{v}` is not a block of `{t}`")))?;
    let path = locate(d.current(), main)?;
    let parts = d.apply(path, Rule::Bipartition { left: vec![idx] })?;
    let [alone, rest, cut] = product_children(&parts) else {
        unreachable!("bipartition yields three factors")
    };
    let rest_vars = cr_term(cut).blocks[1].len();
    if keep.is_empty() {
        d.apply(locate(d.current(), cut)?, Rule::Independence)?;
    } else if keep.len() < rest_vars {
        d.apply(locate(d.current(), cut)?, Rule::Cit1 { x: 0, w: keep.to_vec() })?;
    }
    d.apply(locate(d.current(), alone)?, Rule::SingleVar)?;
    Ok(rest.clone())
}

/// Drops the last single-block CR left by a sequence of eliminations.
fn finish_single(d: &mut Derivation<'_>, main: &FactorExpr) -> Result<()> {
    d.apply(locate(d.current(), main)?, Rule::SingleVar)?;
    Ok(())
}

/// Checks every pairwise Markov statement `(a _|_ b | rest)` for
/// non-adjacent `a`, `b`.
pub fn check_markov(table: &JointTable, g: &ModelGraph, tol: f64) -> Result<()> {
    let nodes = g.nodes();
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            if g.is_adjacent(a, b)? {
                continue;
            }
            let rest: Vec<String> = nodes.iter().filter(|n| *n != a && *n != b).cloned().collect();
            let q = CiQuery::new(std::slice::from_ref(a), std::slice::from_ref(b), &rest);
            let dev = ci_deviation(table, &q)?;
            if dev > tol {
                return Err(Error::NotMarkov(format!("{q} fails (deviation {dev:.3e})")));
            }
        }
    }
    Ok(())
}

pub(crate) fn require_positive(table: &JointTable) -> Result<()> {
    if !table.is_strictly_positive() {
        return Err(Error::precondition("table must be strictly positive"));
    }
    Ok(())
}

pub(crate) fn require_same_variables(table: &JointTable, g: &ModelGraph) -> Result<()> {
    let mut a: Vec<&str> = table.names();
    let mut b: Vec<&str> = g.nodes().iter().map(String::as_str).collect();
    a.sort_unstable();
    b.sort_unstable();
    if a != b {
        return Err(Error::precondition("table variables and graph nodes differ"));
    }
    Ok(())
}

/// Markov check at the default tolerance.
pub(crate) fn require_markov(table: &JointTable, g: &ModelGraph) -> Result<()> {
    check_markov(table, g, CI_TOL)
}

pub(crate) fn ctx<'a>(g: &'a ModelGraph, table: Option<&'a JointTable>) -> CertContext<'a> {
    CertContext::new(Some(g), table.filter(|t| t.is_strictly_positive()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GibbsModel, GraphKind, Potential, Variable};

    #[test]
    fn markov_check_flags_missing_edges() {
        let path = ModelGraph::with_edges(GraphKind::Undirected, &["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        let vars = ["a", "b", "c"].map(Variable::binary).to_vec();
        let gm = GibbsModel::new(
            path.clone(),
            vars.clone(),
            vec![
                Potential::new(vec!["a".into(), "b".into()], vec![3.0, 1.0, 1.0, 2.0]),
                Potential::new(vec!["b".into(), "c".into()], vec![1.0, 4.0, 2.0, 1.0]),
            ],
        )
        .unwrap();
        check_markov(gm.joint(), &path, CI_TOL).unwrap();
        let sparse = ModelGraph::with_edges(GraphKind::Undirected, &["a", "b", "c"], &[("a", "b")]).unwrap();
        assert!(matches!(check_markov(gm.joint(), &sparse, CI_TOL), Err(Error::NotMarkov(_))));
    }

    #[test]
    fn reconstruction_shape() {
        let vars: Vec<String> = ["A", "B"].map(String::from).to_vec();
        assert_eq!(reconstruction(&vars, None).to_string(), "CR(A,B)·P(A)·P(B)");
        let x = Block::free(&["X1", "X2"]);
        assert_eq!(reconstruction(&vars, Some(&x)).to_string(), "CR(A,B|X1 X2)·P(A|X1 X2)·P(B|X1 X2)");
    }
}
