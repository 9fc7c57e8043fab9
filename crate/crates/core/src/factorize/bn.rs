use crate::cr::Block;
use crate::error::{Error, Result};
use crate::expr::{CertContext, Derivation, FactorExpr, Rule};
use crate::model::ModelGraph;

use super::{eliminate, finish_single, product_children, reconstruction, Factorization};

/// Bayesian-network factorization through CRs.
///
/// Starting from `CR(all) · Π P(v)`, nodes are partitioned out in reverse
/// `order`, each keeping only its parents in the cut term (d-separation
/// certificates). The resulting `CR(v, parents) · P(v)` pairs are then
/// grouped into `P(v | parents)`.
pub fn factorize_bn(dag: &ModelGraph, order: Option<&[String]>) -> Result<Factorization> {
    if !dag.is_directed() {
        return Err(Error::precondition("BN factorization needs a directed graph"));
    }
    let order = match order {
        Some(o) => {
            dag.check_topological(o)?;
            o.to_vec()
        }
        None => dag.topological_order()?,
    };
    let mut d = Derivation::new(reconstruction(&order, None), CertContext::graph_only(dag));
    let mut main = product_children(d.current())[0].clone();
    for (k, v) in order.iter().enumerate().rev() {
        if k == 0 {
            finish_single(&mut d, &main)?;
            break;
        }
        main = eliminate(&mut d, &main, v, &dag.parents(v)?)?;
    }

    for v in &order {
        let parents = dag.parents(v)?;
        if parents.is_empty() {
            continue;
        }
        let parent_block = Block::free(&parents);
        let own = Block::single(v.as_str());
        let children = product_children(d.current());
        let cr = children.iter().position(|c| match c {
            FactorExpr::Cr(t) => t.cond.is_none() && t.blocks.len() == 2 && t.blocks[0] == own && t.blocks[1].same_vars(&parent_block),
            _ => false,
        });
        let p = children.iter().position(|c| *c == FactorExpr::p(own.clone()));
        let (Some(cr), Some(p)) = (cr, p) else {
            return Err(Error::rewrite(format!("no CR({v},..)·P({v}) pair to group")));
        };
        d.apply(Vec::new(), Rule::Group { cr, p: vec![p] })?;
    }
    Ok(Factorization::from_derivation(d))
}
