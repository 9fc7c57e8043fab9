use crate::error::{Error, Result};
use crate::model::{JointTable, ModelGraph, NodeMask};

use super::{ctx, eliminate, finish_single, product_children, reconstruction, Derivation, Factorization};

/// CR factorization of an undirected model by repeated partitioning.
///
/// Nodes leave in `elimination` order (default: reverse declaration order).
/// Each node keeps, in its cut term, the remaining nodes adjacent to it or
/// to an already eliminated node connected to it; those separate it from
/// everything else still present. Certificates come from vertex separation,
/// with a numeric fallback when `table` is given.
pub fn factorize_markov(g: &ModelGraph, table: Option<&JointTable>, elimination: Option<&[String]>) -> Result<Factorization> {
    if g.is_directed() {
        return Err(Error::precondition("partition factorization needs an undirected graph"));
    }
    let nodes = g.nodes().to_vec();
    let elimination: Vec<String> = match elimination {
        Some(e) => {
            let mut sorted = e.to_vec();
            sorted.sort();
            let mut all = nodes.clone();
            all.sort();
            if sorted != all {
                return Err(Error::precondition("elimination order must list every node exactly once"));
            }
            e.to_vec()
        }
        None => nodes.iter().rev().cloned().collect(),
    };

    let mut d = Derivation::new(reconstruction(&nodes, None), ctx(g, table));
    let mut main = product_children(d.current())[0].clone();
    let mut remaining: NodeMask = g.all_mask();
    for (k, v) in elimination.iter().enumerate() {
        if k + 1 == elimination.len() {
            finish_single(&mut d, &main)?;
            break;
        }
        let i = g.index_of(v)?;
        let others = remaining & !(1 << i);
        let reach = g.component_of(i, others);
        let keep = g.names_of(g.blanket_mask(reach) & others);
        main = eliminate(&mut d, &main, v, &keep)?;
        remaining = others;
    }
    Ok(Factorization::from_derivation(d))
}

/// Tree-structured model: leaves are removed one at a time (smallest
/// declaration index first), giving `Π_edges CR(u, v) · Π_nodes P(v)`.
pub fn factorize_tree_mn(g: &ModelGraph) -> Result<Factorization> {
    if g.is_directed() || !g.is_tree() {
        return Err(Error::precondition("tree factorization needs a connected acyclic undirected graph"));
    }
    let n = g.node_count();
    let mut remaining: NodeMask = g.all_mask();
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let leaf = (0..n)
            .find(|&i| remaining & (1 << i) != 0 && (g.neighbor_mask(i) & remaining).count_ones() <= 1)
            .expect("a tree always has a leaf");
        order.push(g.nodes()[leaf].clone());
        remaining &= !(1 << leaf);
    }
    factorize_markov(g, None, Some(&order))
}
