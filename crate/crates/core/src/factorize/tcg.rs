//! Clique graphs, the reducibility test for tree-structured clique graphs,
//! and their default-free factorization over maximal cliques.

use crate::cr::Block;
use crate::error::{Error, Result};
use crate::expr::{Derivation, FactorExpr, Rule};
use crate::model::{Clique, JointTable, ModelGraph};

use super::{ctx, locate, product_children, reconstruction, require_markov, require_same_variables, Factorization};

/// Maximal cliques (sorted lexicographically) joined when they intersect.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueGraph {
    pub cliques: Vec<Clique>,
    /// Index pairs `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl CliqueGraph {
    pub fn is_adjacent(&self, i: usize, j: usize) -> bool {
        let key = (i.min(j), i.max(j));
        self.edges.contains(&key)
    }
}

pub fn build_clique_graph(g: &ModelGraph) -> Result<CliqueGraph> {
    let cliques = g.maximal_cliques()?;
    let mut edges = Vec::new();
    for i in 0..cliques.len() {
        for j in i + 1..cliques.len() {
            if !cliques[i].intersection(&cliques[j]).is_empty() {
                edges.push((i, j));
            }
        }
    }
    Ok(CliqueGraph { cliques, edges })
}

/// One removal: `clique` leaves, `max_adjacent` is the neighbour whose
/// intersection with it contains every other neighbour's.
#[derive(Debug, Clone, PartialEq)]
pub struct Elimination {
    pub clique: Clique,
    pub max_adjacent: Clique,
}

impl Elimination {
    pub fn separator(&self) -> Clique {
        self.clique.intersection(&self.max_adjacent)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcgCheck {
    pub is_tcg: bool,
    /// Removals performed, including those made before getting stuck.
    pub eliminations: Vec<Elimination>,
    /// The last clique standing, when the graph reduces.
    pub root: Option<Clique>,
}

/// Repeatedly removes the first clique (in lexicographic order) that has a
/// dominating neighbour; ties between dominating neighbours go to the
/// lexicographically smallest. Reducible to at most one clique means TCG.
pub fn is_tcg(g: &ModelGraph) -> Result<TcgCheck> {
    let cg = build_clique_graph(g)?;
    let mut alive: Vec<usize> = (0..cg.cliques.len()).collect();
    let mut eliminations = Vec::new();
    loop {
        if alive.len() <= 1 {
            return Ok(TcgCheck {
                is_tcg: true,
                eliminations,
                root: alive.first().map(|&i| cg.cliques[i].clone()),
            });
        }
        let removable = alive.iter().enumerate().find_map(|(pos, &i)| {
            let adj: Vec<usize> = alive.iter().copied().filter(|&j| j != i && cg.is_adjacent(i, j)).collect();
            let ci = &cg.cliques[i];
            adj.iter()
                .copied()
                .find(|&j| {
                    let dominant = ci.intersection(&cg.cliques[j]);
                    adj.iter().all(|&h| ci.intersection(&cg.cliques[h]).is_subset(&dominant))
                })
                .map(|j| (pos, i, j))
        });
        match removable {
            Some((pos, i, j)) => {
                eliminations.push(Elimination {
                    clique: cg.cliques[i].clone(),
                    max_adjacent: cg.cliques[j].clone(),
                });
                alive.remove(pos);
            }
            None => {
                return Ok(TcgCheck {
                    is_tcg: false,
                    eliminations,
                    root: None,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcgResult {
    pub clique_graph: CliqueGraph,
    pub eliminations: Vec<Elimination>,
    pub root: Clique,
    /// `P(c) · P(c ∩ Maxadj(c))^-1` per eliminated clique, then `P(root)`.
    pub factors: Vec<(Clique, FactorExpr)>,
    /// The same result reached by duplicate, partition and CIT rewrites.
    pub derivation: Factorization,
}

impl TcgResult {
    pub fn expr(&self) -> FactorExpr {
        FactorExpr::Product(self.factors.iter().map(|(_, f)| f.clone()).collect())
    }
}

pub fn factorize_tcg(table: &JointTable, g: &ModelGraph) -> Result<TcgResult> {
    if g.is_directed() {
        return Err(Error::precondition("TCG factorization needs an undirected graph"));
    }
    let check = is_tcg(g)?;
    if !check.is_tcg {
        return Err(Error::NotTcg);
    }
    require_same_variables(table, g)?;
    require_markov(table, g)?;
    let root = check.root.clone().expect("a reducible graph has a root");

    let mut factors: Vec<(Clique, FactorExpr)> = check
        .eliminations
        .iter()
        .map(|e| {
            let f = FactorExpr::Product(vec![
                FactorExpr::p(Block::free(e.clique.members())),
                FactorExpr::p(Block::free(e.separator().members())).pow(-1).expect("P terms take powers"),
            ]);
            (e.clique.clone(), f)
        })
        .collect();
    factors.push((root.clone(), FactorExpr::p(Block::free(root.members()))));

    Ok(TcgResult {
        clique_graph: build_clique_graph(g)?,
        derivation: derive(table, g, &check.eliminations)?,
        eliminations: check.eliminations,
        root,
        factors,
    })
}

fn first_index(blocks: &[Block], name: &str) -> Result<usize> {
    blocks
        .iter()
        .position(|b| *b == Block::single(name))
        .ok_or_else(|| Error::rewrite(format!("`{name}` is not a block of the remaining CR")))
}

fn blocks_of(e: &FactorExpr) -> &[Block] {
    match e {
        FactorExpr::Cr(t) => &t.blocks,
        other => panic!("expected a CR term, found `{other}`"),
    }
}

/// Duplicates each separator, partitions the clique out and collapses the
/// cut with the third CIT; finally groups each clique CR with its
/// marginals.
fn derive(table: &JointTable, g: &ModelGraph, eliminations: &[Elimination]) -> Result<Factorization> {
    let nodes = g.nodes().to_vec();
    let mut d = Derivation::new(reconstruction(&nodes, None), ctx(g, Some(table)));
    let mut main = product_children(d.current())[0].clone();
    let mut clique_terms = Vec::new();
    for e in eliminations {
        for s in e.separator().members() {
            let idx = first_index(blocks_of(&main), s)?;
            let out = d.apply(locate(d.current(), &main)?, Rule::Duplicate { block: idx })?;
            main = product_children(&out)[0].clone();
        }
        let left = e
            .clique
            .members()
            .iter()
            .map(|x| first_index(blocks_of(&main), x))
            .collect::<Result<Vec<_>>>()?;
        let out = d.apply(locate(d.current(), &main)?, Rule::Bipartition { left })?;
        let [clique_cr, rest, cut] = product_children(&out) else {
            unreachable!("bipartition yields three factors")
        };
        d.apply(locate(d.current(), cut)?, Rule::Cit3)?;
        clique_terms.push(clique_cr.clone());
        main = rest.clone();
    }
    clique_terms.push(main);

    for term in &clique_terms {
        let children = product_children(d.current());
        let cr = children
            .iter()
            .position(|c| c == term)
            .ok_or_else(|| Error::rewrite(format!("`{term}` not found")))?;
        let mut used: Vec<usize> = Vec::new();
        for b in blocks_of(term) {
            let p = children
                .iter()
                .enumerate()
                .position(|(k, c)| !used.contains(&k) && *c == FactorExpr::p(b.clone()))
                .ok_or_else(|| Error::rewrite(format!("no P({b}) left to group")))?;
            used.push(p);
        }
        d.apply(Vec::new(), Rule::Group { cr, p: used })?;
    }
    Ok(Factorization::from_derivation(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{replay_trace, CertContext};
    use crate::model::{GraphKind, Variable};
    use crate::verify::{verify_joint, DEFAULT_TOL};

    fn undirected(nodes: &[&str], edges: &[(&str, &str)]) -> ModelGraph {
        ModelGraph::with_edges(GraphKind::Undirected, nodes, edges).unwrap()
    }

    fn fan() -> ModelGraph {
        undirected(
            &["x", "a", "b", "c", "d"],
            &[("x", "a"), ("x", "b"), ("x", "c"), ("x", "d"), ("a", "b"), ("b", "c"), ("c", "d")],
        )
    }

    #[test]
    fn clique_graphs() {
        let path = build_clique_graph(&undirected(&["a", "b", "c"], &[("a", "b"), ("b", "c")])).unwrap();
        assert_eq!(path.cliques.len(), 2);
        assert_eq!(path.edges, vec![(0, 1)]);
        let cycle = build_clique_graph(&undirected(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])).unwrap();
        // ab, ad, bc, cd: each meets exactly two others.
        assert_eq!(cycle.edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        let fan = build_clique_graph(&fan()).unwrap();
        assert_eq!(fan.edges.len(), 3, "all three triangles share x");
    }

    #[test]
    fn reducibility() {
        assert!(is_tcg(&undirected(&["a", "b", "c"], &[("a", "b"), ("b", "c"), ("a", "c")])).unwrap().is_tcg);
        let star = undirected(&["h", "a", "b", "c"], &[("h", "a"), ("h", "b"), ("h", "c")]);
        assert!(is_tcg(&star).unwrap().is_tcg);
        let check = is_tcg(&fan()).unwrap();
        assert!(check.is_tcg);
        assert_eq!(check.eliminations[0].clique, Clique::new(&["a", "b", "x"]));
        assert_eq!(check.eliminations[0].max_adjacent, Clique::new(&["b", "c", "x"]));
        assert_eq!(check.root, Some(Clique::new(&["c", "d", "x"])));
        let cycle = undirected(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")]);
        let check = is_tcg(&cycle).unwrap();
        assert!(!check.is_tcg && check.eliminations.is_empty());
        let split = undirected(&["a", "b", "c", "d"], &[("a", "b"), ("c", "d")]);
        assert!(!is_tcg(&split).unwrap().is_tcg);
    }

    #[test]
    fn path_factors_match_hand_values() {
        // A uniform, P(B=A)=0.9, P(C=B)=0.8 on the path a - b - c.
        let mut probs = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    probs.push(0.5 * if a == b { 0.9 } else { 0.1 } * if b == c { 0.8 } else { 0.2 });
                }
            }
        }
        let t = JointTable::new(["a", "b", "c"].map(Variable::binary).to_vec(), probs).unwrap();
        let g = undirected(&["a", "b", "c"], &[("a", "b"), ("b", "c")]);
        let r = factorize_tcg(&t, &g).unwrap();
        assert_eq!(r.expr().to_string(), "(P(a b)·P(b)^-1)·P(b c)");
        let zeros = crate::model::Assignment::new().with("a", 0).with("b", 0).with("c", 0);
        assert!((r.expr().eval(&t, &zeros).unwrap() - 0.36).abs() < 1e-12);
        assert!(verify_joint(&r.expr(), &t, DEFAULT_TOL).unwrap().pass);
        assert!(r.derivation.expr.equivalent(&r.expr()), "{}", r.derivation.expr);
        let replayed = replay_trace(&r.derivation.initial, &r.derivation.trace, &CertContext::graph_only(&g)).unwrap();
        assert_eq!(replayed, r.derivation.expr);
    }

    #[test]
    fn single_clique_and_failures() {
        let g = undirected(&["a", "b"], &[("a", "b")]);
        let t = JointTable::new(vec![Variable::binary("a"), Variable::binary("b")], vec![0.4, 0.1, 0.2, 0.3]).unwrap();
        let r = factorize_tcg(&t, &g).unwrap();
        assert_eq!(r.expr().to_string(), "P(a b)");
        assert_eq!(r.derivation.expr.to_string(), "P(a b)");
        let cycle = undirected(&["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")]);
        let t4 = JointTable::new(["a", "b", "c", "d"].map(Variable::binary).to_vec(), vec![1.0 / 16.0; 16]).unwrap();
        assert!(matches!(factorize_tcg(&t4, &cycle), Err(Error::NotTcg)));
    }
}
