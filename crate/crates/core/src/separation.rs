//! Independence certificates: d-separation, undirected vertex separation,
//! numeric conditional-independence tests and the unconnected-nodes
//! identity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cr::{cr_value, Binding, Block};
use crate::error::{Error, Result};
use crate::model::{state_tuples, Assignment, JointTable, ModelGraph, NodeMask};

/// Default tolerance for numeric independence checks.
pub const CI_TOL: f64 = 1e-9;

/// The statement `(x ⟂ y | z)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CiQuery {
    pub x: Vec<String>,
    pub y: Vec<String>,
    #[serde(default)]
    pub z: Vec<String>,
}

impl CiQuery {
    pub fn new<S: AsRef<str>>(x: &[S], y: &[S], z: &[S]) -> Self {
        let own = |v: &[S]| v.iter().map(|s| s.as_ref().to_string()).collect();
        CiQuery {
            x: own(x),
            y: own(y),
            z: own(z),
        }
    }

    /// Order-insensitive comparison.
    pub fn same_statement(&self, other: &CiQuery) -> bool {
        let sorted = |v: &[String]| {
            let mut v = v.to_vec();
            v.sort();
            v.dedup();
            v
        };
        let (x, y, z) = (sorted(&self.x), sorted(&self.y), sorted(&self.z));
        let (ox, oy, oz) = (sorted(&other.x), sorted(&other.y), sorted(&other.z));
        z == oz && ((x == ox && y == oy) || (x == oy && y == ox))
    }

    /// Empty `x` or `y` makes the statement hold trivially.
    pub fn is_trivial(&self) -> bool {
        self.x.is_empty() || self.y.is_empty()
    }

    fn check_disjoint(&self) -> Result<()> {
        let all: Vec<&String> = self.x.iter().chain(&self.y).chain(&self.z).collect();
        for (i, n) in all.iter().enumerate() {
            if all[..i].contains(n) {
                return Err(Error::precondition(format!(
                    "`{n}` appears twice in independence query {self}"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for CiQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} _|_ {} | {}", self.x.join(" "), self.y.join(" "), self.z.join(" "))?;
        Ok(())
    }
}

impl FromStr for CiQuery {
    type Err = Error;

    /// Parses `X _|_ Y | Z` where each side is a whitespace- or
    /// comma-separated name list and `| Z` is optional.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::ExprParse {
            offset: 0,
            message: format!("{m} in query `{s}`"),
        };
        let (x, rest) = s.split_once("_|_").ok_or_else(|| bad("missing `_|_`"))?;
        let (y, z) = match rest.split_once('|') {
            Some((y, z)) => (y, z),
            None => (rest, ""),
        };
        let names = |part: &str| -> Vec<String> {
            part.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|w| !w.is_empty())
                .map(str::to_string)
                .collect()
        };
        let q = CiQuery {
            x: names(x),
            y: names(y),
            z: names(z),
        };
        if q.x.is_empty() || q.y.is_empty() {
            return Err(bad("both sides of `_|_` need variables"));
        }
        Ok(q)
    }
}

fn masks(g: &ModelGraph, q: &CiQuery) -> Result<(NodeMask, NodeMask, NodeMask)> {
    q.check_disjoint()?;
    Ok((g.mask_of(&q.x)?, g.mask_of(&q.y)?, g.mask_of(&q.z)?))
}

/// d-separation by active-trail reachability.
pub fn d_separated(dag: &ModelGraph, q: &CiQuery) -> Result<bool> {
    if !dag.is_directed() {
        return Err(Error::precondition("d-separation needs a directed graph"));
    }
    dag.topological_order()?;
    let (x, y, z) = masks(dag, q)?;
    let n = dag.node_count();
    let bit = |i: usize| 1u64 << i;

    // Ancestors of the evidence, evidence included.
    let mut ancestors = z;
    let mut frontier: Vec<usize> = (0..n).filter(|&i| z & bit(i) != 0).collect();
    while let Some(i) = frontier.pop() {
        let fresh = dag.parent_mask(i) & !ancestors;
        ancestors |= fresh;
        frontier.extend((0..n).filter(|&j| fresh & bit(j) != 0));
    }

    // (node, arrived from a child) pairs.
    let mut visited = [0u64; 2];
    let mut reachable: NodeMask = 0;
    let mut stack: Vec<(usize, bool)> = (0..n).filter(|&i| x & bit(i) != 0).map(|i| (i, true)).collect();
    while let Some((node, up)) = stack.pop() {
        let slot = usize::from(up);
        if visited[slot] & bit(node) != 0 {
            continue;
        }
        visited[slot] |= bit(node);
        let observed = z & bit(node) != 0;
        if !observed {
            reachable |= bit(node);
        }
        let parents = dag.parent_mask(node);
        let children = dag.child_mask(node);
        let push = |stack: &mut Vec<(usize, bool)>, mask: NodeMask, up: bool| {
            stack.extend((0..n).filter(|&j| mask & bit(j) != 0).map(|j| (j, up)));
        };
        if up && !observed {
            push(&mut stack, parents, true);
            push(&mut stack, children, false);
        } else if !up {
            if !observed {
                push(&mut stack, children, false);
            }
            if ancestors & bit(node) != 0 {
                push(&mut stack, parents, true);
            }
        }
    }
    Ok(reachable & y == 0)
}

/// True iff removing `z` disconnects every node of `x` from every node of
/// `y`.
pub fn u_separated(g: &ModelGraph, q: &CiQuery) -> Result<bool> {
    if g.is_directed() {
        return Err(Error::precondition("vertex separation needs an undirected graph"));
    }
    let (x, y, z) = masks(g, q)?;
    let reach = (0..g.node_count())
        .filter(|&i| x & (1 << i) != 0)
        .fold(0, |m, i| m | g.component_of(i, z));
    Ok(reach & y == 0)
}

/// d-separation for directed graphs, vertex separation otherwise.
pub fn graph_separated(g: &ModelGraph, q: &CiQuery) -> Result<bool> {
    if g.is_directed() {
        d_separated(g, q)
    } else {
        u_separated(g, q)
    }
}

/// Largest `|CR(x, y | z) - 1|` over assignments with `P(z) > 0`.
pub fn ci_deviation(table: &JointTable, q: &CiQuery) -> Result<f64> {
    q.check_disjoint()?;
    if q.is_trivial() {
        return Ok(0.0);
    }
    let index = |names: &[String]| -> Result<Vec<usize>> { names.iter().map(|n| table.index_of(n)).collect() };
    let (xi, yi, zi) = (index(&q.x)?, index(&q.y)?, index(&q.z)?);
    let all: Vec<usize> = xi.iter().chain(&yi).chain(&zi).copied().collect();
    let cards: Vec<usize> = all.iter().map(|&i| table.variables()[i].cardinality()).collect();
    let (nx, ny) = (xi.len(), yi.len());
    let mut worst: f64 = 0.0;
    for states in state_tuples(&cards) {
        let event: Vec<(usize, usize)> = all.iter().copied().zip(states.iter().copied()).collect();
        let (xs, rest) = event.split_at(nx);
        let (ys, zs) = rest.split_at(ny);
        let pz = table.event_prob(zs);
        if pz <= 0.0 {
            continue;
        }
        let pxz = table.event_prob(&[xs, zs].concat());
        let pyz = table.event_prob(&[ys, zs].concat());
        if pxz <= 0.0 || pyz <= 0.0 {
            continue;
        }
        let pxyz = table.event_prob(&event);
        worst = worst.max((pxyz * pz / (pxz * pyz) - 1.0).abs());
    }
    Ok(worst)
}

/// Numeric test of `(x ⟂ y | z)`: conditional CR within `tol` of 1
/// wherever the condition has positive probability.
pub fn numeric_ci_test(table: &JointTable, q: &CiQuery, tol: f64) -> Result<bool> {
    Ok(ci_deviation(table, q)? <= tol)
}

/// Both sides of the unconnected-nodes identity
///
/// `CR(W, a=0, b=0, X=0) CR(W, a, b, X=0) = CR(W, a=0, b, X=0) CR(W, a, b=0, X=0)`
///
/// for non-adjacent `a`, `b`, with `X` and the `=0` bindings pinned to
/// `defaults`. Every variable gets its own block.
#[allow(clippy::too_many_arguments)]
pub fn unt_check(
    table: &JointTable,
    g: &ModelGraph,
    a: &str,
    b: &str,
    w: &[String],
    x: &[String],
    assignment: &Assignment,
    defaults: &Assignment,
) -> Result<(f64, f64)> {
    if g.is_adjacent(a, b)? {
        return Err(Error::precondition(format!("`{a}` and `{b}` are adjacent")));
    }
    CiQuery::new(&[a.to_string(), b.to_string()], w, x).check_disjoint()?;
    let covered = g.mask_of(w)? | g.mask_of(x)?;
    let blanket = g.blanket_mask(g.mask_of(&[a, b])?);
    if blanket & !covered != 0 {
        return Err(Error::precondition(format!(
            "Markov blanket of {{{a}, {b}}} is not covered by W ∪ X"
        )));
    }
    let default_of = |n: &str| defaults.get(n).ok_or_else(|| Error::Unbound(n.to_string()));
    let pinned = |n: &str| -> Result<Block> { Block::new(vec![(n.to_string(), Binding::Pinned(default_of(n)?))]) };
    let mut base: Vec<Block> = w.iter().map(Block::single).collect();
    for n in x {
        base.push(pinned(n)?);
    }
    let term = |a_block: Block, b_block: Block| -> Result<f64> {
        let mut blocks = base.clone();
        blocks.push(a_block);
        blocks.push(b_block);
        cr_value(table, &blocks, assignment)
    };
    let lhs = term(pinned(a)?, pinned(b)?)? * term(Block::single(a), Block::single(b))?;
    let rhs = term(pinned(a)?, Block::single(b))? * term(Block::single(a), pinned(b)?)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphKind, Variable};

    fn student() -> ModelGraph {
        ModelGraph::with_edges(
            GraphKind::Directed,
            &["D", "I", "G", "S", "L"],
            &[("D", "G"), ("I", "G"), ("I", "S"), ("G", "L")],
        )
        .unwrap()
    }

    fn q(s: &str) -> CiQuery {
        s.parse().unwrap()
    }

    #[test]
    fn student_network_d_separation() {
        let g = student();
        assert!(d_separated(&g, &q("D _|_ I")).unwrap());
        assert!(d_separated(&g, &q("D _|_ L | G")).unwrap());
        // Observing the collider G opens D -> G <- I -> S.
        assert!(!d_separated(&g, &q("D _|_ S | G")).unwrap());
        assert!(!d_separated(&g, &q("D _|_ I | G")).unwrap());
        assert!(!d_separated(&g, &q("D _|_ I S L | G")).unwrap());
        // Observing a descendant of the collider also opens the trail.
        assert!(!d_separated(&g, &q("D _|_ I | L")).unwrap());
        assert!(d_separated(&g, &q("L _|_ S | I")).unwrap());
        assert!(!d_separated(&g, &q("L _|_ S")).unwrap());
    }

    #[test]
    fn chain_d_separation() {
        let g = ModelGraph::with_edges(GraphKind::Directed, &["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        assert!(d_separated(&g, &q("A _|_ C | B")).unwrap());
        assert!(!d_separated(&g, &q("A _|_ C")).unwrap());
    }

    #[test]
    fn cyclic_graphs_are_rejected() {
        let mut g = ModelGraph::with_edges(GraphKind::Directed, &["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap();
        g.add_edge("C", "A").unwrap();
        assert!(d_separated(&g, &q("A _|_ C | B")).is_err());
    }

    #[test]
    fn vertex_separation() {
        let path = ModelGraph::with_edges(GraphKind::Undirected, &["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
        assert!(u_separated(&path, &q("a _|_ c | b")).unwrap());
        let cycle = ModelGraph::with_edges(
            GraphKind::Undirected,
            &["a", "b", "c", "d"],
            &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")],
        )
        .unwrap();
        assert!(!u_separated(&cycle, &q("a _|_ c | b")).unwrap());
        assert!(u_separated(&cycle, &q("a _|_ c | b d")).unwrap());
    }

    #[test]
    fn query_parsing() {
        let parsed = q("D _|_ I |");
        assert_eq!(parsed, CiQuery::new(&["D"], &["I"], &[]));
        let parsed = q("A,B _|_ C | D E");
        assert_eq!(parsed, CiQuery::new(&["A", "B"], &["C"], &["D", "E"]));
        assert!("A _|_ | B".parse::<CiQuery>().is_err());
        assert!("A B".parse::<CiQuery>().is_err());
        assert!(CiQuery::new(&["A"], &["B"], &[]).same_statement(&CiQuery::new(&["B"], &["A"], &[])));
    }

    #[test]
    fn numeric_tests() {
        let vars = vec![Variable::binary("A"), Variable::binary("B")];
        let coins = JointTable::new(vars.clone(), vec![0.25; 4]).unwrap();
        assert!(numeric_ci_test(&coins, &q("A _|_ B"), CI_TOL).unwrap());
        let d2 = JointTable::new(vars, vec![0.4, 0.1, 0.1, 0.4]).unwrap();
        assert!(!numeric_ci_test(&d2, &q("A _|_ B"), CI_TOL).unwrap());
        assert!((ci_deviation(&d2, &q("A _|_ B")).unwrap() - 0.6).abs() < 1e-12);
    }
}
