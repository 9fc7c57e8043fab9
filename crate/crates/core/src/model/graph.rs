use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::model::variable::is_identifier;

/// Node sets are bitmasks over node indices.
pub(crate) type NodeMask = u64;

pub const MAX_GRAPH_NODES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Directed,
    Undirected,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Directed => write!(f, "directed"),
            GraphKind::Undirected => write!(f, "undirected"),
        }
    }
}

/// A maximal (or arbitrary) clique, members sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clique(Vec<String>);

impl Clique {
    pub fn new<S: AsRef<str>>(members: &[S]) -> Self {
        let mut m: Vec<String> = members.iter().map(|s| s.as_ref().to_string()).collect();
        m.sort();
        m.dedup();
        Clique(m)
    }

    pub fn members(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.binary_search_by(|m| m.as_str().cmp(name)).is_ok()
    }

    pub fn intersection(&self, other: &Clique) -> Clique {
        Clique(self.0.iter().filter(|m| other.contains(m)).cloned().collect())
    }

    pub fn is_subset(&self, other: &Clique) -> bool {
        self.0.iter().all(|m| other.contains(m))
    }
}

impl fmt::Display for Clique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(","))
    }
}

/// Directed (Bayesian network) or undirected (Markov network) graph over
/// named nodes. Node order is declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelGraph {
    kind: GraphKind,
    names: Vec<String>,
    /// Directed: `a -> b`. Undirected: stored with `a < b` by index.
    edges: BTreeSet<(usize, usize)>,
}

impl ModelGraph {
    pub fn new<S: AsRef<str>>(kind: GraphKind, nodes: &[S]) -> Result<Self> {
        let mut g = ModelGraph {
            kind,
            names: Vec::new(),
            edges: BTreeSet::new(),
        };
        for n in nodes {
            g.add_node(n.as_ref())?;
        }
        Ok(g)
    }

    /// Builds a graph from `(from, to)` edge names.
    pub fn with_edges<S: AsRef<str>>(kind: GraphKind, nodes: &[S], edges: &[(S, S)]) -> Result<Self> {
        let mut g = Self::new(kind, nodes)?;
        for (a, b) in edges {
            g.add_edge(a.as_ref(), b.as_ref())?;
        }
        Ok(g)
    }

    pub fn add_node(&mut self, name: &str) -> Result<usize> {
        if !is_identifier(name) {
            return Err(Error::invalid(format!("`{name}` is not a valid node name")));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::invalid(format!("duplicate node `{name}`")));
        }
        if self.names.len() == MAX_GRAPH_NODES {
            return Err(Error::invalid(format!(
                "graphs are limited to {MAX_GRAPH_NODES} nodes"
            )));
        }
        self.names.push(name.to_string());
        Ok(self.names.len() - 1)
    }

    pub fn add_edge(&mut self, a: &str, b: &str) -> Result<()> {
        let ia = self.index_of(a)?;
        let ib = self.index_of(b)?;
        if ia == ib {
            return Err(Error::invalid(format!("self-loop on `{a}`")));
        }
        let edge = match self.kind {
            GraphKind::Directed => {
                if self.edges.contains(&(ib, ia)) {
                    return Err(Error::invalid(format!("edges {a}->{b} and {b}->{a} form a cycle")));
                }
                (ia, ib)
            }
            GraphKind::Undirected => (ia.min(ib), ia.max(ib)),
        };
        self.edges.insert(edge);
        Ok(())
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn is_directed(&self) -> bool {
        self.kind == GraphKind::Directed
    }

    pub fn nodes(&self) -> &[String] {
        &self.names
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges by name, in index order.
    pub fn edges(&self) -> Vec<(&str, &str)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.names[a].as_str(), self.names[b].as_str()))
            .collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub(crate) fn mask_of<S: AsRef<str>>(&self, names: &[S]) -> Result<NodeMask> {
        names
            .iter()
            .try_fold(0, |m, n| Ok(m | (1 << self.index_of(n.as_ref())?)))
    }

    pub(crate) fn names_of(&self, mask: NodeMask) -> Vec<String> {
        (0..self.names.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| self.names[i].clone())
            .collect()
    }

    pub(crate) fn all_mask(&self) -> NodeMask {
        if self.names.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.names.len()) - 1
        }
    }

    /// Neighbours ignoring edge direction.
    pub(crate) fn neighbor_mask(&self, i: usize) -> NodeMask {
        self.edges.iter().fold(0, |m, &(a, b)| {
            if a == i {
                m | (1 << b)
            } else if b == i {
                m | (1 << a)
            } else {
                m
            }
        })
    }

    pub(crate) fn parent_mask(&self, i: usize) -> NodeMask {
        self.edges
            .iter()
            .filter(|&&(_, b)| b == i)
            .fold(0, |m, &(a, _)| m | (1 << a))
    }

    pub(crate) fn child_mask(&self, i: usize) -> NodeMask {
        self.edges
            .iter()
            .filter(|&&(a, _)| a == i)
            .fold(0, |m, &(_, b)| m | (1 << b))
    }

    pub fn is_adjacent(&self, a: &str, b: &str) -> Result<bool> {
        let (ia, ib) = (self.index_of(a)?, self.index_of(b)?);
        Ok(self.edges.contains(&(ia, ib)) || self.edges.contains(&(ib, ia)))
    }

    pub fn neighbors(&self, name: &str) -> Result<Vec<String>> {
        Ok(self.names_of(self.neighbor_mask(self.index_of(name)?)))
    }

    /// Parents of a node in declaration order (directed graphs).
    pub fn parents(&self, name: &str) -> Result<Vec<String>> {
        Ok(self.names_of(self.parent_mask(self.index_of(name)?)))
    }

    /// Kahn's algorithm, smallest declaration index first.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        if !self.is_directed() {
            return Err(Error::precondition("topological order needs a directed graph"));
        }
        let n = self.names.len();
        let mut indegree: Vec<usize> = (0..n).map(|i| self.parent_mask(i).count_ones() as usize).collect();
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let next = (0..n).find(|&i| !done[i] && indegree[i] == 0);
            let Some(i) = next else {
                return Err(Error::invalid("directed graph contains a cycle"));
            };
            done[i] = true;
            order.push(self.names[i].clone());
            for (c, deg) in indegree.iter_mut().enumerate() {
                if self.child_mask(i) & (1 << c) != 0 {
                    *deg -= 1;
                }
            }
        }
        Ok(order)
    }

    pub fn is_acyclic(&self) -> bool {
        !self.is_directed() || self.topological_order().is_ok()
    }

    /// Checks that `order` lists every node once with parents first.
    pub fn check_topological(&self, order: &[String]) -> Result<()> {
        if order.len() != self.names.len() {
            return Err(Error::precondition("order must list every node exactly once"));
        }
        let mut seen: NodeMask = 0;
        for name in order {
            let i = self.index_of(name)?;
            if seen & (1 << i) != 0 {
                return Err(Error::precondition(format!("`{name}` listed twice in order")));
            }
            if self.parent_mask(i) & !seen != 0 {
                return Err(Error::precondition(format!(
                    "order is not topological: `{name}` precedes one of its parents"
                )));
            }
            seen |= 1 << i;
        }
        Ok(())
    }

    /// Same nodes, every edge made undirected.
    pub fn skeleton(&self) -> ModelGraph {
        let edges = self.edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
        ModelGraph {
            kind: GraphKind::Undirected,
            names: self.names.clone(),
            edges,
        }
    }

    /// Skeleton plus edges between co-parents.
    pub fn moral_graph(&self) -> ModelGraph {
        let mut g = self.skeleton();
        if self.is_directed() {
            for i in 0..self.names.len() {
                let parents = self.parent_mask(i);
                for a in 0..self.names.len() {
                    for b in (a + 1)..self.names.len() {
                        if parents & (1 << a) != 0 && parents & (1 << b) != 0 {
                            g.edges.insert((a, b));
                        }
                    }
                }
            }
        }
        g
    }

    fn require_undirected(&self, what: &str) -> Result<()> {
        if self.is_directed() {
            Err(Error::precondition(format!("{what} needs an undirected graph")))
        } else {
            Ok(())
        }
    }

    pub(crate) fn is_clique_mask(&self, mask: NodeMask) -> bool {
        (0..self.names.len())
            .filter(|i| mask & (1 << i) != 0)
            .all(|i| mask & !(1 << i) & !self.neighbor_mask(i) == 0)
    }

    pub fn is_clique<S: AsRef<str>>(&self, members: &[S]) -> Result<bool> {
        Ok(self.is_clique_mask(self.mask_of(members)?))
    }

    pub(crate) fn maximal_clique_masks(&self) -> Vec<NodeMask> {
        let adj: Vec<NodeMask> = (0..self.names.len()).map(|i| self.neighbor_mask(i)).collect();
        let mut out = Vec::new();
        bron_kerbosch(&adj, 0, self.all_mask(), 0, &mut out);
        out
    }

    /// Exact set of maximal cliques, sorted lexicographically by their
    /// sorted member names.
    pub fn maximal_cliques(&self) -> Result<Vec<Clique>> {
        self.require_undirected("maximal clique enumeration")?;
        if self.names.is_empty() {
            return Ok(Vec::new());
        }
        let mut cliques: Vec<Clique> = self
            .maximal_clique_masks()
            .into_iter()
            .map(|m| Clique::new(&self.names_of(m)))
            .collect();
        cliques.sort();
        Ok(cliques)
    }

    /// Every complete subgraph, including the empty clique and singletons.
    pub fn all_cliques(&self) -> Result<Vec<Clique>> {
        self.require_undirected("clique enumeration")?;
        let mut subsets = BTreeSet::new();
        for mc in self.maximal_clique_masks() {
            let mut sub = mc;
            loop {
                subsets.insert(sub);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & mc;
            }
        }
        subsets.insert(0);
        let mut cliques: Vec<Clique> = subsets.into_iter().map(|m| Clique::new(&self.names_of(m))).collect();
        cliques.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(cliques)
    }

    /// Neighbours of `set` that are not themselves in `set`.
    pub fn markov_blanket<S: AsRef<str>>(&self, set: &[S]) -> Result<Vec<String>> {
        self.require_undirected("Markov blanket")?;
        let mask = self.mask_of(set)?;
        Ok(self.names_of(self.blanket_mask(mask)))
    }

    pub(crate) fn blanket_mask(&self, mask: NodeMask) -> NodeMask {
        (0..self.names.len())
            .filter(|i| mask & (1 << i) != 0)
            .fold(0, |m, i| m | self.neighbor_mask(i))
            & !mask
    }

    /// Connected and acyclic (ignores direction).
    pub fn is_tree(&self) -> bool {
        let n = self.names.len();
        n > 0 && self.edges.len() == n - 1 && self.component_of(0, 0) == self.all_mask()
    }

    /// Nodes reachable from `start` without entering `blocked`.
    pub(crate) fn component_of(&self, start: usize, blocked: NodeMask) -> NodeMask {
        let mut seen: NodeMask = 1 << start;
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            let fresh = self.neighbor_mask(i) & !seen & !blocked;
            seen |= fresh;
            stack.extend((0..self.names.len()).filter(|j| fresh & (1 << j) != 0));
        }
        seen
    }

    /// Adjacency lists by name, for display and export.
    pub fn adjacency(&self) -> BTreeMap<String, Vec<String>> {
        (0..self.names.len())
            .map(|i| (self.names[i].clone(), self.names_of(self.neighbor_mask(i))))
            .collect()
    }
}

/// Bron–Kerbosch with Tomita pivoting over bitmasks.
fn bron_kerbosch(adj: &[NodeMask], r: NodeMask, mut p: NodeMask, mut x: NodeMask, out: &mut Vec<NodeMask>) {
    if p == 0 && x == 0 {
        out.push(r);
        return;
    }
    let pivot = (0..adj.len())
        .filter(|u| (p | x) & (1 << u) != 0)
        .max_by_key(|&u| (p & adj[u]).count_ones())
        .expect("P or X is non-empty");
    let candidates = p & !adj[pivot];
    for v in 0..adj.len() {
        if candidates & (1 << v) == 0 {
            continue;
        }
        bron_kerbosch(adj, r | (1 << v), p & adj[v], x & adj[v], out);
        p &= !(1 << v);
        x |= 1 << v;
    }
}
