//! Seeded generators for random models and graph shapes.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    build_joint_from_cpts, Assignment, Cpt, Distribution, GibbsModel, GraphKind, JointTable, Model, ModelGraph, Potential, Variable,
    DEFAULT_MAX_NODES,
};

pub type Rng = ChaCha8Rng;

pub const WEIGHT_RANGE: (f64, f64) = (0.1, 10.0);

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `a`, `b`, ... for the first 26 nodes, `n26`, `n27`, ... afterwards.
pub fn node_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| if i < 26 { ((b'a' + i as u8) as char).to_string() } else { format!("n{i}") })
        .collect()
}

fn weight(rng: &mut Rng) -> f64 {
    // Four decimals keep generated files short and byte-stable.
    (rng.random_range(WEIGHT_RANGE.0..=WEIGHT_RANGE.1) * 1e4).round() / 1e4
}

pub fn random_positive_table(rng: &mut Rng, vars: Vec<Variable>) -> Result<JointTable> {
    let size: usize = vars.iter().map(Variable::cardinality).product();
    let weights = (0..size).map(|_| weight(rng)).collect();
    JointTable::from_weights(vars, weights)
}

/// One potential per maximal clique, entries in `[0.1, 10]`.
pub fn random_gibbs(rng: &mut Rng, graph: &ModelGraph, card: usize) -> Result<GibbsModel> {
    let vars = graph.nodes().iter().map(|n| Variable::new(n.clone(), card)).collect::<Result<Vec<_>>>()?;
    let potentials = graph
        .maximal_cliques()?
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let size = card.pow(c.len() as u32);
            Potential::new(c.members().to_vec(), (0..size).map(|_| weight(rng)).collect())
        })
        .collect();
    GibbsModel::new(graph.clone(), vars, potentials)
}

/// Strictly positive CPTs with normalized rows, parents in declaration order.
pub fn random_cpts(rng: &mut Rng, dag: &ModelGraph, card: usize) -> Result<Vec<Cpt>> {
    dag.nodes()
        .iter()
        .map(|v| {
            let parents = dag.parents(v)?;
            let rows = card.pow(parents.len() as u32);
            let mut probs = Vec::with_capacity(rows * card);
            for _ in 0..rows {
                let row: Vec<f64> = (0..card).map(|_| weight(rng)).collect();
                let total: f64 = row.iter().sum();
                probs.extend(row.iter().map(|w| w / total));
            }
            Ok(Cpt::new(v.clone(), parents, probs))
        })
        .collect()
}

pub fn random_bn_table(rng: &mut Rng, dag: &ModelGraph, card: usize) -> Result<JointTable> {
    let vars = dag.nodes().iter().map(|n| Variable::new(n.clone(), card)).collect::<Result<Vec<_>>>()?;
    build_joint_from_cpts(dag, &vars, &random_cpts(rng, dag, card)?)
}

/// Erdős–Rényi graph over `node_names(n)`.
pub fn random_graph(rng: &mut Rng, kind: GraphKind, n: usize, p: f64) -> Result<ModelGraph> {
    let names = node_names(n);
    let mut g = ModelGraph::new(kind, &names)?;
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                g.add_edge(&names[i], &names[j])?;
            }
        }
    }
    Ok(g)
}

/// Uniform random attachment tree: node `i` joins a random earlier node.
pub fn random_tree(rng: &mut Rng, n: usize) -> Result<ModelGraph> {
    let names = node_names(n);
    let mut g = ModelGraph::new(GraphKind::Undirected, &names)?;
    for i in 1..n {
        let j = rng.random_range(0..i);
        g.add_edge(&names[j], &names[i])?;
    }
    Ok(g)
}

pub fn complete_graph(n: usize) -> Result<ModelGraph> {
    let names = node_names(n);
    let mut g = ModelGraph::new(GraphKind::Undirected, &names)?;
    for i in 0..n {
        for j in i + 1..n {
            g.add_edge(&names[i], &names[j])?;
        }
    }
    Ok(g)
}

/// Hub `x` joined to a path `a - b - ...` of `triangles + 1` nodes: every
/// triangle shares `x`, so the clique graph is complete yet reducible.
pub fn triangle_fan(triangles: usize) -> Result<ModelGraph> {
    let rim = node_names(triangles + 1);
    let mut nodes = vec!["x".to_string()];
    nodes.extend(rim.iter().cloned());
    let mut g = ModelGraph::new(GraphKind::Undirected, &nodes)?;
    for (i, r) in rim.iter().enumerate() {
        g.add_edge("x", r)?;
        if i > 0 {
            g.add_edge(&rim[i - 1], r)?;
        }
    }
    Ok(g)
}

pub fn four_cycle() -> Result<ModelGraph> {
    ModelGraph::with_edges(GraphKind::Undirected, &["a", "b", "c", "d"], &[("a", "b"), ("b", "c"), ("c", "d"), ("d", "a")])
}

/// Labels `y1..y_labels` on a chain, inputs `x1..x_inputs` joined to each
/// other and to every label; potentials over `(y_i, y_i+1, X)`.
pub fn random_chain_crf(rng: &mut Rng, labels: usize, inputs: usize) -> Result<(GibbsModel, Vec<String>)> {
    let ys: Vec<String> = (1..=labels).map(|i| format!("y{i}")).collect();
    let xs: Vec<String> = (1..=inputs).map(|i| format!("x{i}")).collect();
    let all: Vec<String> = ys.iter().chain(&xs).cloned().collect();
    let mut g = ModelGraph::new(GraphKind::Undirected, &all)?;
    for w in ys.windows(2) {
        g.add_edge(&w[0], &w[1])?;
    }
    for (i, x) in xs.iter().enumerate() {
        for other in &xs[i + 1..] {
            g.add_edge(x, other)?;
        }
        for y in &ys {
            g.add_edge(y, x)?;
        }
    }
    let scopes: Vec<Vec<String>> = if labels == 1 {
        vec![all.clone()]
    } else {
        ys.windows(2).map(|w| w.iter().chain(&xs).cloned().collect()).collect()
    };
    let pots = scopes
        .into_iter()
        .map(|s| {
            let size = 1usize << s.len();
            Potential::new(s, (0..size).map(|_| weight(rng)).collect())
        })
        .collect();
    let vars = all.iter().map(|n| Variable::binary(n.clone())).collect();
    Ok((GibbsModel::new(g, vars, pots)?, ys))
}

/// Parses `a-b,b-c,d` (undirected) or `D>G,I>G` (directed). Items are
/// separated by commas or whitespace; a bare name adds an isolated node.
pub fn parse_graph_spec(spec: &str, kind: GraphKind) -> Result<ModelGraph> {
    let (sep, wrong) = match kind {
        GraphKind::Undirected => ('-', '>'),
        GraphKind::Directed => ('>', '-'),
    };
    let mut g = ModelGraph::new::<&str>(kind, &[])?;
    let ensure = |g: &mut ModelGraph, n: &str| -> Result<()> {
        if !g.contains(n) {
            g.add_node(n)?;
        }
        Ok(())
    };
    for item in spec.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        if item.contains(wrong) {
            return Err(Error::parse(1, format!("`{item}`: use `{sep}` for {kind:?} edges")));
        }
        match item.split_once(sep) {
            Some((a, b)) => {
                ensure(&mut g, a)?;
                ensure(&mut g, b)?;
                g.add_edge(a, b)?;
            }
            None => ensure(&mut g, item)?,
        }
    }
    if g.node_count() == 0 {
        return Err(Error::parse(1, "graph spec names no nodes"));
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomKind {
    Gibbs,
    Bn,
}

/// A complete model for `graph`, deterministic in `seed`.
pub fn random_model(kind: RandomKind, graph: &ModelGraph, seed: u64, card: usize) -> Result<Model> {
    if graph.node_count() > DEFAULT_MAX_NODES {
        return Err(Error::precondition(format!(
            "{} nodes exceed the cap of {DEFAULT_MAX_NODES}",
            graph.node_count()
        )));
    }
    let mut r = rng(seed);
    let variables = graph.nodes().iter().map(|n| Variable::new(n.clone(), card)).collect::<Result<Vec<_>>>()?;
    let distribution = match kind {
        RandomKind::Gibbs => {
            if graph.is_directed() {
                return Err(Error::precondition("gibbs models need an undirected graph"));
            }
            Distribution::Gibbs(random_gibbs(&mut r, graph, card)?)
        }
        RandomKind::Bn => {
            if !graph.is_directed() {
                return Err(Error::precondition("bn models need a directed graph"));
            }
            graph.topological_order()?;
            Distribution::Cpts(random_cpts(&mut r, graph, card)?)
        }
    };
    Ok(Model {
        graph: graph.clone(),
        defaults: graph.nodes().iter().map(|n| (n.clone(), 0)).collect::<Assignment>(),
        variables,
        distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_model, write_model};

    #[test]
    fn same_seed_same_model() {
        let g = parse_graph_spec("a-b,b-c", GraphKind::Undirected).unwrap();
        let a = write_model(&random_model(RandomKind::Gibbs, &g, 7, 2).unwrap());
        let b = write_model(&random_model(RandomKind::Gibbs, &g, 7, 2).unwrap());
        let c = write_model(&random_model(RandomKind::Gibbs, &g, 8, 2).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
        let m = parse_model(&a).unwrap();
        assert!(m.joint().unwrap().is_strictly_positive());
        assert_eq!(write_model(&m), a);
    }

    #[test]
    fn bn_rows_are_normalized() {
        let g = parse_graph_spec("D>G I>G I>S G>L", GraphKind::Directed).unwrap();
        let m = random_model(RandomKind::Bn, &g, 1, 2).unwrap();
        let Distribution::Cpts(cpts) = &m.distribution else { panic!() };
        for c in cpts {
            for row in c.probs.chunks(2) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
        assert_eq!(parse_model(&write_model(&m)).unwrap(), m);
    }

    #[test]
    fn graph_specs() {
        let g = parse_graph_spec("a-b, c", GraphKind::Undirected).unwrap();
        assert_eq!(g.nodes(), &["a", "b", "c"]);
        assert_eq!(g.edge_count(), 1);
        assert!(parse_graph_spec("a>b", GraphKind::Undirected).is_err());
        assert!(parse_graph_spec("", GraphKind::Directed).is_err());
        let big = node_names(DEFAULT_MAX_NODES + 1).join(",");
        let g = parse_graph_spec(&big, GraphKind::Undirected).unwrap();
        assert!(matches!(random_model(RandomKind::Gibbs, &g, 0, 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn shapes() {
        let mut r = rng(3);
        for n in 1..6 {
            assert!(random_tree(&mut r, n).unwrap().is_tree());
        }
        let fan = triangle_fan(3).unwrap();
        assert_eq!(fan.maximal_cliques().unwrap().len(), 3);
        let (gm, ys) = random_chain_crf(&mut r, 3, 2).unwrap();
        assert_eq!(ys, ["y1", "y2", "y3"]);
        assert_eq!(gm.joint().len(), 32);
    }
}
