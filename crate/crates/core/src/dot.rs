//! Graphviz DOT export.

use std::fmt::Write as _;

use crate::factorize::CliqueGraph;
use crate::model::ModelGraph;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn model_graph_dot(g: &ModelGraph) -> String {
    let (header, arrow) = if g.is_directed() { ("digraph", "->") } else { ("graph", "--") };
    let mut out = format!("{header} model {{\n");
    for n in g.nodes() {
        writeln!(out, "  {};", quote(n)).unwrap();
    }
    for (a, b) in g.edges() {
        writeln!(out, "  {} {arrow} {};", quote(a), quote(b)).unwrap();
    }
    out.push_str("}\n");
    out
}

/// Nodes are labelled with their members; edges with the intersection.
pub fn clique_graph_dot(cg: &CliqueGraph) -> String {
    let mut out = String::from("graph cliques {\n");
    for (i, c) in cg.cliques.iter().enumerate() {
        writeln!(out, "  c{i} [label={}];", quote(&c.members().join(" "))).unwrap();
    }
    for &(i, j) in &cg.edges {
        let shared = cg.cliques[i].intersection(&cg.cliques[j]);
        writeln!(out, "  c{i} -- c{j} [label={}];", quote(&shared.members().join(" "))).unwrap();
    }
    out.push_str("}\n");
    out
}
