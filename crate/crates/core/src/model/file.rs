//! Line-oriented model file format.
//!
//! ```text
//! graph directed|undirected
//! var <name> <cardinality>
//! edge <a> <b>                 # a -> b for directed graphs
//! default <name> <state>       # optional
//! joint                        # then: <state per variable> <prob>
//! cpt <node>                   # then: <parent states> <node state> <prob>
//! potential <n1> <n2> ...      # then: <states> <weight>
//! ```
//!
//! Exactly one kind of distribution block may appear (one `joint` block, or
//! `cpt` blocks, or `potential` blocks). `#` starts a comment.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::cpt::{build_joint_from_cpts, Cpt};
use crate::model::gibbs::{GibbsModel, Potential, DEFAULT_MAX_NODES};
use crate::model::graph::{GraphKind, ModelGraph};
use crate::model::table::{JointTable, INPUT_NORMALIZATION_TOL};
use crate::model::variable::{Assignment, Variable};

#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    Joint(JointTable),
    Cpts(Vec<Cpt>),
    Gibbs(GibbsModel),
}

/// A fully validated model: graph, variables, default configuration and
/// one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub graph: ModelGraph,
    pub variables: Vec<Variable>,
    /// Full default configuration; state 0 unless overridden.
    pub defaults: Assignment,
    pub distribution: Distribution,
}

impl Model {
    /// Materializes the joint distribution.
    pub fn joint(&self) -> Result<JointTable> {
        match &self.distribution {
            Distribution::Joint(t) => Ok(t.clone()),
            Distribution::Cpts(cpts) => build_joint_from_cpts(&self.graph, &self.variables, cpts),
            Distribution::Gibbs(g) => Ok(g.joint().clone()),
        }
    }

    pub fn cardinality(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .find(|v| v.name() == name)
            .map(Variable::cardinality)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }
}

pub fn parse_model(text: &str) -> Result<Model> {
    parse_model_with_cap(text, DEFAULT_MAX_NODES)
}

enum Block {
    Joint { line: usize, rows: Vec<(usize, Vec<usize>, f64)> },
    Cpt { line: usize, node: String, rows: Vec<(usize, Vec<usize>, f64)> },
    Potential { line: usize, scope: Vec<String>, rows: Vec<(usize, Vec<usize>, f64)> },
}

impl Block {
    fn rows_mut(&mut self) -> &mut Vec<(usize, Vec<usize>, f64)> {
        match self {
            Block::Joint { rows, .. } | Block::Cpt { rows, .. } | Block::Potential { rows, .. } => rows,
        }
    }
}

/// Parses and validates a model; `max_nodes` caps materialization.
pub fn parse_model_with_cap(text: &str, max_nodes: usize) -> Result<Model> {
    let mut kind = None;
    let mut graph: Option<ModelGraph> = None;
    let mut vars: Vec<Variable> = Vec::new();
    let mut defaults: Vec<(usize, String, usize)> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        if kind.is_none() {
            kind = Some(match words.as_slice() {
                ["graph", "directed"] => GraphKind::Directed,
                ["graph", "undirected"] => GraphKind::Undirected,
                _ => return Err(Error::parse(line, "expected `graph directed` or `graph undirected`")),
            });
            graph = Some(ModelGraph::new(kind.unwrap(), &[] as &[&str]).expect("empty graph"));
            continue;
        }
        let g = graph.as_mut().expect("set with kind");
        match words[0] {
            "graph" => return Err(Error::parse(line, "duplicate `graph` line")),
            "var" => {
                let [_, name, card] = words.as_slice() else {
                    return Err(Error::parse(line, "expected `var <name> <cardinality>`"));
                };
                if !blocks.is_empty() {
                    return Err(Error::parse(line, "`var` after a distribution block"));
                }
                let card: usize = card
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad cardinality `{card}`")))?;
                let var = Variable::new(*name, card).map_err(|e| Error::parse(line, e.to_string()))?;
                if vars.iter().any(|v| v.name() == *name) {
                    return Err(Error::parse(line, format!("duplicate variable `{name}`")));
                }
                g.add_node(name).map_err(|e| Error::parse(line, e.to_string()))?;
                vars.push(var);
            }
            "edge" => {
                let [_, a, b] = words.as_slice() else {
                    return Err(Error::parse(line, "expected `edge <a> <b>`"));
                };
                if !blocks.is_empty() {
                    return Err(Error::parse(line, "`edge` after a distribution block"));
                }
                g.add_edge(a, b).map_err(|e| Error::parse(line, e.to_string()))?;
            }
            "default" => {
                let [_, name, state] = words.as_slice() else {
                    return Err(Error::parse(line, "expected `default <name> <state>`"));
                };
                let state: usize = state
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad state `{state}`")))?;
                defaults.push((line, name.to_string(), state));
            }
            "joint" => {
                if words.len() != 1 {
                    return Err(Error::parse(line, "`joint` takes no arguments"));
                }
                blocks.push(Block::Joint { line, rows: Vec::new() });
            }
            "cpt" => {
                let [_, node] = words.as_slice() else {
                    return Err(Error::parse(line, "expected `cpt <node>`"));
                };
                blocks.push(Block::Cpt {
                    line,
                    node: node.to_string(),
                    rows: Vec::new(),
                });
            }
            "potential" => {
                if words.len() < 2 {
                    return Err(Error::parse(line, "expected `potential <n1> <n2> ...`"));
                }
                blocks.push(Block::Potential {
                    line,
                    scope: words[1..].iter().map(|s| s.to_string()).collect(),
                    rows: Vec::new(),
                });
            }
            first if first.starts_with(|c: char| c.is_ascii_digit()) => {
                let block = blocks
                    .last_mut()
                    .ok_or_else(|| Error::parse(line, "data row outside a distribution block"))?;
                let (value, states) = words.split_last().expect("non-empty");
                let states: Vec<usize> = states
                    .iter()
                    .map(|s| s.parse().map_err(|_| Error::parse(line, format!("bad state index `{s}`"))))
                    .collect::<Result<_>>()?;
                let value: f64 = value
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad number `{value}`")))?;
                if !value.is_finite() {
                    return Err(Error::parse(line, format!("bad number `{value}`")));
                }
                block.rows_mut().push((line, states, value));
            }
            other => return Err(Error::parse(line, format!("unknown directive `{other}`"))),
        }
    }

    let graph = graph.ok_or_else(|| Error::parse(1, "empty model file"))?;
    if vars.is_empty() {
        return Err(Error::parse(1, "model declares no variables"));
    }
    if vars.len() > max_nodes {
        return Err(Error::parse(
            1,
            format!("{} variables exceed the cap of {max_nodes}", vars.len()),
        ));
    }
    if graph.is_directed() && !graph.is_acyclic() {
        return Err(Error::parse(1, "directed graph contains a cycle"));
    }

    let mut default_config: Assignment = vars.iter().map(|v| (v.name(), 0)).collect();
    for (line, name, state) in defaults {
        let var = vars
            .iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::parse(line, format!("unknown variable `{name}`")))?;
        if state >= var.cardinality() {
            return Err(Error::parse(line, format!("default state {state} out of range for `{name}`")));
        }
        default_config.set(name, state);
    }

    let distribution = build_distribution(&graph, &vars, blocks, max_nodes)?;
    Ok(Model {
        graph,
        variables: vars,
        defaults: default_config,
        distribution,
    })
}

fn card_of(vars: &[Variable], name: &str, line: usize) -> Result<usize> {
    vars.iter()
        .find(|v| v.name() == name)
        .map(Variable::cardinality)
        .ok_or_else(|| Error::parse(line, format!("unknown variable `{name}`")))
}

/// Fills a dense row-major table from sparse rows, checking ranges and
/// duplicates.
fn fill(cards: &[usize], rows: &[(usize, Vec<usize>, f64)], default: Option<f64>, header: usize) -> Result<Vec<f64>> {
    let size: usize = cards.iter().product();
    let mut out: Vec<Option<f64>> = vec![None; size];
    for (line, states, value) in rows {
        if states.len() != cards.len() {
            return Err(Error::parse(
                *line,
                format!("expected {} state indices, got {}", cards.len(), states.len()),
            ));
        }
        let mut offset = 0;
        for (s, c) in states.iter().zip(cards) {
            if s >= c {
                return Err(Error::parse(*line, format!("state {s} out of range (cardinality {c})")));
            }
            offset = offset * c + s;
        }
        if out[offset].is_some() {
            return Err(Error::parse(*line, "duplicate row"));
        }
        out[offset] = Some(*value);
    }
    out.into_iter()
        .map(|v| v.or(default).ok_or_else(|| Error::parse(header, "block is missing rows")))
        .collect()
}

fn check_probabilities(rows: &[(usize, Vec<usize>, f64)]) -> Result<()> {
    match rows.iter().find(|(_, _, p)| !(0.0..=1.0).contains(p)) {
        Some((line, _, p)) => Err(Error::parse(*line, format!("probability {p} out of range"))),
        None => Ok(()),
    }
}

fn build_distribution(graph: &ModelGraph, vars: &[Variable], blocks: Vec<Block>, max_nodes: usize) -> Result<Distribution> {
    let Some(first) = blocks.first() else {
        return Err(Error::parse(1, "model has no distribution block"));
    };
    let mixed = blocks.iter().any(|b| std::mem::discriminant(b) != std::mem::discriminant(first));
    if mixed {
        let line = match &blocks[1] {
            Block::Joint { line, .. } | Block::Cpt { line, .. } | Block::Potential { line, .. } => *line,
        };
        return Err(Error::parse(line, "only one kind of distribution block is allowed"));
    }
    let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
    match first {
        Block::Joint { .. } => {
            if blocks.len() > 1 {
                let Block::Joint { line, .. } = &blocks[1] else { unreachable!() };
                return Err(Error::parse(*line, "duplicate `joint` block"));
            }
            let Some(Block::Joint { line, rows }) = blocks.into_iter().next() else { unreachable!() };
            check_probabilities(&rows)?;
            let probs = fill(&cards, &rows, Some(0.0), line)?;
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
                return Err(Error::parse(line, format!("joint block sums to {total}, not 1")));
            }
            let table = JointTable::new(vars.to_vec(), probs).map_err(|e| Error::parse(line, e.to_string()))?;
            Ok(Distribution::Joint(table))
        }
        Block::Cpt { .. } => {
            if !graph.is_directed() {
                return Err(Error::parse(1, "`cpt` blocks need a directed graph"));
            }
            let mut cpts = Vec::new();
            let mut first_line = usize::MAX;
            for block in blocks {
                let Block::Cpt { line, node, rows } = block else { unreachable!() };
                first_line = first_line.min(line);
                let node_card = card_of(vars, &node, line)?;
                if cpts.iter().any(|c: &Cpt| c.node == node) {
                    return Err(Error::parse(line, format!("duplicate CPT for `{node}`")));
                }
                check_probabilities(&rows)?;
                let parents = graph.parents(&node).map_err(|e| Error::parse(line, e.to_string()))?;
                let mut block_cards: Vec<usize> = parents
                    .iter()
                    .map(|p| card_of(vars, p, line))
                    .collect::<Result<_>>()?;
                block_cards.push(node_card);
                let probs = fill(&block_cards, &rows, Some(0.0), line)?;
                for (r, row) in probs.chunks(node_card).enumerate() {
                    let total: f64 = row.iter().sum();
                    if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
                        return Err(Error::parse(
                            line,
                            format!("CPT for `{node}` row {r} sums to {total}, not 1"),
                        ));
                    }
                }
                cpts.push(Cpt::new(node, parents, probs));
            }
            if let Some(v) = vars.iter().find(|v| !cpts.iter().any(|c| c.node == v.name())) {
                return Err(Error::parse(first_line, format!("missing CPT for `{}`", v.name())));
            }
            build_joint_from_cpts(graph, vars, &cpts).map_err(|e| Error::parse(first_line, e.to_string()))?;
            Ok(Distribution::Cpts(cpts))
        }
        Block::Potential { .. } => {
            if graph.is_directed() {
                return Err(Error::parse(1, "`potential` blocks need an undirected graph"));
            }
            let mut potentials = Vec::new();
            let mut first_line = usize::MAX;
            for block in blocks {
                let Block::Potential { line, scope, rows } = block else { unreachable!() };
                first_line = first_line.min(line);
                let block_cards: Vec<usize> = scope
                    .iter()
                    .map(|n| card_of(vars, n, line))
                    .collect::<Result<_>>()?;
                if let Some((l, _, w)) = rows.iter().find(|(_, _, w)| *w <= 0.0) {
                    return Err(Error::parse(*l, format!("potential weight {w} is not positive")));
                }
                let weights = fill(&block_cards, &rows, None, line)?;
                if !graph.is_clique(&scope).map_err(|e| Error::parse(line, e.to_string()))? {
                    return Err(Error::parse(line, format!("potential scope {scope:?} is not a clique")));
                }
                potentials.push(Potential::new(scope, weights));
            }
            let model = GibbsModel::with_cap(graph.clone(), vars.to_vec(), potentials, max_nodes)
                .map_err(|e| Error::parse(first_line, e.to_string()))?;
            Ok(Distribution::Gibbs(model))
        }
    }
}

/// Renders a model back into the file format. Numbers use the shortest
/// representation that round-trips, so the output reparses to an equal
/// model.
pub fn write_model(model: &Model) -> String {
    let mut out = String::new();
    writeln!(out, "graph {}", model.graph.kind()).unwrap();
    for v in &model.variables {
        writeln!(out, "var {} {}", v.name(), v.cardinality()).unwrap();
    }
    for (a, b) in model.graph.edges() {
        writeln!(out, "edge {a} {b}").unwrap();
    }
    for (name, state) in model.defaults.iter() {
        if state != 0 {
            writeln!(out, "default {name} {state}").unwrap();
        }
    }
    let card = |name: &str| model.cardinality(name).expect("validated model");
    let write_rows = |out: &mut String, cards: &[usize], values: &[f64], skip_zero: bool| {
        for (states, value) in crate::model::variable::state_tuples(cards).zip(values) {
            if skip_zero && *value == 0.0 {
                continue;
            }
            let row: Vec<String> = states.iter().map(usize::to_string).collect();
            writeln!(out, "{} {value:?}", row.join(" ")).unwrap();
        }
    };
    match &model.distribution {
        Distribution::Joint(t) => {
            writeln!(out, "joint").unwrap();
            let cards: Vec<usize> = t.variables().iter().map(Variable::cardinality).collect();
            write_rows(&mut out, &cards, t.probs(), true);
        }
        Distribution::Cpts(cpts) => {
            for cpt in cpts {
                writeln!(out, "cpt {}", cpt.node).unwrap();
                let mut cards: Vec<usize> = cpt.parents.iter().map(|p| card(p)).collect();
                cards.push(card(&cpt.node));
                write_rows(&mut out, &cards, &cpt.probs, false);
            }
        }
        Distribution::Gibbs(g) => {
            for pot in g.potentials() {
                writeln!(out, "potential {}", pot.scope.join(" ")).unwrap();
                let cards: Vec<usize> = pot.scope.iter().map(|n| card(n)).collect();
                write_rows(&mut out, &cards, &pot.weights, false);
            }
        }
    }
    out
}
