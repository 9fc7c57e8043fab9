use crate::error::{Error, Result};
use crate::model::graph::ModelGraph;
use crate::model::table::JointTable;
use crate::model::variable::{check_unique, state_tuples, Variable};

/// Default cap on the number of variables a table may be materialized over.
pub const DEFAULT_MAX_NODES: usize = 20;

/// A strictly positive factor over a clique of the graph, row-major over
/// `scope`.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub scope: Vec<String>,
    pub weights: Vec<f64>,
}

impl Potential {
    pub fn new(scope: Vec<String>, weights: Vec<f64>) -> Self {
        Potential { scope, weights }
    }
}

/// Normalized product of clique potentials over an undirected graph.
///
/// The joint table is materialized on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsModel {
    graph: ModelGraph,
    potentials: Vec<Potential>,
    joint: JointTable,
    normalizer: f64,
}

impl GibbsModel {
    pub fn new(graph: ModelGraph, vars: Vec<Variable>, potentials: Vec<Potential>) -> Result<Self> {
        Self::with_cap(graph, vars, potentials, DEFAULT_MAX_NODES)
    }

    pub fn with_cap(graph: ModelGraph, vars: Vec<Variable>, potentials: Vec<Potential>, max_nodes: usize) -> Result<Self> {
        if graph.is_directed() {
            return Err(Error::invalid("Gibbs models need an undirected graph"));
        }
        check_unique(&vars)?;
        if vars.len() != graph.node_count() || vars.iter().any(|v| !graph.contains(v.name())) {
            return Err(Error::invalid("variables and graph nodes differ"));
        }
        if vars.len() > max_nodes {
            return Err(Error::invalid(format!(
                "{} variables exceed the materialization cap of {max_nodes}",
                vars.len()
            )));
        }
        let index = |name: &str| {
            vars.iter()
                .position(|v| v.name() == name)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let mut scopes = Vec::with_capacity(potentials.len());
        for pot in &potentials {
            let idx: Vec<usize> = pot.scope.iter().map(|n| index(n)).collect::<Result<_>>()?;
            if (1..idx.len()).any(|i| idx[..i].contains(&idx[i])) {
                return Err(Error::invalid(format!("potential scope {:?} repeats a variable", pot.scope)));
            }
            if !graph.is_clique(&pot.scope)? {
                return Err(Error::invalid(format!("potential scope {:?} is not a clique", pot.scope)));
            }
            let size: usize = idx.iter().map(|&i| vars[i].cardinality()).product();
            if pot.weights.len() != size {
                return Err(Error::invalid(format!(
                    "potential over {:?} has {} entries, expected {size}",
                    pot.scope,
                    pot.weights.len()
                )));
            }
            if let Some(w) = pot.weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(Error::invalid(format!(
                    "potential over {:?} has non-positive entry {w}",
                    pot.scope
                )));
            }
            scopes.push(idx);
        }

        let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
        let weights: Vec<f64> = state_tuples(&cards)
            .map(|states| {
                potentials
                    .iter()
                    .zip(&scopes)
                    .map(|(pot, idx)| {
                        let offset = idx.iter().fold(0, |acc, &i| acc * cards[i] + states[i]);
                        pot.weights[offset]
                    })
                    .product()
            })
            .collect();
        let normalizer: f64 = weights.iter().sum();
        let joint = JointTable::from_weights(vars, weights)?;
        Ok(GibbsModel {
            graph,
            potentials,
            joint,
            normalizer,
        })
    }

    pub fn graph(&self) -> &ModelGraph {
        &self.graph
    }

    pub fn potentials(&self) -> &[Potential] {
        &self.potentials
    }

    pub fn joint(&self) -> &JointTable {
        &self.joint
    }

    /// Partition function `Z`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }
}
