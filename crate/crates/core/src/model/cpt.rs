use crate::error::{Error, Result};
use crate::model::graph::ModelGraph;
use crate::model::table::{JointTable, INPUT_NORMALIZATION_TOL};
use crate::model::variable::{check_unique, state_tuples, Variable};

/// Conditional probability table `P(node | parents)`.
///
/// `probs` holds one row per parent configuration (row-major over
/// `parents`), each row listing the node's states in order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub node: String,
    pub parents: Vec<String>,
    pub probs: Vec<f64>,
}

impl Cpt {
    pub fn new(node: impl Into<String>, parents: Vec<String>, probs: Vec<f64>) -> Self {
        Cpt {
            node: node.into(),
            parents,
            probs,
        }
    }

    fn check(&self, vars: &[Variable]) -> Result<()> {
        let card = |name: &str| {
            vars.iter()
                .find(|v| v.name() == name)
                .map(Variable::cardinality)
                .ok_or_else(|| Error::UnknownVariable(name.to_string()))
        };
        let node_card = card(&self.node)?;
        let rows: usize = self.parents.iter().map(|p| card(p)).product::<Result<usize>>()?;
        if self.probs.len() != rows * node_card {
            return Err(Error::invalid(format!(
                "CPT for `{}` has {} entries, expected {}",
                self.node,
                self.probs.len(),
                rows * node_card
            )));
        }
        for (r, row) in self.probs.chunks(node_card).enumerate() {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::invalid(format!(
                    "CPT for `{}` row {r} has a probability outside [0, 1]",
                    self.node
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
                return Err(Error::invalid(format!(
                    "CPT for `{}` row {r} sums to {total}, not 1",
                    self.node
                )));
            }
        }
        Ok(())
    }
}

/// Joint table `Π_i P(x_i | Pa(x_i))` for a DAG with one CPT per node.
///
/// `vars` fixes the table's variable order; every graph node needs a
/// variable and a CPT whose parent set matches the graph.
pub fn build_joint_from_cpts(dag: &ModelGraph, vars: &[Variable], cpts: &[Cpt]) -> Result<JointTable> {
    if !dag.is_directed() {
        return Err(Error::invalid("CPTs need a directed graph"));
    }
    dag.topological_order()?;
    check_unique(vars)?;
    if vars.len() != dag.node_count() || vars.iter().any(|v| !dag.contains(v.name())) {
        return Err(Error::invalid("variables and graph nodes differ"));
    }
    let mut ordered = Vec::with_capacity(vars.len());
    for v in vars {
        let mut matching = cpts.iter().filter(|c| c.node == v.name());
        let cpt = matching
            .next()
            .ok_or_else(|| Error::invalid(format!("missing CPT for `{}`", v.name())))?;
        if matching.next().is_some() {
            return Err(Error::invalid(format!("duplicate CPT for `{}`", v.name())));
        }
        let mut declared = cpt.parents.clone();
        declared.sort();
        let mut expected = dag.parents(v.name())?;
        expected.sort();
        if declared != expected {
            return Err(Error::invalid(format!(
                "CPT scope mismatch for `{}`: parents {:?}, graph has {:?}",
                v.name(),
                cpt.parents,
                expected
            )));
        }
        cpt.check(vars)?;
        ordered.push(cpt);
    }
    if cpts.len() != vars.len() {
        return Err(Error::invalid("CPT for an unknown node"));
    }

    let index = |name: &str| vars.iter().position(|v| v.name() == name).expect("checked above");
    let cards: Vec<usize> = vars.iter().map(Variable::cardinality).collect();
    let probs = state_tuples(&cards)
        .map(|states| {
            ordered
                .iter()
                .map(|cpt| {
                    let node = index(&cpt.node);
                    let mut row = 0;
                    for p in &cpt.parents {
                        let pi = index(p);
                        row = row * cards[pi] + states[pi];
                    }
                    cpt.probs[row * cards[node] + states[node]]
                })
                .product()
        })
        .collect();
    JointTable::new(vars.to_vec(), probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::graph::GraphKind;

    #[test]
    fn single_node() {
        let g = ModelGraph::new(GraphKind::Directed, &["A"]).unwrap();
        let t = build_joint_from_cpts(&g, &[Variable::binary("A")], &[Cpt::new("A", vec![], vec![0.3, 0.7])]).unwrap();
        assert_eq!(t.probs(), &[0.3, 0.7]);
    }

    #[test]
    fn chain_of_two() {
        let g = ModelGraph::with_edges(GraphKind::Directed, &["A", "B"], &[("A", "B")]).unwrap();
        let vars = [Variable::binary("A"), Variable::binary("B")];
        let cpts = [
            Cpt::new("A", vec![], vec![0.5, 0.5]),
            Cpt::new("B", vec!["A".into()], vec![0.9, 0.1, 0.1, 0.9]),
        ];
        let t = build_joint_from_cpts(&g, &vars, &cpts).unwrap();
        assert!((t.probs()[0] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn scope_and_normalization_errors() {
        let g = ModelGraph::with_edges(GraphKind::Directed, &["A", "B"], &[("A", "B")]).unwrap();
        let vars = [Variable::binary("A"), Variable::binary("B")];
        let wrong_scope = [
            Cpt::new("A", vec![], vec![0.5, 0.5]),
            Cpt::new("B", vec![], vec![0.5, 0.5]),
        ];
        assert!(build_joint_from_cpts(&g, &vars, &wrong_scope).is_err());
        let bad_row = [
            Cpt::new("A", vec![], vec![0.5, 0.5]),
            Cpt::new("B", vec!["A".into()], vec![0.9, 0.2, 0.1, 0.9]),
        ];
        assert!(build_joint_from_cpts(&g, &vars, &bad_row).is_err());
    }
}
