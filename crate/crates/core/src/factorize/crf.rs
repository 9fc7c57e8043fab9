use crate::cr::Block;
use crate::error::{Error, Result};
use crate::expr::{CertContext, Derivation};
use crate::model::JointTable;

use super::{eliminate, finish_single, product_children, reconstruction, Factorization};

/// Chain-structured conditional factorization
/// `P(y | X) = Π CR(y_i, y_i+1 | X) · Π P(y_i | X)`, where `X` is every
/// table variable outside `labels`. Labels are partitioned out from the
/// front of the chain with numeric certificates for
/// `(y_i _|_ y_i+2 ... | y_i+1, X)`.
pub fn factorize_chain_crf(table: &JointTable, labels: &[String]) -> Result<Factorization> {
    if labels.is_empty() {
        return Err(Error::precondition("chain CRF needs at least one label variable"));
    }
    for (i, y) in labels.iter().enumerate() {
        table.index_of(y)?;
        if labels[..i].contains(y) {
            return Err(Error::precondition(format!("label `{y}` listed twice")));
        }
    }
    let inputs: Vec<&str> = table.names().into_iter().filter(|n| !labels.iter().any(|y| y == n)).collect();
    let x = Block::free(&inputs);
    if !inputs.is_empty() {
        let marginal = table.marginal(&inputs)?;
        if let Some(i) = marginal.probs().iter().position(|&p| p <= 0.0) {
            let states = marginal.state_tuples().nth(i).expect("index within table");
            let a = crate::model::Assignment::from_states(marginal.variables(), &states);
            return Err(Error::precondition(format!("input configuration {a} has probability 0")));
        }
    }

    let cond = (!x.is_empty()).then_some(&x);
    let mut d = Derivation::new(reconstruction(labels, cond), CertContext::table_only(table));
    let mut main = product_children(d.current())[0].clone();
    for (i, y) in labels.iter().enumerate() {
        if i + 1 == labels.len() {
            finish_single(&mut d, &main)?;
            break;
        }
        main = eliminate(&mut d, &main, y, &labels[i + 1..i + 2])?;
    }
    Ok(Factorization::from_derivation(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GibbsModel, GraphKind, ModelGraph, Potential, Variable};
    use crate::verify::{verify_conditional, DEFAULT_TOL};

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    // y1 - y2 - y3 chain, every label also tied to both inputs.
    fn chain_model() -> GibbsModel {
        let all = ["y1", "y2", "y3", "x1", "x2"];
        let mut g = ModelGraph::new(GraphKind::Undirected, &all).unwrap();
        for (a, b) in [("y1", "y2"), ("y2", "y3"), ("x1", "x2")] {
            g.add_edge(a, b).unwrap();
        }
        for y in ["y1", "y2", "y3"] {
            for x in ["x1", "x2"] {
                g.add_edge(y, x).unwrap();
            }
        }
        let weights = |k: usize| (0..16).map(|i| 0.5 + ((i * 7 + k * 3) % 11) as f64 / 3.0).collect::<Vec<_>>();
        let pots = vec![
            Potential::new(names(&["y1", "y2", "x1", "x2"]), weights(1)),
            Potential::new(names(&["y2", "y3", "x1", "x2"]), weights(2)),
        ];
        GibbsModel::new(g, all.map(Variable::binary).to_vec(), pots).unwrap()
    }

    #[test]
    fn three_labels_two_inputs() {
        let gm = chain_model();
        let f = factorize_chain_crf(gm.joint(), &names(&["y1", "y2", "y3"])).unwrap();
        let expected = crate::expr::parse_expr("CR(y1,y2|x1 x2)·CR(y2,y3|x1 x2)·P(y1|x1 x2)·P(y2|x1 x2)·P(y3|x1 x2)").unwrap();
        assert!(f.expr.equivalent(&expected), "{}", f.expr);
        let r = verify_conditional(&f.expr, gm.joint(), &names(&["y1", "y2", "y3"]), &names(&["x1", "x2"]), DEFAULT_TOL).unwrap();
        assert!(r.pass, "{r}");
    }

    #[test]
    fn single_label() {
        let gm = chain_model();
        let f = factorize_chain_crf(gm.joint(), &names(&["y2"])).unwrap();
        assert_eq!(f.expr.to_string(), "P(y2|y1 y3 x1 x2)");
    }

    #[test]
    fn non_chain_conditionals_lack_certificates() {
        // y1 and y3 interact directly, so the chain statement fails.
        let g = ModelGraph::with_edges(GraphKind::Undirected, &["y1", "y2", "y3"], &[("y1", "y2"), ("y2", "y3"), ("y1", "y3")]).unwrap();
        let gm = GibbsModel::new(
            g,
            ["y1", "y2", "y3"].map(Variable::binary).to_vec(),
            vec![Potential::new(names(&["y1", "y2", "y3"]), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0])],
        )
        .unwrap();
        let err = factorize_chain_crf(gm.joint(), &names(&["y1", "y2", "y3"])).unwrap_err();
        assert!(matches!(err, Error::Certificate(_)), "{err}");
    }

    #[test]
    fn zero_probability_inputs_are_rejected() {
        let vars = vec![Variable::binary("y"), Variable::binary("x")];
        let t = JointTable::new(vars, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        assert!(matches!(factorize_chain_crf(&t, &names(&["y"])), Err(Error::Precondition(_))));
    }
}
