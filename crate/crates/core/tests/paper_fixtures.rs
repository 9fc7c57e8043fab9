mod common;

use common::*;
use crfactor::expr::{parse_expr, replay_trace, CertContext, TraceFile};
use crfactor::factorize::{factorize_bn, factorize_tcg, is_tcg};
use crfactor::model::{parse_model, JointTable, Variable};
use crfactor::random::{random_bn_table, rng, triangle_fan};
use crfactor::separation::{d_separated, CiQuery};
use crfactor::verify::{verify_joint, DEFAULT_TOL};
use crfactor::Error;

#[test]
fn student_bn_factorization() {
    let f = factorize_bn(&student(), None).unwrap();
    assert_eq!(f.expr.to_string(), "P(D)·P(I)·P(G|D I)·P(S|I)·P(L|G)");
    let table = parse_model(&std::fs::read_to_string(fixture("student.model")).unwrap()).unwrap().joint().unwrap();
    assert!(verify_joint(&f.expr, &table, DEFAULT_TOL).unwrap().pass);
}

#[test]
fn partition_and_merge_traces_replay_on_the_skeleton() {
    let skeleton = student().skeleton();
    let p = student_partition(CertContext::graph_only(&skeleton)).unwrap();
    assert!(p.expr.equivalent(&with_marginals("CR(D,G)·CR(S,I)·CR(I,G)·CR(G,L)")), "{}", p.expr);
    assert_eq!(replay_trace(&p.initial, &p.trace, &CertContext::graph_only(&skeleton)).unwrap(), p.expr);

    let m = student_merge(CertContext::graph_only(&skeleton)).unwrap();
    assert!(m.expr.equivalent(&with_marginals("CR(G,L)·CR(I,G)·CR(S,I)·CR(D,G)")), "{}", m.expr);
    let file = TraceFile::new(&m.initial, m.trace.clone(), Some(&m.expr));
    let back = TraceFile::from_json(&file.to_json()).unwrap();
    assert_eq!(back.replay(&CertContext::graph_only(&skeleton)).unwrap(), m.expr);
}

#[test]
fn first_partition_step_needs_a_separation_the_dag_lacks() {
    let dag = student();
    assert!(!d_separated(&dag, &"D _|_ I S L | G".parse::<CiQuery>().unwrap()).unwrap());
    let err = student_partition(CertContext::graph_only(&dag)).err().unwrap();
    assert!(matches!(err, Error::Certificate(_)), "{err}");
    let table = random_bn_table(&mut rng(5), &dag, 2).unwrap();
    assert!(student_partition(CertContext::table_only(&table)).is_err());
}

#[test]
fn second_factorization_holds_on_the_network() {
    let dag = student();
    let f = student_partition_two(CertContext::graph_only(&dag)).unwrap();
    assert!(f.expr.equivalent(&with_marginals("CR(S,I)·CR(D I,G)·CR(G,L)")), "{}", f.expr);
    for seed in 0..5 {
        let table = random_bn_table(&mut rng(seed), &dag, 2).unwrap();
        assert!(verify_joint(&f.expr, &table, DEFAULT_TOL).unwrap().pass);
    }
}

#[test]
fn d3_path_tcg_hand_values() {
    let mut probs = Vec::new();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                probs.push(0.5 * if a == b { 0.9 } else { 0.1 } * if b == c { 0.8 } else { 0.2 });
            }
        }
    }
    let t = JointTable::new(["a", "b", "c"].map(Variable::binary).to_vec(), probs).unwrap();
    let g = crfactor::model::ModelGraph::with_edges(crfactor::model::GraphKind::Undirected, &["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap();
    let r = factorize_tcg(&t, &g).unwrap();
    let at_zero = crfactor::model::Assignment::new().with("a", 0).with("b", 0).with("c", 0);
    let ab = parse_expr("P(a b)·P(b)^-1").unwrap().eval(&t, &at_zero).unwrap();
    let bc = parse_expr("P(b c)").unwrap().eval(&t, &at_zero).unwrap();
    assert!((ab - 0.45 / 0.5).abs() < 1e-12 && (bc - 0.4).abs() < 1e-12);
    assert!((r.expr().eval(&t, &at_zero).unwrap() - 0.36).abs() < 1e-12);
}

#[test]
fn triangle_fan_clique_graph_has_a_cycle_yet_reduces() {
    let g = triangle_fan(3).unwrap();
    let cg = crfactor::factorize::build_clique_graph(&g).unwrap();
    assert_eq!(cg.cliques.len(), 3);
    assert_eq!(cg.edges.len(), 3);
    assert!(is_tcg(&g).unwrap().is_tcg);
}
