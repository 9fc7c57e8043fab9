#![allow(dead_code)]

use std::path::PathBuf;

use crfactor::expr::{parse_expr, CertContext, Derivation, FactorExpr, OperationTrace, Rule};
use crfactor::factorize::reconstruction;
use crfactor::model::{GraphKind, ModelGraph};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

pub fn student() -> ModelGraph {
    ModelGraph::with_edges(
        GraphKind::Directed,
        &["D", "I", "G", "S", "L"],
        &[("D", "G"), ("I", "G"), ("I", "S"), ("G", "L")],
    )
    .unwrap()
}

pub fn student_initial() -> FactorExpr {
    reconstruction(&names(&["D", "I", "G", "S", "L"]), None)
}

/// Applies `rule` to the first node equivalent to `term`.
pub fn step(d: &mut Derivation<'_>, term: &str, rule: Rule) -> crfactor::Result<FactorExpr> {
    let want = parse_expr(term).unwrap();
    d.apply_first(&|e| matches!(e, FactorExpr::Cr(_)) && e.equivalent(&want), rule)
}

pub struct Derived {
    pub initial: FactorExpr,
    pub expr: FactorExpr,
    pub trace: OperationTrace,
}

fn finish(d: Derivation<'_>) -> Derived {
    let initial = d.initial().clone();
    let (expr, trace) = d.finish();
    Derived { initial, expr, trace }
}

fn cit1(w: &str) -> Rule {
    Rule::Cit1 { x: 0, w: vec![w.to_string()] }
}

/// Partitions D, then S, then I out of the student network's CR.
pub fn student_partition(ctx: CertContext<'_>) -> crfactor::Result<Derived> {
    let mut d = Derivation::new(student_initial(), ctx);
    step(&mut d, "CR(D,I,G,S,L)", Rule::Bipartition { left: vec![0] })?;
    step(&mut d, "CR(D)", Rule::SingleVar)?;
    step(&mut d, "CR(D,I G S L)", cit1("G"))?;
    step(&mut d, "CR(I,G,S,L)", Rule::Bipartition { left: vec![2] })?;
    step(&mut d, "CR(S)", Rule::SingleVar)?;
    step(&mut d, "CR(S,I G L)", cit1("I"))?;
    step(&mut d, "CR(I,G,L)", Rule::Bipartition { left: vec![0] })?;
    step(&mut d, "CR(I)", Rule::SingleVar)?;
    step(&mut d, "CR(I,G L)", cit1("G"))?;
    Ok(finish(d))
}

/// Merges G with L, then I, then D into one block.
pub fn student_merge(ctx: CertContext<'_>) -> crfactor::Result<Derived> {
    let mut d = Derivation::new(student_initial(), ctx);
    step(&mut d, "CR(D,I,G,S,L)", Rule::Merge { i: 2, j: 4 })?;
    step(&mut d, "CR(D,I,S,G L)", Rule::Merge { i: 1, j: 3 })?;
    step(&mut d, "CR(I,G L)", cit1("G"))?;
    step(&mut d, "CR(D,S,I G L)", Rule::Merge { i: 0, j: 2 })?;
    step(&mut d, "CR(S,D I G L)", cit1("I"))?;
    step(&mut d, "CR(D,I G L)", cit1("G"))?;
    Ok(finish(d))
}

/// Partitions S out, then splits {D, I} from {G, L}.
pub fn student_partition_two(ctx: CertContext<'_>) -> crfactor::Result<Derived> {
    let mut d = Derivation::new(student_initial(), ctx);
    step(&mut d, "CR(D,I,G,S,L)", Rule::Bipartition { left: vec![3] })?;
    step(&mut d, "CR(S)", Rule::SingleVar)?;
    step(&mut d, "CR(S,D I G L)", cit1("I"))?;
    step(&mut d, "CR(D,I,G,L)", Rule::Bipartition { left: vec![0, 1] })?;
    step(&mut d, "CR(D,I)", Rule::Independence)?;
    step(&mut d, "CR(D I,G L)", Rule::Cit1 { x: 0, w: vec!["G".to_string()] })?;
    Ok(finish(d))
}

/// The CR part of a student-network result times `Π P(v)`.
pub fn with_marginals(cr_part: &str) -> FactorExpr {
    parse_expr(&format!("{cr_part}·P(D)·P(I)·P(G)·P(S)·P(L)")).unwrap()
}
