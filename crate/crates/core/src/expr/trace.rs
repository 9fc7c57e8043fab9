//! Recorded rewrite sequences with their independence certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{JointTable, ModelGraph};
use crate::separation::{graph_separated, numeric_ci_test, CiQuery, CI_TOL};

use super::{parse_expr, FactorExpr, Path, Rule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertSource {
    /// d-separation or vertex separation in the model graph.
    Separation,
    /// Numeric conditional-independence test on the joint table.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub query: CiQuery,
    pub source: CertSource,
}

/// What certificates are checked against.
#[derive(Debug, Clone, Copy)]
pub struct CertContext<'a> {
    pub graph: Option<&'a ModelGraph>,
    pub table: Option<&'a JointTable>,
    pub tol: f64,
}

impl<'a> CertContext<'a> {
    pub fn new(graph: Option<&'a ModelGraph>, table: Option<&'a JointTable>) -> Self {
        CertContext {
            graph,
            table,
            tol: CI_TOL,
        }
    }

    pub fn graph_only(graph: &'a ModelGraph) -> Self {
        CertContext::new(Some(graph), None)
    }

    pub fn table_only(table: &'a JointTable) -> Self {
        CertContext::new(None, Some(table))
    }

    /// Proves `q` by graph separation if possible, else numerically.
    pub fn certify(&self, q: &CiQuery) -> Result<Certificate> {
        if let Some(g) = self.graph {
            if graph_separated(g, q)? {
                return Ok(Certificate {
                    query: q.clone(),
                    source: CertSource::Separation,
                });
            }
        }
        if self.table.is_some() && self.numeric_holds(q)? {
            return Ok(Certificate {
                query: q.clone(),
                source: CertSource::Numeric,
            });
        }
        Err(Error::Certificate(format!("cannot establish {q}")))
    }

    fn numeric_holds(&self, q: &CiQuery) -> Result<bool> {
        let table = self.table.ok_or_else(|| Error::Certificate("no table for numeric certificates".into()))?;
        if !table.is_strictly_positive() {
            return Err(Error::Certificate("numeric certificates need a strictly positive table".into()));
        }
        numeric_ci_test(table, q, self.tol)
    }

    /// Re-validates a certificate from the source it claims.
    pub fn check(&self, cert: &Certificate) -> Result<()> {
        let holds = match cert.source {
            CertSource::Separation => {
                let g = self
                    .graph
                    .ok_or_else(|| Error::Certificate(format!("no graph to check {}", cert.query)))?;
                graph_separated(g, &cert.query)?
            }
            CertSource::Numeric => self.numeric_holds(&cert.query)?,
        };
        if !holds {
            return Err(Error::Certificate(format!("{} does not hold ({:?})", cert.query, cert.source)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub target: Path,
    #[serde(flatten)]
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OperationTrace {
    pub steps: Vec<Step>,
}

impl OperationTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

fn apply_step(expr: &FactorExpr, step: &Step, ctx: &CertContext<'_>) -> Result<FactorExpr> {
    let target = expr
        .get(&step.target)
        .ok_or_else(|| Error::rewrite(format!("no subterm at path {:?}", step.target)))?;
    let rw = step.rule.apply(target)?;
    for q in &rw.obligations {
        let cert = step
            .certificates
            .iter()
            .find(|c| c.query.same_statement(q))
            .ok_or_else(|| Error::Certificate(format!("{} step lacks a certificate for {q}", step.rule.name())))?;
        ctx.check(cert)?;
    }
    expr.replace(&step.target, rw.replacement)
}

/// Replays `trace` from `initial`, re-checking every certificate.
pub fn replay_trace(initial: &FactorExpr, trace: &OperationTrace, ctx: &CertContext<'_>) -> Result<FactorExpr> {
    trace
        .steps
        .iter()
        .enumerate()
        .try_fold(initial.clone(), |e, (i, step)| {
            apply_step(&e, step, ctx).map_err(|err| match err {
                Error::Rewrite(m) => Error::Rewrite(format!("step {}: {m}", i + 1)),
                Error::Certificate(m) => Error::Certificate(format!("step {}: {m}", i + 1)),
                other => other,
            })
        })
}

/// Applies rules one at a time, certifying obligations as it goes.
#[derive(Debug, Clone)]
pub struct Derivation<'a> {
    ctx: CertContext<'a>,
    initial: FactorExpr,
    current: FactorExpr,
    trace: OperationTrace,
}

impl<'a> Derivation<'a> {
    pub fn new(initial: FactorExpr, ctx: CertContext<'a>) -> Self {
        Derivation {
            ctx,
            current: initial.clone(),
            initial,
            trace: OperationTrace::default(),
        }
    }

    pub fn current(&self) -> &FactorExpr {
        &self.current
    }

    pub fn initial(&self) -> &FactorExpr {
        &self.initial
    }

    pub fn trace(&self) -> &OperationTrace {
        &self.trace
    }

    /// Applies `rule` at `target` and returns the replacement node.
    pub fn apply(&mut self, target: Path, rule: Rule) -> Result<FactorExpr> {
        let node = self
            .current
            .get(&target)
            .ok_or_else(|| Error::rewrite(format!("no subterm at path {target:?}")))?;
        let rw = rule.apply(node)?;
        let certificates = rw.obligations.iter().map(|q| self.ctx.certify(q)).collect::<Result<Vec<_>>>()?;
        self.current = self.current.replace(&target, rw.replacement.clone())?;
        self.trace.steps.push(Step {
            target,
            rule,
            certificates,
        });
        Ok(rw.replacement)
    }

    /// Applies `rule` to the first node matching `pred`.
    pub fn apply_first(&mut self, pred: &dyn Fn(&FactorExpr) -> bool, rule: Rule) -> Result<FactorExpr> {
        let path = self
            .current
            .find(pred)
            .ok_or_else(|| Error::rewrite(format!("no subterm matches for {}", rule.name())))?;
        self.apply(path, rule)
    }

    pub fn finish(self) -> (FactorExpr, OperationTrace) {
        (self.current, self.trace)
    }
}

/// On-disk trace: expressions as rendered text, steps as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub initial: String,
    pub steps: OperationTrace,
    #[serde(rename = "final", default, skip_serializing_if = "Option::is_none")]
    pub final_expr: Option<String>,
}

impl TraceFile {
    pub fn new(initial: &FactorExpr, steps: OperationTrace, final_expr: Option<&FactorExpr>) -> Self {
        TraceFile {
            initial: initial.to_string(),
            steps,
            final_expr: final_expr.map(ToString::to_string),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::ExprParse {
            offset: e.column(),
            message: format!("trace file line {}: {e}", e.line()),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace files always serialize")
    }

    pub fn initial_expr(&self) -> Result<FactorExpr> {
        parse_expr(&self.initial)
    }

    pub fn final_expr(&self) -> Result<Option<FactorExpr>> {
        self.final_expr.as_deref().map(parse_expr).transpose()
    }

    /// Replays the steps and, when the file states a final expression,
    /// checks that replay reproduces it exactly.
    pub fn replay(&self, ctx: &CertContext<'_>) -> Result<FactorExpr> {
        let out = replay_trace(&self.initial_expr()?, &self.steps, ctx)?;
        if let Some(expected) = self.final_expr()? {
            if expected != out {
                return Err(Error::rewrite(format!("replay produced `{out}`, file states `{expected}`")));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GraphKind, Variable};

    fn chain() -> ModelGraph {
        ModelGraph::with_edges(GraphKind::Undirected, &["A", "B", "C"], &[("A", "B"), ("B", "C")]).unwrap()
    }

    #[test]
    fn empty_trace_is_identity() {
        let e = parse_expr("CR(A,B)·P(A)").unwrap();
        let g = chain();
        assert_eq!(replay_trace(&e, &OperationTrace::default(), &CertContext::graph_only(&g)).unwrap(), e);
    }

    #[test]
    fn record_then_replay() {
        let g = chain();
        let ctx = CertContext::graph_only(&g);
        let mut d = Derivation::new(parse_expr("CR(A,B,C)").unwrap(), ctx);
        d.apply(vec![], Rule::Bipartition { left: vec![0] }).unwrap();
        d.apply(vec![2], Rule::Cit1 { x: 0, w: vec!["B".into()] }).unwrap();
        d.apply(vec![0], Rule::SingleVar).unwrap();
        let (out, trace) = d.finish();
        assert_eq!(out.to_string(), "CR(B,C)·CR(A,B)");
        assert_eq!(trace.steps[1].certificates[0].source, CertSource::Separation);
        let initial = parse_expr("CR(A,B,C)").unwrap();
        assert_eq!(replay_trace(&initial, &trace, &ctx).unwrap(), out);

        let file = TraceFile::new(&initial, trace.clone(), Some(&out));
        let back = TraceFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.replay(&ctx).unwrap(), out);
    }

    #[test]
    fn replay_rejects_false_or_missing_certificates() {
        let g = chain();
        let initial = parse_expr("CR(A,B C)").unwrap();
        let bad = OperationTrace {
            steps: vec![Step {
                target: vec![],
                rule: Rule::Cit1 { x: 0, w: vec!["C".into()] },
                certificates: vec![Certificate {
                    query: CiQuery::new(&["A"], &["B"], &["C"]),
                    source: CertSource::Separation,
                }],
            }],
        };
        let err = replay_trace(&initial, &bad, &CertContext::graph_only(&g)).unwrap_err();
        assert!(matches!(err, Error::Certificate(_)), "{err}");

        let mut missing = bad.clone();
        missing.steps[0].certificates.clear();
        assert!(matches!(
            replay_trace(&initial, &missing, &CertContext::graph_only(&g)),
            Err(Error::Certificate(_))
        ));

        let stale = OperationTrace {
            steps: vec![Step {
                target: vec![3],
                rule: Rule::SingleVar,
                certificates: vec![],
            }],
        };
        assert!(matches!(
            replay_trace(&initial, &stale, &CertContext::graph_only(&g)),
            Err(Error::Rewrite(_))
        ));
    }

    #[test]
    fn numeric_certificates_need_positive_tables() {
        let vars = vec![Variable::binary("A"), Variable::binary("B")];
        let zero = JointTable::new(vars.clone(), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let q = CiQuery::new(&["A"], &["B"], &[]);
        assert!(CertContext::table_only(&zero).certify(&q).is_err());
        let coins = JointTable::new(vars, vec![0.25; 4]).unwrap();
        let cert = CertContext::table_only(&coins).certify(&q).unwrap();
        assert_eq!(cert.source, CertSource::Numeric);
    }

    #[test]
    fn trace_json_layout() {
        let step = Step {
            target: vec![0, 2],
            rule: Rule::Merge { i: 1, j: 3 },
            certificates: vec![],
        };
        assert_eq!(
            serde_json::to_string(&step).unwrap(),
            r#"{"target":[0,2],"rule":"merge","i":1,"j":3}"#
        );
    }
}
