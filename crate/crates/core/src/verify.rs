//! Brute-force comparison of expressions against a joint table.

use std::fmt;

use crate::cr::Block;
use crate::error::{Error, Result};
use crate::expr::FactorExpr;
use crate::model::{Assignment, JointTable};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Differences below this are treated as exact.
pub const ABS_FLOOR: f64 = 1e-12;

/// Relative error with an absolute floor.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff <= ABS_FLOOR {
        0.0
    } else {
        diff / a.abs().max(b.abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub assignments_checked: usize,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// First assignment with the largest absolute error.
    pub worst_assignment: Assignment,
    pub tol: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn new(tol: f64) -> Self {
        VerificationReport {
            assignments_checked: 0,
            max_abs_error: 0.0,
            max_rel_error: 0.0,
            worst_assignment: Assignment::new(),
            tol,
            pass: true,
        }
    }

    fn record(&mut self, a: &Assignment, got: f64, want: f64) {
        self.assignments_checked += 1;
        let abs = (got - want).abs();
        if abs > self.max_abs_error || self.assignments_checked == 1 {
            self.max_abs_error = abs;
            self.worst_assignment = a.clone();
        }
        self.max_rel_error = self.max_rel_error.max(rel_err(got, want));
        self.pass = self.max_rel_error <= self.tol;
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} assignments, max abs error {:.3e}, max rel error {:.3e} (tol {:.0e}), worst at {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.assignments_checked,
            self.max_abs_error,
            self.max_rel_error,
            self.tol,
            self.worst_assignment
        )
    }
}

fn located(e: Error, a: &Assignment) -> Error {
    match e {
        Error::UndefinedCr(m) => Error::UndefinedCr(format!("{m} at {a}")),
        Error::UndefinedConditional(m) => Error::UndefinedConditional(format!("{m} at {a}")),
        other => other,
    }
}

/// Evaluates `expr` at every full assignment and compares with the table.
pub fn verify_joint(expr: &FactorExpr, table: &JointTable, tol: f64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(tol);
    for (a, states) in table.assignments().zip(table.state_tuples()) {
        let got = expr.eval(table, &a).map_err(|e| located(e, &a))?;
        report.record(&a, got, table.prob_at(&states));
    }
    Ok(report)
}

/// Compares `expr` with `P(target | given)` at every full assignment where
/// the conditioning event has positive probability.
pub fn verify_conditional(
    expr: &FactorExpr,
    table: &JointTable,
    target: &[String],
    given: &[String],
    tol: f64,
) -> Result<VerificationReport> {
    let (tb, gb) = (Block::free(target), Block::free(given));
    let mut report = VerificationReport::new(tol);
    for a in table.assignments() {
        let want = match table.conditional_prob(&tb, &gb, &a) {
            Ok(p) => p,
            Err(Error::UndefinedConditional(_)) => continue,
            Err(e) => return Err(e),
        };
        let got = expr.eval(table, &a).map_err(|e| located(e, &a))?;
        report.record(&a, got, want);
    }
    Ok(report)
}

/// Largest relative disagreement between two expressions over all full
/// assignments.
pub fn max_deviation(a: &FactorExpr, b: &FactorExpr, table: &JointTable) -> Result<f64> {
    table.assignments().try_fold(0.0f64, |worst, asg| {
        Ok(worst.max(rel_err(a.eval(table, &asg)?, b.eval(table, &asg)?)))
    })
}
