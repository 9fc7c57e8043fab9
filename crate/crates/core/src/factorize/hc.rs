//! Candidate clique potentials built from default-configuration
//! probabilities, and the MRF/RMRF factorizations assembled from them.

use crate::cr::{Binding, Block};
use crate::error::{Error, Result};
use crate::expr::{FactorExpr, PTerm};
use crate::model::{Assignment, Clique, JointTable, ModelGraph};

use super::{require_markov, require_positive, require_same_variables};

fn default_of(defaults: &Assignment, name: &str) -> Result<usize> {
    defaults.get(name).ok_or_else(|| Error::Unbound(name.to_string()))
}

/// Block over `scope` (in the given order): members of `free` read from the
/// assignment, the rest pinned to their defaults.
fn partly_pinned(scope: &[&str], free: &[&str], defaults: &Assignment) -> Result<Block> {
    let members = scope
        .iter()
        .map(|&n| {
            let binding = if free.contains(&n) {
                Binding::Free
            } else {
                Binding::Pinned(default_of(defaults, n)?)
            };
            Ok((n.to_string(), binding))
        })
        .collect::<Result<Vec<_>>>()?;
    Block::new(members)
}

/// Subsets of `c` with the sign `(-1)^(|c| - |s|)` as an exponent.
fn signed_subsets(c: &Clique) -> Vec<(Vec<&str>, i32)> {
    let m = c.members();
    (0u32..1 << m.len())
        .map(|mask| {
            let s: Vec<&str> = (0..m.len()).filter(|i| mask & (1 << i) != 0).map(|i| m[i].as_str()).collect();
            let sign = if (m.len() - s.len()).is_multiple_of(2) { 1 } else { -1 };
            (s, sign)
        })
        .collect()
}

/// `Π_{s ⊆ c} P(X_s = x_s, X_rest = 0)^((-1)^(|c| - |s|))` over every table
/// variable, with `0` meaning the default state.
pub fn hc_potential(table: &JointTable, clique: &Clique, defaults: &Assignment) -> Result<FactorExpr> {
    require_positive(table)?;
    let scope = table.names();
    for n in clique.members() {
        table.index_of(n)?;
    }
    let factors = signed_subsets(clique)
        .into_iter()
        .map(|(s, sign)| {
            Ok(FactorExpr::P(PTerm {
                block: partly_pinned(&scope, &s, defaults)?,
                cond: None,
                exp: sign,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FactorExpr::Product(factors))
}

/// Groups every clique's candidate potential into the lexicographically
/// first maximal clique containing it. The product of the returned
/// potentials is the joint.
pub fn mrf_factorize(table: &JointTable, g: &ModelGraph, defaults: &Assignment) -> Result<Vec<(Clique, FactorExpr)>> {
    require_positive(table)?;
    require_same_variables(table, g)?;
    require_markov(table, g)?;
    let maximal = g.maximal_cliques()?;
    let mut grouped: Vec<(Clique, Vec<FactorExpr>)> = maximal.iter().map(|c| (c.clone(), Vec::new())).collect();
    for c in g.all_cliques()? {
        let slot = grouped
            .iter_mut()
            .find(|(m, _)| c.is_subset(m))
            .expect("every clique lies in a maximal clique");
        slot.1.push(hc_potential(table, &c, defaults)?);
    }
    Ok(grouped
        .into_iter()
        .map(|(c, fs)| (c, FactorExpr::product(fs)))
        .collect())
}

/// Product of grouped potentials, each kept as its own parenthesized factor.
pub fn mrf_expression(potentials: &[(Clique, FactorExpr)]) -> FactorExpr {
    FactorExpr::Product(potentials.iter().map(|(_, f)| f.clone()).collect())
}

/// Refined factorization: each non-empty clique `c` contributes
/// `Π_{s ⊆ c} P(X_s = x_s, X_{c∖s} = 0 | X_MB(c) = 0)^((-1)^(|c| - |s|))`.
/// The empty clique keeps its unrefined factor `P(X = 0)`, since the
/// `P(X_{G∖c} = 0)` terms cancel only for non-empty cliques.
pub fn rmrf_factorize(table: &JointTable, g: &ModelGraph, defaults: &Assignment) -> Result<FactorExpr> {
    require_positive(table)?;
    require_same_variables(table, g)?;
    require_markov(table, g)?;
    let mut factors = Vec::new();
    for c in g.all_cliques()? {
        if c.is_empty() {
            factors.push(FactorExpr::p(partly_pinned(&table.names(), &[], defaults)?));
            continue;
        }
        let members: Vec<&str> = c.members().iter().map(String::as_str).collect();
        let blanket = g.markov_blanket(c.members())?;
        let blanket: Vec<&str> = blanket.iter().map(String::as_str).collect();
        let cond = partly_pinned(&blanket, &[], defaults)?;
        for (s, sign) in signed_subsets(&c) {
            factors.push(FactorExpr::P(PTerm {
                block: partly_pinned(&members, &s, defaults)?,
                cond: (!cond.is_empty()).then(|| cond.clone()),
                exp: sign,
            }));
        }
    }
    Ok(FactorExpr::Product(factors))
}
