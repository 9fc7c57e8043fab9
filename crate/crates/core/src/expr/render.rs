//! Text rendering. Blocks are comma-separated, variables inside a block are
//! space-separated, `|` introduces a condition, `=s` pins a state:
//!
//! ```text
//! CR(D,G)·CR(D I,G)·CR(y1,y2|X)·P(G|D I)·P(B=0)·CR(A,C)^-1·sum_C[P(C)]
//! ```

use std::fmt;

use super::{CrTerm, FactorExpr, PTerm};

pub(super) const PRODUCT_SEP: &str = "·";

fn write_exp(f: &mut fmt::Formatter<'_>, exp: i32) -> fmt::Result {
    if exp != 1 {
        write!(f, "^{exp}")?;
    }
    Ok(())
}

pub(super) fn write_cr(f: &mut fmt::Formatter<'_>, t: &CrTerm) -> fmt::Result {
    write!(f, "CR(")?;
    for (i, b) in t.blocks.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{b}")?;
    }
    if let Some(c) = &t.cond {
        write!(f, "|{c}")?;
    }
    write!(f, ")")?;
    write_exp(f, t.exp)
}

pub(super) fn write_p(f: &mut fmt::Formatter<'_>, t: &PTerm) -> fmt::Result {
    write!(f, "P({}", t.block)?;
    if let Some(c) = &t.cond {
        write!(f, "|{c}")?;
    }
    write!(f, ")")?;
    write_exp(f, t.exp)
}

impl fmt::Display for FactorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorExpr::Const(c) => write!(f, "{c}"),
            FactorExpr::Cr(t) => write_cr(f, t),
            FactorExpr::P(t) => write_p(f, t),
            FactorExpr::Sum { var, body } => write!(f, "sum_{var}[{body}]"),
            FactorExpr::Product(children) if children.is_empty() => write!(f, "1"),
            FactorExpr::Product(children) => {
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{PRODUCT_SEP}")?;
                    }
                    match c {
                        FactorExpr::Product(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}
