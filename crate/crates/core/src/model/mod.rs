//! Discrete variables, joint tables, graphs and the model file format.

mod cpt;
mod file;
mod gibbs;
mod graph;
mod table;
mod variable;

pub use cpt::{build_joint_from_cpts, Cpt};
pub use file::{parse_model, parse_model_with_cap, write_model, Distribution, Model};
pub use gibbs::{GibbsModel, Potential, DEFAULT_MAX_NODES};
pub use graph::{Clique, GraphKind, ModelGraph, MAX_GRAPH_NODES};
pub(crate) use graph::NodeMask;
pub use table::{JointTable, INPUT_NORMALIZATION_TOL, NORMALIZATION_TOL};
pub use variable::{is_identifier, state_tuples, Assignment, StateTuples, Variable};
