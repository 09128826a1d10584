//! Bounds, worlds-level witnesses and fixture families: moment inequalities,
//! the view-probability bound, maximal-world and mutual-exclusion
//! witnesses, and edge-independent graph constructions.

mod bound;
mod edges;
mod moments;
mod witness;

use thiserror::Error;

use crate::compilers::CompileError;
use crate::probspace::PdbError;
use crate::relmodel::EvalError;

pub use bound::{disjoint_bound_table, disjoint_bound_value, view_prob_bound, BoundReport, DisjointBoundRow};
pub use edges::{all_worlds_symmetric, edge_graph_cq_rep, edge_marginal, edge_graph_ti, edge_graph_ucq_rep, EdgeGraphSpec};
pub use moments::{finite_moments_report, image_moment_bound, moment_inequality_check, ImageMomentBound, MomentCheck};
pub use witness::{max_world_check, mutual_exclusive_witness, Witness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagError {
    #[error(transparent)]
    Pdb(#[from] PdbError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("input must be a finite PDB")]
    NotFinite,
}
