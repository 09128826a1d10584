//! Exact compilers between representations, each with a report of the
//! parameters it chose.

mod assign;
mod bid;
mod condition;
mod dagger;
mod representation;
mod sjfcq;

pub use assign::{
    assign_divergent_probs, assign_representable_probs, AssignedWorld, DivergentAssignment,
    RepresentableAssignment,
};
pub use bid::{bid_as_ti, block_q, compile_bid, compile_bid_to_ti, BidCompilationReport, BlockCompilation};
pub use condition::{characteristic_sentence, eliminate_condition, ConditionEliminationReport, Elimination};
pub use dagger::{
    dagger_check, dagger_compile, dagger_term, DaggerInput, DaggerReport, DaggerVerdict, SegmentEntry,
    SegmentationReport,
};
pub use representation::{
    compose_views, verify_representation, verify_representation_at, CompileError, Representation,
};
pub use sjfcq::{monotone_to_sjfcq, selector_marginal};
