//! Relational model: atoms, facts, instances, first-order formulas and views
//! under active-domain semantics.

mod atom;
mod eval;
mod formula;
mod fragment;
mod parser;
mod transform;

pub use atom::{Atom, Fact, Instance, Schema, SchemaError};
pub use eval::{active_domain, apply_view, evaluate, satisfies, EvalError, PreparedQuery, PreparedView};
pub use formula::{fresh_name, Formula, Query, QueryError, Term, View};
pub use fragment::{classify_fragment, classify_view, view_size_bound, Fragment};
pub use parser::{format_formula, parse_formula, parse_formula_checked, parse_term, ParseError};
pub use transform::{
    is_existential_form, relativize_to_copy, to_existential_form, CopyNaming, TransformError,
};
