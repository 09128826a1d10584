//! Representability toolkit for probabilistic databases.
//!
//! Tuple-independent and block-independent-disjoint PDBs, first-order views
//! under active-domain semantics, and exact compilers that turn one
//! representation into another, each checkable by brute-force enumeration.

pub mod relmodel;
pub mod probspace;
pub mod compilers;
pub mod diagnostics;
pub mod io;
