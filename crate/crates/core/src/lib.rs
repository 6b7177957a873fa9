//! Compile ontological queries (tgds plus a conjunctive query) into
//! nonrecursive Datalog, evaluate the result over databases, and cross-check
//! it against a chase-based oracle.

pub mod chase;
pub mod dllite;
pub mod emitters;
pub mod evaluator;
pub mod gadgets;
pub mod harness;
pub mod model;
pub mod normalizer;
pub mod parser;
pub mod rewriter;

pub use model::*;
pub use parser::{
    parse_facts, parse_facts_with, parse_program, parse_query, parse_tgds, serialize_database, serialize_program,
    serialize_query, serialize_tgds, ParseError, SourceSpan,
};
