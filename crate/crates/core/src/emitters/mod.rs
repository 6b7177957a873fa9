//! Serializations of nonrecursive programs: SQL view stacks and inlined
//! first-order formulas.

mod fo;
mod sql;

#[cfg(test)]
mod tests;

use thiserror::Error;

pub use fo::{parse_fo, to_fo_formula, Fo, FoParseError, FoQuery, FoTerm};
pub use sql::{parse_sql_value, sql_value, to_sql, to_sql_with_facts, SqlScript};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmitError {
    #[error("program is recursive")]
    Recursive,
}
