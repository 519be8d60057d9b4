//! MOQL, a small expression language over the moving-object algebra.
//!
//! A query is a single expression: a literal or a function call whose
//! arguments are expressions. String literals that look like ISO-8601
//! timestamps are timestamps, and `periods("a", "b")` is a period literal:
//!
//! ```text
//! trajectory(atperiods(mo(1033), periods("2011-01-21T00:04:42.600Z", "2011-01-21T00:10:03.000Z")))
//! ```
//!
//! Queries are parsed, type-checked against the function table and then
//! evaluated over a network and a store. Function names are
//! case-insensitive.

mod ast;
mod eval;
mod functions;
mod parser;
pub mod templates;

use thiserror::Error;

pub use ast::{Expr, ExprKind, Span};
pub use eval::{eval, Context, Value};
pub use functions::{signatures, typecheck, Signature, Type, FUNCTIONS};
pub use parser::parse;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoqlError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("type error at {line}:{col}: {msg}")]
    Type { line: usize, col: usize, msg: String },
    #[error("error at {line}:{col}: {msg}")]
    Eval { line: usize, col: usize, msg: String },
}

impl MoqlError {
    /// 1-based line and column of the offending token.
    pub fn position(&self) -> (usize, usize) {
        match self {
            MoqlError::Syntax { line, col, .. }
            | MoqlError::Type { line, col, .. }
            | MoqlError::Eval { line, col, .. } => (*line, *col),
        }
    }
}

/// Parses, type-checks and evaluates one query.
pub fn run(text: &str, ctx: &Context) -> Result<Value, MoqlError> {
    let expr = parse(text)?;
    typecheck(&expr)?;
    eval(&expr, ctx)
}
