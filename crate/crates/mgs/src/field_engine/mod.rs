//! Symbolic scalar fields and coordinate calculus on a chart box.

pub mod calculus;
pub mod expr;

pub use calculus::*;
pub use expr::{parse, EvalError, FieldExpr, Func, ParseError};
