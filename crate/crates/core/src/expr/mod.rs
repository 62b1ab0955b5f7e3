//! Closed-form coordinate expressions.
//!
//! Expressions are parsed once against the declared coordinate and parameter
//! names and then evaluated over any [`Scalar`](crate::jet::Scalar): plain
//! `f64` for values, [`Jet2`](crate::jet::Jet2) for exact first and second
//! derivatives.
//!
//! Grammar:
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := factor (("*" | "/") factor)*
//! factor := "-" factor | base ("^" factor)?
//! base   := number | ident | ident "(" expr ")" | "(" expr ")"
//! ```

mod ast;
mod eval;
mod parser;

pub use ast::{BinaryOp, Expr, UnaryOp};
pub use eval::{eval_jet2, eval_value, finite_difference_oracle, Params};
pub use parser::parse_expression;
