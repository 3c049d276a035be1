//! CPL-lite: the s-expression plan language hosting generalized action plans
//! and designators.
//!
//! ```text
//! (def-plan fetch&place (?object-to-be-fetched ?destination)
//!   (query-variables ?location-at-which-to-fetch ?arm-to-be-used ...)
//!   (with-robot-at-location ?location-at-which-to-fetch
//!     (perform (an action (type picking-up) (arm ?arm-to-be-used) ...)))
//!   ...)
//! ```
//!
//! Comments run from `;` to the end of the line. Poses are written
//! `(pose x y z yaw)` in meters and radians.

mod ast;
mod parse;
mod print;
mod sexpr;
mod subst;
mod validate;

pub use ast::{
    BufferMode, Condition, ControlNode, Designator, DesignatorKind, FluentDecl, Handler, Literal,
    PlanAst, PlanDef, Value, Variable, WaitMode,
};
pub use parse::{parse_plan, parse_value};
pub use print::{print_control, print_designator, print_literal, print_value, unparse_plan};
pub use sexpr::{read_all, Sexpr, SexprKind};
pub use subst::{free_variables, free_variables_in, substitute_bindings, substitute_nodes, Bindings};
pub use validate::{validate_plan, validate_plan_with, Diagnostic};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("syntax error at {line}:{column}: expected {expected}")]
    Syntax { line: usize, column: usize, expected: String },
    #[error("unknown construct `{token}` at {line}:{column}")]
    UnknownConstruct { token: String, line: usize, column: usize },
    #[error("duplicate designator key `{key}` at {line}:{column}")]
    DuplicateKey { key: String, line: usize, column: usize },
    #[error("binding for ?{variable} does not fit key `{key}`: expected {expected}")]
    TypeMismatch { variable: String, key: String, expected: &'static str },
}
