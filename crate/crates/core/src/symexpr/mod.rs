//! Symbolic probability terms and expressions.

mod eval;
mod expr;
mod parse;
pub mod render;
mod term;

pub use eval::{
    advance, all_assignments, evaluate, evaluate_with_diagnostics, Assignment, DistOracle, EvalDiagnostics,
};
pub use expr::{is_adjustment, Expr};
pub use parse::{parse_dist_term, parse_json, parse_latex};
pub use render::{render, Style};
pub use term::DistTerm;
