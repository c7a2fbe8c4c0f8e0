//! Causal effect identification from multiple data sources by do-calculus
//! search, trapdoor-variable detection, plug-in estimation and structural
//! causal model simulation.

pub mod admg;
pub mod builtin;
pub mod cli;
pub mod dsl;
pub mod error;
pub mod estimate;
pub mod identify;
pub mod scmsim;
pub mod symexpr;
pub mod trapdoor;
pub mod var;

pub use admg::{Admg, Mutilation};
pub use error::{Error, Result};
pub use identify::{derive, verify, Derivation, SearchBudget};
pub use symexpr::{Assignment, DistOracle, DistTerm, Expr};
pub use var::{Var, VarSet, VertexKind};
