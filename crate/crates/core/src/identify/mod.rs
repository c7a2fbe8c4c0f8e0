//! Identification of interventional distributions by search over the rules
//! of do-calculus and standard probability manipulations.
//!
//! A successful search returns a [`Derivation`]: the ordered list of rule
//! applications leading from the inputs to the query, each do-calculus step
//! carrying the d-separation statement that licensed it. [`verify`]
//! re-checks a derivation without searching.

mod rules;
mod search;
mod verify;

use serde::{Deserialize, Serialize};

pub use rules::{chain_condition_expr, condition_expr, marginalize_expr, product_expr, Rule, SideCondition};
pub use search::{derive, expand, search, Identified, SearchBudget, SearchOptions, SearchOutcome, SearchStatus};
pub use verify::verify;

use crate::symexpr::{DistTerm, Expr};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationStep {
    pub rule: Rule,
    /// Indices into the inputs followed by the earlier steps.
    pub premises: Vec<usize>,
    /// The distribution identified by this step.
    pub term: DistTerm,
    pub conclusion: Expr,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_condition: Option<SideCondition>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub inputs: Vec<DistTerm>,
    pub query: DistTerm,
    pub steps: Vec<DerivationStep>,
    pub result: Expr,
}

impl Derivation {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("derivations serialize")
    }

    /// Human-readable trace, one line per step.
    pub fn trace(&self) -> String {
        let k = self.inputs.len();
        let label = |i: usize| {
            if i < k {
                format!("in{i}")
            } else {
                format!("s{}", i - k)
            }
        };
        let mut out = String::new();
        for (i, t) in self.inputs.iter().enumerate() {
            out.push_str(&format!("in{i}: {t}\n"));
        }
        for (i, s) in self.steps.iter().enumerate() {
            let prem: Vec<String> = s.premises.iter().map(|&p| label(p)).collect();
            out.push_str(&format!(
                "s{i}: {} [{}] from {}",
                s.term,
                s.rule.name(),
                prem.join(", ")
            ));
            if let Some(c) = &s.side_condition {
                out.push_str(&format!(
                    "  since ({}) _||_ ({}) | ({}) with incoming cut ({}) and outgoing cut ({})",
                    crate::var::join_names(&c.separated),
                    crate::var::join_names(&c.from),
                    crate::var::join_names(&c.given),
                    crate::var::join_names(&c.mutilation.cut_incoming),
                    crate::var::join_names(&c.mutilation.cut_outgoing),
                ));
            }
            out.push('\n');
        }
        out
    }
}
