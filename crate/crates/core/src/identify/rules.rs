//! Rule vocabulary, side-condition certificates and the expression builders
//! shared by the search and the verifier.

use serde::{Deserialize, Serialize};

use crate::admg::Mutilation;
use crate::symexpr::{DistTerm, Expr};
use crate::var::{Var, VarSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Rule {
    #[serde(rename = "docalc-1-insert/delete-observation")]
    Observation,
    #[serde(rename = "docalc-2-exchange-action-observation")]
    Exchange,
    #[serde(rename = "docalc-3-insert/delete-action")]
    Action,
    #[serde(rename = "marginalize")]
    Marginalize,
    /// P(A|do(D),C) = P(A,B|do(D),C) / P(B|do(D),C) with both right-hand
    /// terms already identified.
    #[serde(rename = "condition-chain-rule")]
    ConditionChain,
    /// P(A,B|do(D),C) = P(A|do(D),B,C) P(B|do(D),C).
    #[serde(rename = "product-compose")]
    Product,
    /// P(A|do(D),B,C) = P(A,B|do(D),C) / sum_A P(A,B|do(D),C).
    #[serde(rename = "quotient-condition")]
    QuotientCondition,
}

impl Rule {
    pub fn is_do_calculus(self) -> bool {
        matches!(self, Rule::Observation | Rule::Exchange | Rule::Action)
    }

    pub fn name(self) -> &'static str {
        match self {
            Rule::Observation => "docalc-1-insert/delete-observation",
            Rule::Exchange => "docalc-2-exchange-action-observation",
            Rule::Action => "docalc-3-insert/delete-action",
            Rule::Marginalize => "marginalize",
            Rule::ConditionChain => "condition-chain-rule",
            Rule::Product => "product-compose",
            Rule::QuotientCondition => "quotient-condition",
        }
    }
}

/// A d-separation statement `separated ⊥ from | given` in the graph
/// mutilated by `mutilation`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SideCondition {
    pub mutilation: Mutilation,
    pub separated: VarSet,
    pub from: VarSet,
    pub given: VarSet,
}

/// Removes `v` from the outcomes of the expression's distribution.
pub fn marginalize_expr(e: &Expr, v: &Var) -> Expr {
    match e {
        Expr::Atom(a) => {
            let mut out = a.outcomes().clone();
            out.remove(v);
            Expr::Atom(
                DistTerm::new(out, a.interventions().clone(), a.conditions().clone())
                    .expect("marginal of a valid atom"),
            )
        }
        _ => Expr::sum([v.clone()].into(), e.clone()),
    }
}

/// Moves `v` from the outcomes into the conditions; `outcomes` are the
/// outcomes of the distribution represented by `e`.
pub fn condition_expr(e: &Expr, outcomes: &VarSet, v: &Var) -> Expr {
    match e {
        Expr::Atom(a) => {
            let mut out = a.outcomes().clone();
            out.remove(v);
            let mut cond = a.conditions().clone();
            cond.insert(v.clone());
            Expr::Atom(DistTerm::new(out, a.interventions().clone(), cond).expect("conditional of a valid atom"))
        }
        _ => {
            let mut rest = outcomes.clone();
            rest.remove(v);
            Expr::quotient(e.clone(), Expr::sum(rest, e.clone()))
        }
    }
}

/// Quotient of a joint by one of its marginals, moving `moved` into the
/// conditions.
pub fn chain_condition_expr(joint: &Expr, marginal: &Expr, moved: &VarSet) -> Expr {
    match joint {
        Expr::Atom(a) => {
            let out: VarSet = a.outcomes().difference(moved).cloned().collect();
            let cond: VarSet = a.conditions().union(moved).cloned().collect();
            Expr::Atom(DistTerm::new(out, a.interventions().clone(), cond).expect("conditional of a valid atom"))
        }
        _ => Expr::quotient(joint.clone(), marginal.clone()),
    }
}

/// Product of a conditional and the marginal of its conditioning
/// variables. Two atoms that recombine into a single atom covered by one
/// input collapse into that atom.
pub fn product_expr(conditional: &Expr, marginal: &Expr, inputs: &[DistTerm]) -> Expr {
    if let (Expr::Atom(a), Expr::Atom(b)) = (conditional, marginal) {
        if a.interventions() == b.interventions()
            && *a.conditions() == b.conditions().union(b.outcomes()).cloned().collect::<VarSet>()
        {
            let merged = DistTerm::new(
                a.outcomes().union(b.outcomes()).cloned().collect(),
                a.interventions().clone(),
                b.conditions().clone(),
            );
            if let Ok(m) = merged {
                if inputs.iter().any(|i| i.covers(&m)) {
                    return Expr::Atom(m);
                }
            }
        }
    }
    Expr::product(vec![conditional.clone(), marginal.clone()])
}
