//! Trapdoor variables: free variables of an identifying functional that
//! must be fixed in estimation although its value does not depend on
//! them, and whose removal from the graph leaves the query underivable.

use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::admg::Admg;
use crate::error::{Error, Result};
use crate::identify::{search, SearchBudget, SearchOptions, SearchStatus};
use crate::symexpr::{all_assignments, evaluate, DistOracle, DistTerm, Expr};
use crate::var::{Var, VarSet};

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Free variables of `e` that the query does not assign.
pub fn candidates(e: &Expr, query: &DistTerm) -> VarSet {
    e.free_vars()
        .into_iter()
        .filter(|v| !query.outcomes().contains(v) && !query.interventions().contains(v))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Independence {
    pub independent: bool,
    /// Largest spread of the functional across the values of the variable.
    pub max_deviation: f64,
}

/// Evaluates `e` at every joint value of the query variables and the other
/// free variables, once per value of `v`, and compares the results.
pub fn check_functional_independence(
    e: &Expr,
    v: &Var,
    query: &DistTerm,
    oracle: &(impl DistOracle + Sync),
    tol: f64,
) -> Result<Independence> {
    let card = |x: &Var| {
        oracle
            .cardinality(x)
            .ok_or_else(|| Error::input(format!("the oracle does not know `{}`", x.name)))
    };
    let k = card(v)?;
    let mut context: Vec<(String, usize)> = Vec::new();
    for x in query.variables().iter().chain(e.free_vars().iter()) {
        if x == v || x.is_regime() || context.iter().any(|(n, _)| *n == x.name) {
            continue;
        }
        context.push((x.name.clone(), card(x)?));
    }
    let max_deviation = all_assignments(&context)
        .par_iter()
        .map(|a| -> Result<f64> {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for value in 0..k {
                let y = evaluate(e, oracle, &a.clone().with(&v.name, value))?;
                lo = lo.min(y);
                hi = hi.max(y);
            }
            Ok(hi - lo)
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(Independence {
        independent: max_deviation <= tol,
        max_deviation,
    })
}

/// The inputs as seen in the latent projection without `removed`.
/// Removed outcomes are marginalized; an input conditioned on or
/// intervening on a removed variable is dropped.
pub fn project_inputs(inputs: &[DistTerm], removed: &VarSet) -> Vec<DistTerm> {
    let mut out = Vec::new();
    for t in inputs {
        if t.interventions()
            .iter()
            .chain(t.conditions())
            .any(|v| removed.contains(v))
        {
            warn!("dropping {t}: it is conditioned on a removed variable");
            continue;
        }
        let outcomes: VarSet = t.outcomes().difference(removed).cloned().collect();
        if outcomes.is_empty() {
            continue;
        }
        let projected =
            DistTerm::new(outcomes, t.interventions().clone(), t.conditions().clone()).expect("subset of a valid term");
        if !out.contains(&projected) {
            out.push(projected);
        }
    }
    out
}

/// Searches for the query in the latent projection of `g` onto the
/// vertices outside `removed`.
pub fn check_projection(
    g: &Admg,
    inputs: &[DistTerm],
    query: &DistTerm,
    removed: &VarSet,
    budget: &SearchBudget,
) -> Result<SearchStatus> {
    for v in removed {
        if g.get(&v.name).is_none() {
            return Err(Error::input(format!("`{}` is not a vertex", v.name)));
        }
        if query.variables().contains(v) {
            return Err(Error::input(format!("cannot project out query variable `{}`", v.name)));
        }
    }
    let keep: VarSet = g.vertex_set().difference(removed).cloned().collect();
    let projected = g.latent_project(&keep)?;
    let inputs = project_inputs(inputs, removed);
    if inputs.is_empty() {
        return Ok(SearchStatus::SearchSpaceExhausted);
    }
    let opts = SearchOptions {
        budget: budget.clone(),
        ..SearchOptions::default()
    };
    Ok(search(&projected, &inputs, query, &opts)?.status)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrapdoorReport {
    pub query: DistTerm,
    pub candidates: VarSet,
    pub confirmed: VarSet,
    pub independence: BTreeMap<String, Independence>,
    /// Search outcome on the projection without each candidate.
    pub projection: BTreeMap<String, SearchStatus>,
    /// Search outcome on the projection without all candidates together,
    /// when there are several.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub joint_projection: Option<SearchStatus>,
    pub tolerance: f64,
    pub budget: SearchBudget,
}

impl TrapdoorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Runs both checks for every candidate of `e`. A candidate is confirmed
/// when the functional does not depend on it and the query is not found in
/// the projection without it.
pub fn analyze(
    g: &Admg,
    inputs: &[DistTerm],
    query: &DistTerm,
    e: &Expr,
    oracle: &(impl DistOracle + Sync),
    tol: f64,
    budget: &SearchBudget,
) -> Result<TrapdoorReport> {
    let cands = candidates(e, query);
    let mut independence = BTreeMap::new();
    let mut projection = BTreeMap::new();
    let mut confirmed = VarSet::new();
    for v in &cands {
        let ind = check_functional_independence(e, v, query, oracle, tol)?;
        let removed: VarSet = [v.clone()].into();
        let status = check_projection(g, inputs, query, &removed, budget)?;
        if ind.independent && status != SearchStatus::Found {
            confirmed.insert(v.clone());
        }
        independence.insert(v.name.clone(), ind);
        projection.insert(v.name.clone(), status);
    }
    let joint_projection = if cands.len() > 1 {
        Some(check_projection(g, inputs, query, &cands, budget)?)
    } else {
        None
    };
    Ok(TrapdoorReport {
        query: query.clone(),
        candidates: cands,
        confirmed,
        independence,
        projection,
        joint_projection,
        tolerance: tol,
        budget: budget.clone(),
    })
}
