//! Independent re-check of a derivation, step by step.

use super::rules::{chain_condition_expr, condition_expr, marginalize_expr, product_expr, Rule, SideCondition};
use super::Derivation;
use crate::admg::{Admg, Mutilation};
use crate::error::{Error, Result};
use crate::symexpr::{DistTerm, Expr};
use crate::var::{Var, VarSet};

/// True iff every do-calculus step's side condition is the one its rule
/// requires and holds in the recorded mutilated graph, every probability
/// step is algebraically legal, and the result is the final conclusion.
pub fn verify(g: &Admg, d: &Derivation) -> Result<bool> {
    for t in d.inputs.iter().chain([&d.query]) {
        g.mask_of(&t.variables())?;
    }
    let k = d.inputs.len();
    let mut known: Vec<(DistTerm, Expr)> = d.inputs.iter().map(|t| (t.clone(), Expr::Atom(t.clone()))).collect();
    for (i, step) in d.steps.iter().enumerate() {
        for &p in &step.premises {
            if p >= k + i {
                return Err(Error::Structural(format!(
                    "step {i} refers to premise {p}, which is not an input or earlier step"
                )));
            }
        }
        g.mask_of(&step.term.variables())?;
        let prem: Vec<&(DistTerm, Expr)> = step.premises.iter().map(|&p| &known[p]).collect();
        let expected = match step_expectation(g, step.rule, &prem, &step.term, &d.inputs)? {
            Some(x) => x,
            None => return Ok(false),
        };
        let (expr, side) = expected;
        if expr != step.conclusion || side != step.side_condition {
            return Ok(false);
        }
        if let Some(sc) = &side {
            let m = g.mutilate(&sc.mutilation)?;
            if !m.d_separated(&sc.separated, &sc.from, &sc.given)? {
                return Ok(false);
            }
        }
        known.push((step.term.clone(), step.conclusion.clone()));
    }
    let (last_term, last_expr) = known.last().expect("inputs are nonempty or steps exist");
    let final_ok = match d.steps.last() {
        Some(_) => last_term == &d.query && last_expr == &d.result,
        None => d.inputs.contains(&d.query) && d.result == Expr::Atom(d.query.clone()),
    };
    let atoms_ok = d.result.atoms().iter().all(|a| d.inputs.iter().any(|i| i.covers(a)));
    Ok(final_ok && atoms_ok)
}

type Expected = (Expr, Option<SideCondition>);

fn only(set: VarSet) -> Option<Var> {
    (set.len() == 1).then(|| set.into_iter().next().unwrap())
}

fn minus(a: &VarSet, b: &VarSet) -> VarSet {
    a.difference(b).cloned().collect()
}

fn union(a: &VarSet, b: &VarSet) -> VarSet {
    a.union(b).cloned().collect()
}

/// The conclusion and side condition a rule must produce from its premises,
/// or `None` when the rule does not apply to them.
fn step_expectation(
    g: &Admg,
    rule: Rule,
    prem: &[&(DistTerm, Expr)],
    t: &DistTerm,
    inputs: &[DistTerm],
) -> Result<Option<Expected>> {
    let arity = match rule {
        Rule::Product | Rule::ConditionChain => 2,
        _ => 1,
    };
    if prem.len() != arity {
        return Ok(None);
    }
    let (p, pe) = (&prem[0].0, &prem[0].1);
    let (o, dd, c) = (t.outcomes(), t.interventions(), t.conditions());
    let side = |cut_in: VarSet, cut_out: VarSet, v: &Var, given: VarSet| SideCondition {
        mutilation: Mutilation::new(cut_in, cut_out),
        separated: o.clone(),
        from: [v.clone()].into(),
        given,
    };
    let out = match rule {
        Rule::Observation => {
            if p.outcomes() != o || p.interventions() != dd {
                return Ok(None);
            }
            let diff: VarSet = p.conditions().symmetric_difference(c).cloned().collect();
            let Some(v) = only(diff) else { return Ok(None) };
            let smaller: VarSet = minus(c, &[v.clone()].into());
            let given = union(dd, &smaller);
            Some((pe.clone(), Some(side(dd.clone(), VarSet::new(), &v, given))))
        }
        Rule::Exchange => {
            if p.outcomes() != o {
                return Ok(None);
            }
            let v = if let Some(v) = only(minus(dd, p.interventions())) {
                // observation -> action
                if minus(p.conditions(), c) != [v.clone()].into() || !minus(c, p.conditions()).is_empty() {
                    return Ok(None);
                }
                v
            } else if let Some(v) = only(minus(p.interventions(), dd)) {
                if minus(c, p.conditions()) != [v.clone()].into() || !minus(p.conditions(), c).is_empty() {
                    return Ok(None);
                }
                v
            } else {
                return Ok(None);
            };
            if v.is_regime() {
                return Ok(None);
            }
            let one: VarSet = [v.clone()].into();
            let d_rest = minus(&union(dd, p.interventions()), &one);
            let c_rest = minus(&union(c, p.conditions()), &one);
            let given = union(&d_rest, &c_rest);
            Some((pe.clone(), Some(side(d_rest, one, &v, given))))
        }
        Rule::Action => {
            if p.outcomes() != o || p.conditions() != c {
                return Ok(None);
            }
            let diff: VarSet = p.interventions().symmetric_difference(dd).cloned().collect();
            let Some(v) = only(diff) else { return Ok(None) };
            if v.is_regime() {
                return Ok(None);
            }
            let d_rest = minus(&union(dd, p.interventions()), &[v.clone()].into());
            let cut = g.mutilate(&Mutilation::new(d_rest.clone(), VarSet::new()))?;
            let mut cut_in = d_rest.clone();
            if !cut.ancestors(c)?.contains(&v) {
                cut_in.insert(v.clone());
            }
            let given = union(&d_rest, c);
            Some((pe.clone(), Some(side(cut_in, VarSet::new(), &v, given))))
        }
        Rule::Marginalize => {
            if p.interventions() != dd || p.conditions() != c || !o.is_subset(p.outcomes()) {
                return Ok(None);
            }
            let Some(v) = only(minus(p.outcomes(), o)) else {
                return Ok(None);
            };
            Some((marginalize_expr(pe, &v), None))
        }
        Rule::QuotientCondition => {
            if p.interventions() != dd || !o.is_subset(p.outcomes()) {
                return Ok(None);
            }
            let Some(v) = only(minus(p.outcomes(), o)) else {
                return Ok(None);
            };
            if *c != union(p.conditions(), &[v.clone()].into()) {
                return Ok(None);
            }
            Some((condition_expr(pe, p.outcomes(), &v), None))
        }
        Rule::Product => {
            let (m, me) = (&prem[1].0, &prem[1].1);
            let ok = p.interventions() == dd
                && m.interventions() == dd
                && *p.conditions() == union(m.conditions(), m.outcomes())
                && m.conditions() == c
                && *o == union(p.outcomes(), m.outcomes());
            ok.then(|| (product_expr(pe, me, inputs), None))
        }
        Rule::ConditionChain => {
            let (m, me) = (&prem[1].0, &prem[1].1);
            let moved = m.outcomes();
            let ok = p.interventions() == dd
                && m.interventions() == dd
                && p.conditions() == m.conditions()
                && moved.is_subset(p.outcomes())
                && moved != p.outcomes()
                && *o == minus(p.outcomes(), moved)
                && *c == union(p.conditions(), moved);
            ok.then(|| (chain_condition_expr(pe, me, moved), None))
        }
    };
    Ok(out)
}
